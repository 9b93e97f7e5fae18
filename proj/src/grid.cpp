#include "slitfb/grid.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace slitfb {

namespace {

double norm(const std::array<double, 3>& x, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += x[k] * x[k];
    return std::sqrt(s);
}

} // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
    if (spec.dim != 2 && spec.dim != 3) throw std::invalid_argument("Grid: dim must be 2 or 3");
    if (!(spec.h > 0.0) || !(spec.extent > 0.0)) throw std::invalid_argument("Grid: h and extent must be positive");
    if (spec.symmetric_in_xn) spec_.half_in_xn = true;

    const double ratio = spec.extent / spec.h;
    m_ = static_cast<int>(std::lround(ratio));
    if (m_ < 2 || std::abs(ratio - m_) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument("Grid: h must divide extent with at least two cells per half-axis");
    }
    lo_n_ = spec_.half_in_xn ? 0 : -m_;

    const int nt = 2 * m_ + 1;
    const int nn = m_ - lo_n_ + 1;
    for (int k = 0; k < spec_.dim - 1; ++k) sizes_[k] = nt;
    sizes_[spec_.dim - 1] = nn;
    count_ = 1;
    for (int k = 0; k < spec_.dim; ++k) count_ *= static_cast<std::size_t>(sizes_[k]);

    roles_.resize(count_);
    const double r_active = spec_.extent * (1.0 - 1e-12);
    for (std::size_t idx = 0; idx < count_; ++idx) {
        const auto c = coords(idx);
        const auto x = point(idx);
        bool boundary = false;
        if (spec_.shape == DomainShape::Ball) {
            boundary = norm(x, spec_.dim) >= r_active;
        } else {
            for (int k = 0; k < spec_.dim - 1; ++k) boundary |= std::abs(c[k]) == m_;
            boundary |= c[spec_.dim - 1] == m_;
            if (!spec_.half_in_xn) boundary |= c[spec_.dim - 1] == -m_;
        }
        NodeRole role = NodeRole::Interior;
        if (boundary) {
            role = NodeRole::Boundary;
        } else if (c[spec_.dim - 1] == 0 && spec_.half_in_xn) {
            role = spec_.symmetric_in_xn ? NodeRole::Thin : NodeRole::Boundary;
        }
        roles_[idx] = role;
        switch (role) {
            case NodeRole::Interior: interior_.push_back(idx); break;
            case NodeRole::Thin: thin_.push_back(idx); break;
            case NodeRole::Boundary: boundary_.push_back(idx); break;
        }
    }
}

std::array<int, 3> Grid::coords(std::size_t idx) const {
    std::array<int, 3> c = {0, 0, 0};
    for (int k = 0; k < spec_.dim; ++k) {
        const int lo = (k == spec_.dim - 1) ? lo_n_ : -m_;
        c[k] = lo + static_cast<int>(idx % static_cast<std::size_t>(sizes_[k]));
        idx /= static_cast<std::size_t>(sizes_[k]);
    }
    return c;
}

std::size_t Grid::index(const std::array<int, 3>& c) const {
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int k = 0; k < spec_.dim; ++k) {
        const int lo = (k == spec_.dim - 1) ? lo_n_ : -m_;
        idx += stride * static_cast<std::size_t>(c[k] - lo);
        stride *= static_cast<std::size_t>(sizes_[k]);
    }
    return idx;
}

std::array<double, 3> Grid::point(std::size_t idx) const {
    const auto c = coords(idx);
    std::array<double, 3> x = {0.0, 0.0, 0.0};
    for (int k = 0; k < spec_.dim; ++k) x[k] = c[k] * spec_.h;
    return x;
}

std::size_t Grid::offset_index(std::array<int, 3> c, const std::array<int, 3>& d) const {
    for (int k = 0; k < spec_.dim; ++k) c[k] += d[k];
    const int n = spec_.dim - 1;
    if (spec_.symmetric_in_xn && c[n] < 0) c[n] = -c[n];
    for (int k = 0; k < n; ++k) {
        if (c[k] < -m_ || c[k] > m_) return npos;
    }
    if (c[n] < lo_n_ || c[n] > m_) return npos;
    return index(c);
}

bool Grid::offset_fits(const std::array<int, 3>& c, const std::array<int, 3>& d) const {
    return offset_index(c, d) != npos;
}

GridFunction::GridFunction(std::shared_ptr<const Grid> grid, double fill)
    : grid_(std::move(grid)), v_(grid_->node_count(), fill) {}

GridFunction GridFunction::sample(std::shared_ptr<const Grid> grid,
                                  const std::function<double(std::array<double, 3>)>& f) {
    GridFunction g(grid);
    for (std::size_t idx = 0; idx < g.v_.size(); ++idx) g.v_[idx] = f(grid->point(idx));
    return g;
}

bool GridFunction::all_finite() const {
    for (double v : v_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double GridFunction::max_abs() const {
    double s = 0.0;
    for (double v : v_) s = std::max(s, std::abs(v));
    return s;
}

void GridFunction::write_csv(std::ostream& out) const {
    out << (grid_->dim() == 2 ? "x,y,value\n" : "x,y,z,value\n");
    char buf[96];
    for (std::size_t idx = 0; idx < v_.size(); ++idx) {
        const auto x = grid_->point(idx);
        for (int k = 0; k < grid_->dim(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", x[k]);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", v_[idx]);
        out << buf;
    }
}

GridFunction GridFunction::read_csv(std::shared_ptr<const Grid> grid, std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("GridFunction::read_csv: empty input");
    GridFunction g(std::move(grid));
    const Grid& gr = g.grid();
    for (std::size_t idx = 0; idx < gr.node_count(); ++idx) {
        if (!std::getline(in, line)) throw std::invalid_argument("GridFunction::read_csv: short file");
        std::istringstream row(line);
        std::string cell;
        const auto expect = gr.point(idx);
        for (int k = 0; k < gr.dim(); ++k) {
            if (!std::getline(row, cell, ',')) throw std::invalid_argument("GridFunction::read_csv: bad row");
            if (std::abs(std::stod(cell) - expect[k]) > 1e-9) {
                throw std::invalid_argument("GridFunction::read_csv: coordinate mismatch");
            }
        }
        if (!std::getline(row, cell, ',')) throw std::invalid_argument("GridFunction::read_csv: bad row");
        g[idx] = std::stod(cell);
    }
    return g;
}

} // namespace slitfb
