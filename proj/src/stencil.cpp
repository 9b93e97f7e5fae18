#include "slitfb/stencil.hpp"

#include <stdexcept>

namespace slitfb {

LatticeDirection::LatticeDirection(int px, int py, int pz) : offset{px, py, pz} {
    len2 = static_cast<double>(px) * px + static_cast<double>(py) * py +
           static_cast<double>(pz) * pz;
    if (len2 == 0.0) throw std::invalid_argument("LatticeDirection: zero offset");
}

namespace {

bool orthogonal(const LatticeDirection& a, const LatticeDirection& b) {
    long dot = 0;
    for (int k = 0; k < 3; ++k) dot += static_cast<long>(a.offset[k]) * b.offset[k];
    return dot == 0;
}

} // namespace

DirectionSet::DirectionSet(int dim, std::vector<Frame> frames)
    : dim_(dim), frames_(std::move(frames)) {
    if (frames_.empty()) throw std::invalid_argument("DirectionSet: no frames");
    for (const Frame& f : frames_) {
        for (int i = 0; i < dim_; ++i) {
            for (int j = i + 1; j < dim_; ++j) {
                if (!orthogonal(f.dirs[i], f.dirs[j])) {
                    throw std::invalid_argument("DirectionSet: frame is not orthogonal");
                }
            }
            for (int k = 0; k < 3; ++k) {
                max_reach_ = std::max(max_reach_, std::abs(f.dirs[i].offset[k]));
            }
        }
    }
}

DirectionSet DirectionSet::make_2d(int frame_count) {
    // First directions ordered by angle; each is paired with its rotation by
    // 90 degrees, which has the same lattice length.
    auto frame = [](int px, int py) {
        Frame f;
        f.dim = 2;
        f.dirs[0] = LatticeDirection(px, py);
        f.dirs[1] = LatticeDirection(-py, px);
        return f;
    };
    std::vector<Frame> all = {frame(1, 0), frame(3, 1), frame(2, 1), frame(3, 2),
                              frame(1, 1), frame(2, 3), frame(1, 2), frame(1, 3)};
    std::vector<Frame> pick;
    switch (frame_count) {
        case 1: pick = {all[0]}; break;
        case 2: pick = {all[0], all[4]}; break;
        case 4: pick = {all[0], all[2], all[4], all[6]}; break;
        case 8: pick = all; break;
        default:
            throw std::invalid_argument("DirectionSet::make_2d: frame_count must be 1, 2, 4 or 8");
    }
    return DirectionSet(2, std::move(pick));
}

DirectionSet DirectionSet::make_3d() {
    auto frame = [](LatticeDirection a, LatticeDirection b, LatticeDirection c) {
        Frame f;
        f.dim = 3;
        f.dirs = {a, b, c};
        return f;
    };
    std::vector<Frame> frames = {
        frame({1, 0, 0}, {0, 1, 0}, {0, 0, 1}),
        frame({1, 1, 0}, {1, -1, 0}, {0, 0, 1}),
        frame({1, 0, 1}, {1, 0, -1}, {0, 1, 0}),
        frame({0, 1, 1}, {0, 1, -1}, {1, 0, 0}),
    };
    return DirectionSet(3, std::move(frames));
}

DirectionSet DirectionSet::for_dim(int dim) {
    if (dim == 2) return make_2d(8);
    if (dim == 3) return make_3d();
    throw std::invalid_argument("direction sets exist in dimension 2 or 3");
}

double second_difference(const GridFunction& f, std::size_t node, const LatticeDirection& dir,
                         int arm) {
    const Grid& g = f.grid();
    const auto c = g.coords(node);
    std::array<int, 3> d = {arm * dir.offset[0], arm * dir.offset[1], arm * dir.offset[2]};
    const std::size_t plus = g.offset_index(c, d);
    for (int k = 0; k < 3; ++k) d[k] = -d[k];
    const std::size_t minus = g.offset_index(c, d);
    if (plus == Grid::npos || minus == Grid::npos) {
        throw std::invalid_argument("second_difference: stencil leaves the grid");
    }
    const double a2 = dir.len2 * (arm * g.h()) * (arm * g.h());
    return (f[plus] + f[minus] - 2.0 * f[node]) / a2;
}

bool stencil_fits(const Grid& grid, std::size_t node, const LatticeDirection& dir, int arm) {
    const auto c = grid.coords(node);
    std::array<int, 3> d = {arm * dir.offset[0], arm * dir.offset[1], arm * dir.offset[2]};
    if (!grid.offset_fits(c, d)) return false;
    for (int k = 0; k < 3; ++k) d[k] = -d[k];
    return grid.offset_fits(c, d);
}

} // namespace slitfb
