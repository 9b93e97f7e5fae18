#include "slitfb/sym_matrix.hpp"

#include <algorithm>

namespace slitfb {

SymMatrix SymMatrix::from_rows(int dim, std::span<const double> rows, double tol) {
    check_dim(dim);
    if (rows.size() != static_cast<std::size_t>(dim * dim)) {
        throw std::invalid_argument("SymMatrix::from_rows: wrong entry count");
    }
    double scale = 0.0;
    for (double v : rows) scale = std::max(scale, std::abs(v));
    const double allowed = tol * std::max(scale, 1.0);
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            const double upper = rows[static_cast<std::size_t>(i * dim + j)];
            const double lower = rows[static_cast<std::size_t>(j * dim + i)];
            if (std::abs(upper - lower) > allowed) {
                throw std::invalid_argument("SymMatrix::from_rows: input is not symmetric");
            }
            m.at(i, j) = 0.5 * (upper + lower);
        }
    }
    return m;
}

double SymMatrix::inner(const SymMatrix& b) const {
    if (b.dim_ != dim_) throw std::invalid_argument("SymMatrix::inner: dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) s += at(i, j) * b.at(i, j);
    }
    return s;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& b) {
    if (b.dim_ != dim_) throw std::invalid_argument("SymMatrix: dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += b.a_[k];
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& b) {
    if (b.dim_ != dim_) throw std::invalid_argument("SymMatrix: dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= b.a_[k];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double t) {
    for (double& v : a_) v *= t;
    return *this;
}

namespace {

std::array<double, 3> eig2(const SymMatrix& h) {
    const double a = h.at(0, 0), b = h.at(0, 1), c = h.at(1, 1);
    const double mean = 0.5 * (a + c);
    const double d = std::hypot(0.5 * (a - c), b);
    return {mean - d, mean + d, 0.0};
}

// Cyclic Jacobi on the 3x3 case. Rotation order is fixed so the result is
// deterministic; convergence for symmetric input is classical.
std::array<double, 3> eig3(const SymMatrix& h) {
    double m[3][3];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m[i][j] = h.at(i, j);
    }
    const double scale = std::max(h.frobenius_norm(), 1.0);
    const double tol = 1e-13 * scale;
    constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::sqrt(2.0 * (m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2]));
        if (off <= tol) break;
        for (const auto& pq : pairs) {
            const int p = pq[0], q = pq[1];
            if (m[p][q] == 0.0) continue;
            const double theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;
            for (int k = 0; k < 3; ++k) {
                const double mkp = m[k][p], mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for (int k = 0; k < 3; ++k) {
                const double mpk = m[p][k], mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
        }
    }
    std::array<double, 3> e = {m[0][0], m[1][1], m[2][2]};
    std::sort(e.begin(), e.end());
    return e;
}

} // namespace

std::array<double, 3> eig_sym(const SymMatrix& h) {
    return h.dim() == 2 ? eig2(h) : eig3(h);
}

} // namespace slitfb
