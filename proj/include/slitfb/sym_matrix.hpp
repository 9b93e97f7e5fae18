#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace slitfb {

/// Dense symmetric matrix in dimension 2 or 3, stored as the packed upper
/// triangle. This is the Hessian type consumed by the exact operators; the
/// dimension is a runtime value because solves mix 2D and 3D experiments.
class SymMatrix {
public:
    explicit SymMatrix(int dim) : dim_(check_dim(dim)) { a_.fill(0.0); }

    static SymMatrix zero(int dim) { return SymMatrix(dim); }

    static SymMatrix identity(int dim) {
        SymMatrix m(dim);
        for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
        return m;
    }

    static SymMatrix diag(std::span<const double> d) {
        SymMatrix m(static_cast<int>(d.size()));
        for (int i = 0; i < m.dim_; ++i) m.at(i, i) = d[i];
        return m;
    }

    /// Builds from a dense row-major dim*dim array, rejecting input whose
    /// asymmetry exceeds tol relative to the largest entry.
    static SymMatrix from_rows(int dim, std::span<const double> rows, double tol = 1e-12);

    int dim() const { return dim_; }

    double& at(int i, int j) { return a_[pack(i, j)]; }
    double at(int i, int j) const { return a_[pack(i, j)]; }

    double trace() const {
        double t = 0.0;
        for (int i = 0; i < dim_; ++i) t += at(i, i);
        return t;
    }

    /// Frobenius inner product sum_ij A_ij B_ij, which equals tr(A B) for
    /// symmetric operands. Used for Bellman member evaluation.
    double inner(const SymMatrix& b) const;

    double frobenius_norm() const { return std::sqrt(inner(*this)); }

    SymMatrix& operator+=(const SymMatrix& b);
    SymMatrix& operator-=(const SymMatrix& b);
    SymMatrix& operator*=(double t);

    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator*(double t, SymMatrix a) { return a *= t; }

private:
    static int check_dim(int dim) {
        if (dim != 2 && dim != 3) throw std::invalid_argument("SymMatrix: dim must be 2 or 3");
        return dim;
    }

    // Packing order: 2D -> xx, xy, yy. 3D -> xx, xy, xz, yy, yz, zz.
    std::size_t pack(int i, int j) const {
        if (i < 0 || j < 0 || i >= dim_ || j >= dim_) {
            throw std::out_of_range("SymMatrix: index");
        }
        if (i > j) std::swap(i, j);
        if (dim_ == 2) return static_cast<std::size_t>(i + j);
        static constexpr int idx3[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
        return static_cast<std::size_t>(idx3[i][j]);
    }

    int dim_;
    std::array<double, 6> a_;
};

/// Eigenvalues in ascending order; entries past dim are zero. 2D uses the
/// closed form, 3D runs cyclic Jacobi to an off-diagonal Frobenius norm of
/// 1e-13 relative to the matrix scale.
std::array<double, 3> eig_sym(const SymMatrix& h);

} // namespace slitfb
