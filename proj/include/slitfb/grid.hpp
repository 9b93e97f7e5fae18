#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace slitfb {

enum class DomainShape { Box, Ball };

/// What the solver is allowed to do at a node.
enum class NodeRole : std::uint8_t {
    Interior, ///< the discrete operator equation applies
    Thin,     ///< {x_n = 0} node carrying the complementarity condition
    Boundary, ///< Dirichlet data lives here and is never updated
};

struct GridSpec {
    int dim = 2;            ///< 2 or 3; the last coordinate is the thin direction x_n
    double h = 1.0 / 16.0;  ///< node spacing; must divide extent
    double extent = 1.0;    ///< half-width of the lattice box, and the ball radius
    bool half_in_xn = false;      ///< lattice covers x_n in [0, extent] only
    bool symmetric_in_xn = false; ///< even-reflection lookups across {x_n = 0}; implies half_in_xn
    DomainShape shape = DomainShape::Box;
};

/// Uniform lattice over a box or ball, optionally restricted to the upper
/// half-space. On a symmetric grid a lookup below {x_n = 0} reflects to the
/// mirror node, so stored fields are even in x_n by construction. Thin nodes
/// (x_n = 0 inside the domain) exist only on symmetric grids; on a plain
/// half grid that row is ordinary Dirichlet boundary.
class Grid {
public:
    static constexpr std::size_t npos = ~static_cast<std::size_t>(0);

    explicit Grid(const GridSpec& spec);

    int dim() const { return spec_.dim; }
    double h() const { return spec_.h; }
    double extent() const { return spec_.extent; }
    bool symmetric_in_xn() const { return spec_.symmetric_in_xn; }
    bool half_in_xn() const { return spec_.half_in_xn; }
    DomainShape shape() const { return spec_.shape; }

    /// Nodes per half-axis; coordinates run in [-m, m] tangentially and in
    /// [lo_n, m] along x_n with lo_n = 0 on half grids.
    int m() const { return m_; }
    std::size_t node_count() const { return count_; }

    std::array<int, 3> coords(std::size_t idx) const;
    std::size_t index(const std::array<int, 3>& c) const;
    std::array<double, 3> point(std::size_t idx) const;

    NodeRole role(std::size_t idx) const { return roles_[idx]; }
    const std::vector<std::size_t>& interior_nodes() const { return interior_; }
    const std::vector<std::size_t>& thin_nodes() const { return thin_; }
    const std::vector<std::size_t>& boundary_nodes() const { return boundary_; }

    /// Index of the node at c + d, reflecting across {x_n = 0} on symmetric
    /// grids; npos when the target leaves the lattice.
    std::size_t offset_index(std::array<int, 3> c, const std::array<int, 3>& d) const;

    /// True when every coordinate of c + d stays on the lattice (after
    /// reflection where applicable).
    bool offset_fits(const std::array<int, 3>& c, const std::array<int, 3>& d) const;

private:
    GridSpec spec_;
    int m_ = 0;
    int lo_n_ = 0;
    std::array<int, 3> sizes_ = {1, 1, 1};
    std::size_t count_ = 0;
    std::vector<NodeRole> roles_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> thin_;
    std::vector<std::size_t> boundary_;
};

/// Scalar field sampled on a grid. Values are plain doubles indexed by node;
/// the finite-values invariant is checked where fields cross module borders.
class GridFunction {
public:
    explicit GridFunction(std::shared_ptr<const Grid> grid, double fill = 0.0);

    static GridFunction sample(std::shared_ptr<const Grid> grid,
                               const std::function<double(std::array<double, 3>)>& f);

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }

    double& operator[](std::size_t idx) { return v_[idx]; }
    double operator[](std::size_t idx) const { return v_[idx]; }

    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    bool all_finite() const;
    double max_abs() const;

    /// CSV dump: header row, then one row per node in node-index order with
    /// the coordinates first and the value last.
    void write_csv(std::ostream& out) const;

    /// Reads a dump produced by write_csv back onto the given grid. Row
    /// count or coordinate mismatches are rejected.
    static GridFunction read_csv(std::shared_ptr<const Grid> grid, std::istream& in);

private:
    std::shared_ptr<const Grid> grid_;
    std::vector<double> v_;
};

} // namespace slitfb
