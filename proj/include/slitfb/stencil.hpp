#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "slitfb/grid.hpp"

namespace slitfb {

/// Lattice direction given by an integer offset vector; the unit direction is
/// offset / |offset| and a stencil arm of a nodes reaches a * offset.
struct LatticeDirection {
    std::array<int, 3> offset = {0, 0, 0};
    double len2 = 0.0; ///< |offset|^2, cached

    LatticeDirection() = default;
    LatticeDirection(int px, int py, int pz = 0);
};

/// Orthogonal frame of dim lattice directions.
struct Frame {
    std::array<LatticeDirection, 3> dirs;
    int dim = 2;
};

/// Family of orthogonal lattice frames the scheme extremizes over. Frames are
/// closed under negation by construction since second differences use both
/// arms of each direction.
class DirectionSet {
public:
    /// Empty set; stands for "the default family of the grid's dimension"
    /// wherever a problem description leaves the frames unspecified.
    DirectionSet() = default;

    /// 2D frame family with frame_count in {1, 2, 4, 8} frames, first
    /// directions spread over [0, 90) degrees with offsets of at most 3.
    static DirectionSet make_2d(int frame_count = 8);

    /// 3D family: the axis frame plus the three face-diagonal frames.
    static DirectionSet make_3d();

    /// The full family in the given dimension.
    static DirectionSet for_dim(int dim);

    bool empty() const { return frames_.empty(); }
    int dim() const { return dim_; }
    const std::vector<Frame>& frames() const { return frames_; }

    /// Largest per-coordinate offset over all directions; a node needs this
    /// much lattice clearance for the full family to apply.
    int max_reach() const { return max_reach_; }

private:
    DirectionSet(int dim, std::vector<Frame> frames);

    int dim_ = 0;
    std::vector<Frame> frames_;
    int max_reach_ = 0;
};

/// Centered second difference along one lattice direction:
/// (f(x + a e) + f(x - a e) - 2 f(x)) / a^2 with a = arm * h * |offset|.
/// The stencil must stay on the lattice; callers check with stencil_fits.
double second_difference(const GridFunction& f, std::size_t node, const LatticeDirection& dir,
                         int arm = 1);

bool stencil_fits(const Grid& grid, std::size_t node, const LatticeDirection& dir, int arm = 1);

} // namespace slitfb
