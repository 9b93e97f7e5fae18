#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "slitfb/ellipticity.hpp"
#include "slitfb/grid.hpp"
#include "slitfb/pucci.hpp"
#include "slitfb/stencil.hpp"

namespace slitfb {

/// Operator selection for discrete solves: one of the two extremal operators,
/// or a convex Bellman family (members are compressed onto their best aligned
/// frame, exactly when a member is diagonal in some frame of the set).
struct OperatorSpec {
    EllipticityPair ell;
    ExtremalSign sign = ExtremalSign::Plus;
    std::optional<BellmanFamily> family;
};

/// Wide-stencil monotone evaluation engine bound to a grid, a frame family
/// and an operator choice. Frames whose stencil leaves the lattice at a node
/// are dropped there; the axis frame always applies at interior and thin
/// nodes, so every evaluation sees at least one frame.
///
/// The engine exposes the per-node dependence on the center value in affine
/// form because the solver updates one node at a time: with the neighbor
/// values frozen, each frame contribution is num_f - den_f * t in the center
/// value t with den_f > 0, so the extremized operator is strictly decreasing
/// in t with slope at least 2 n lambda / (max arm)^2.
class DiscreteOperator {
public:
    DiscreteOperator(std::shared_ptr<const Grid> grid, DirectionSet dirs, OperatorSpec spec);

    /// Stencil data gathered at one node: per usable frame, the neighbor pair
    /// sums and inverse squared arm lengths.
    struct NodeStencil {
        int n_frames = 0;
        int dim = 2;
        double center = 0.0;
        double sum[8][3];
        double inv_a2[8][3];
        int slot_of_frame[8]; ///< frame id -> slot, -1 when the frame was dropped
    };

    NodeStencil gather(const std::vector<double>& u, std::size_t node) const;

    /// Operator value with the gathered neighbors and center value t.
    double eval(const NodeStencil& s, double t) const;

    /// Operator value at the node as stored in u.
    double value(const std::vector<double>& u, std::size_t node) const;

    /// Affine model F(t) = num - den * t of the operator under the policy
    /// (frame or member, and directional weights) frozen at center value t.
    struct NodeAffine {
        double num = 0.0;
        double den = 0.0;
    };
    NodeAffine policy_affine(const NodeStencil& s, double t) const;

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    const DirectionSet& dirs() const { return dirs_; }
    const OperatorSpec& spec() const { return spec_; }

private:
    struct CompiledMember {
        int frame = 0;
        double coeff[3] = {0.0, 0.0, 0.0};      ///< Rayleigh coefficients in its frame
        double axis_coeff[3] = {0.0, 0.0, 0.0}; ///< fallback when the frame is dropped
    };

    double eval_extremal(const NodeStencil& s, double t) const;
    double eval_bellman(const NodeStencil& s, double t) const;

    std::shared_ptr<const Grid> grid_;
    DirectionSet dirs_;
    OperatorSpec spec_;
    int axis_frame_ = 0;
    std::vector<CompiledMember> members_;
};

/// Discrete extremal operator of a field: values at interior nodes (plus thin
/// nodes on symmetric grids, where even reflection makes the vertical stencil
/// well defined); zero elsewhere.
GridFunction discrete_extremal(const GridFunction& f, const EllipticityPair& ell,
                               const DirectionSet& dirs, ExtremalSign sign);

/// Same evaluation surface for a compiled Bellman family.
GridFunction discrete_bellman(const GridFunction& f, const BellmanFamily& family,
                              const DirectionSet& dirs);

} // namespace slitfb
