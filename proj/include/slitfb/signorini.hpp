#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slitfb/discrete_operator.hpp"
#include "slitfb/grid.hpp"

namespace slitfb {

/// Pointwise data supplied as a function of the grid point.
using ScalarField = std::function<double(std::array<double, 3>)>;

/// Obstacle on the thin boundary together with a declared curvature bound.
/// The bound is validated against observed second differences of the sampled
/// obstacle along the tangential axes, so a caller cannot understate the
/// regularity its analysis relies on.
struct ObstacleSpec {
    ScalarField phi;
    double c11_bound = 0.0;

    /// Throws when a tangential second difference at a thin node exceeds the
    /// declared bound.
    void validate_against(const Grid& grid) const;
};

enum class ProblemMode {
    /// Even thin obstacle problem: interior equation plus the complementarity
    /// condition min(-d_n u, u - phi) = 0 on the thin plane. Requires a grid
    /// symmetric in the last coordinate.
    Signorini,
    /// Dirichlet problem for the interior equation alone. On a symmetric grid
    /// the thin plane carries the even-reflected interior equation; on a half
    /// or full grid every lattice face is data.
    PureDirichlet,
};

/// One discrete problem instance. The right-hand side may be empty, which
/// means zero; Dirichlet data must be evaluable at every node because it also
/// seeds the initial iterate.
struct SignoriniProblem {
    std::shared_ptr<const Grid> grid;
    OperatorSpec op;
    DirectionSet dirs;
    ObstacleSpec obstacle;
    ScalarField dirichlet;
    ScalarField rhs;
    ProblemMode mode = ProblemMode::Signorini;

    /// Validates consistency (mode vs grid symmetry, finite data, obstacle
    /// not exceeding boundary data where the thin plane meets the outer
    /// boundary). Throws std::invalid_argument on violation.
    void validate() const;
};

/// Node update strategies. All three share one fixed point; the first is the
/// accelerated default, the second is the slow reference that solves every
/// scalar node equation by bracketed bisection, the third recomputes a full
/// sweep from a snapshot so updates are order independent.
enum class SweepMethod { PolicySor, Bisection, Jacobi };

struct SolveOptions {
    double tol = 1e-9;
    int max_iters = 20000;
    SweepMethod method = SweepMethod::PolicySor;
    /// Contact set extraction threshold, in units of tol.
    double contact_factor = 10.0;
    /// Relaxation factor override; by default a grid-dependent value is used
    /// for PolicySor and 1 for the other methods.
    std::optional<double> omega;
};

struct SolveResiduals {
    double interior = 0.0;
    double complementarity = 0.0;
};

struct SolveReport {
    GridFunction solution;
    int iterations = 0;
    SolveResiduals residuals;
    std::vector<std::size_t> contact_nodes;
    bool failed = false;

    std::string to_json() const;
};

/// Relaxation solve of the thin obstacle or pure Dirichlet problem. Never
/// throws on non-convergence: the best iterate is returned flagged failed.
SolveReport solve_signorini(const SignoriniProblem& p, const SolveOptions& opts = {});

/// Max-norm residuals of a candidate field, recomputed from scratch.
SolveResiduals residual(const SignoriniProblem& p, const GridFunction& u);

/// Outer data for extension problems on truncated half-space grids. With
/// only `upper` set the cap is taken as exact far-field data. With both set,
/// the problem is solved twice and the runs must bracket; their gap bounds
/// the truncation error committed by the cap.
struct FarFieldCap {
    ScalarField upper;
    ScalarField lower;
};

struct ExtensionResult {
    GridFunction field;
    double bracket_gap = 0.0;
    SolveReport upper_report;
    std::optional<SolveReport> lower_report;
};

/// Dirichlet extension of a thin-boundary trace into the half space: solves
/// the extremal equation above the plane with u = trace on {x_n = 0} and cap
/// data on the remaining boundary. The grid must be a half grid (not
/// symmetric): the plane is data here, not a reflection axis. In bracket
/// mode the returned field is the average of the two runs.
ExtensionResult extension_solve(const ScalarField& trace, const EllipticityPair& ell,
                                ExtremalSign sign, std::shared_ptr<const Grid> grid,
                                const FarFieldCap& cap, const SolveOptions& opts = {});

} // namespace slitfb
