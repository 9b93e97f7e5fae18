#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "slitfb/ellipticity.hpp"
#include "slitfb/grid.hpp"
#include "slitfb/signorini.hpp"

namespace slitfb {

/// Growth table of the obstacle deviation w = u - phi - tangent plane around
/// a contact node. The plane's constant part is the exact node value w(x0);
/// the tangential gradient is the least-squares fit over the plane nodes
/// within distance h of the center, which reduces to the central difference
/// per axis, the stable grid analogue of subtracting the exact tangent
/// plane. The window is the tightest two-sided one: any wider fit on a
/// d^{3/2} detachment inflates the gradient by order sqrt(window) and biases
/// the fitted growth exponent upward.
///
/// sup_values are raw suprema of |w| over the balls B_r(x0). The theta table
/// is stored in normalized units, radius over the largest radius and sup over
/// the largest-radius sup, so it is invariant under rescaling the field or
/// the coordinates:
///
///   theta(rho) = max over r >= rho of (r / r_max)^(-mu) sup(r) / sup(r_max).
///
/// theta is nonincreasing and sup_values nondecreasing by construction.
struct GrowthProfile {
    std::size_t center_node = 0;
    std::array<double, 3> center = {0.0, 0.0, 0.0};
    double mu = 0.0;                 ///< growth parameter, 2 - epsilon
    double center_value = 0.0;       ///< w(x0) before subtraction
    std::array<double, 3> plane_gradient = {0.0, 0.0, 0.0}; ///< fitted, tangential
    std::vector<double> radii;       ///< ascending
    std::vector<double> sup_values;  ///< raw sup of |w| over B_r
    std::vector<double> theta;       ///< normalized suffix maxima, see above
};

/// Computes the growth table. The center must be a plane node where u equals
/// the obstacle to within 1e-6 of the field scale; radii whose ball leaves
/// the domain are rejected. mu must lie in (0, 2).
GrowthProfile growth_profile(const GridFunction& u, const ScalarField& phi, std::size_t x0,
                             double mu, std::vector<double> radii);

enum class PointClass { Regular, Degenerate, Inconclusive };

/// Outcome of the growth dichotomy at one contact node. Regular demands the
/// normalized theta at the smallest tabulated radius reach nu_threshold and
/// the fitted exponent stay below 2 - epsilon - 0.05 over at least three
/// scales with positive sup; Degenerate demands every consecutive log-log
/// slope reach 2 - epsilon; anything else is Inconclusive, including tables
/// with fewer than three positive scales. The 0.05 dead band keeps the two
/// verdicts apart on finite grids.
struct Classification {
    PointClass kind = PointClass::Inconclusive;
    double epsilon = 0.0;
    double nu_threshold = 0.0;
    std::vector<double> modulus_samples; ///< theta at the selection scales

    std::string kind_name() const;
};

/// One selection scale of the blow-up sequence: at scale rho_k = r_max / k
/// the radius r_k maximizes (r / r_max)^(-mu) sup(r) over tabulated radii at
/// least rho_k, so it satisfies the selection inequality
///
///   r_k^(-mu) sup(r_k) >= (1/2) theta(rho_k)
///
/// with factor one. A scale is admitted when theta(rho_k) reaches the
/// divergence threshold; a bounded theta table admits nothing.
struct BlowupScale {
    int k = 1;
    double r_k = 0.0;
    double theta_k = 0.0;
    bool admitted = false;
};

/// Rescaled field v_k(x) = w(x0 + r_k x) / sup(r_k) on a unit ball grid with
/// unit sup, emitted for admitted radii that are lattice compatible (r_k an
/// integer multiple of h, at least 2h).
struct RescaledField {
    double radius = 0.0;
    GridFunction field;
};

struct BlowupReport {
    GrowthProfile profile;
    std::vector<BlowupScale> scales;
    std::vector<double> selected_radii;           ///< distinct admitted r_k
    std::vector<RescaledField> rescaled;
    std::optional<double> fitted_exponent;        ///< log-log fit, absent below 2 scales
    Classification classification;

    std::string to_json() const;
};

/// Runs the selection schedule k = 1, 2, ... down to the smallest tabulated
/// radius and classifies the growth. The threshold plays the paper role of a
/// diverging modulus; the default 10 is deliberately strict at desk
/// resolutions and is echoed in the report.
BlowupReport blowup_sequence(const GrowthProfile& profile, const GridFunction& u,
                             const ScalarField& phi, double nu_threshold = 10.0);

/// Dyadic radii extent, extent/2, ... down to 16h, restricted to balls that
/// fit the domain around node x0. The floor keeps the tangent-fit window far
/// below the smallest radius, so the subtraction cannot dominate the
/// smallest sup. This is the schedule classify_point feeds to
/// growth_profile; it is exposed so drivers can reproduce the table.
std::vector<double> dyadic_radii(const Grid& grid, std::size_t x0);

/// Growth dichotomy at a contact node: builds the dyadic profile with
/// mu = 2 - epsilon and classifies. The node must satisfy u = phi; detached
/// nodes are rejected. Interior contact nodes (no detached neighbor) are
/// legal input and come out Degenerate or Inconclusive since their table
/// carries no growth. Invariant under positive rescaling of u - phi and
/// under the lattice symmetries of the thin coordinates.
Classification classify_point(const GridFunction& u, const ScalarField& phi, std::size_t x0,
                              double epsilon, double nu_threshold);

/// Free boundary as a graph: the contact nodes that touch a detached plane
/// node, a detachment direction e, and the smallest Lipschitz constant of a
/// graph over the orthogonal thin coordinate covering the nodes within one
/// cell.
///
/// e is the in-plane normal of the principal axis of the free boundary node
/// cloud, signed toward detachment by the larger minimum forward difference
/// of u - phi at reach 2h. The geometry fixes the direction because no
/// lattice difference quotient can: when the detachment is superlinear, a
/// long oblique step always outscores the true normal. direction_score
/// reports that minimum difference along the chosen e. lipschitz is the
/// pairwise bound
///
///   max over pairs (|s_i - s_j| - 2h)+ / |t_i - t_j|,  |t_i - t_j| > h/2
///
/// (s the e coordinate, t the orthogonal one) and residual is the largest
/// half gap |s_i - s_j| / 2 over pairs sharing a t column; a residual above
/// h means no graph over e passes within one cell.
struct FreeBoundaryGraph {
    std::array<double, 3> e = {0.0, 0.0, 0.0};
    std::vector<std::size_t> nodes;
    std::vector<std::array<double, 3>> points;
    double lipschitz = 0.0;
    double residual = 0.0;
    double direction_score = 0.0;

    std::string to_json() const;
};

/// Extracts the discrete free boundary of a solve. The obstacle is needed
/// because the direction score differentiates u - phi, not u. Throws when
/// the contact set is empty or covers the whole plane.
FreeBoundaryGraph extract_free_boundary(const SolveReport& report, const ScalarField& phi);

/// Smallest directional difference of u over a cone of thin directions.
struct MonotonicityReport {
    double min_difference = 0.0;
    std::size_t argmin_node = 0;
    std::array<int, 3> argmin_direction = {0, 0, 0};
    int directions_checked = 0;
};

/// Minimum of the discrete tau derivative of u over region nodes and thin
/// lattice directions tau with tau . e >= l / sqrt(1 + l^2), the Lipschitz
/// cone. Differences are centered except next to slit nodes, where the
/// one-sided difference away from the slit is used; a direction with no
/// admissible stencil at a node skips that node. Throws when the cone
/// captures no lattice direction.
MonotonicityReport directional_monotonicity(const GridFunction& u, const std::array<double, 3>& e,
                                            double lipschitz, const std::vector<std::size_t>& region,
                                            const std::vector<std::size_t>* slit = nullptr);

/// Log-log fit of the detachment (u - phi)(x0 + t e) against t.
struct NondegeneracyFit {
    bool valid = false;     ///< at least three positive samples
    int samples = 0;
    double constant = 0.0;  ///< multiplicative constant of the fitted power law
    double exponent = 0.0;
    double eps0 = 0.0;      ///< (1 - beta2) / 2 for the supplied ellipticity
    bool passes = false;    ///< exponent <= 2 - eps0
};

/// Fits the power law along the ray from x0 in direction e, sampling at the
/// nearest node to x0 + t e for each t. The pass bound 2 - eps0 uses
/// eps0 = (1 - beta2)/2 computed from the angular ODE for the given
/// ellipticity; beta_tol is forwarded to that search.
NondegeneracyFit nondegeneracy_fit(const GridFunction& u, const ScalarField& phi, std::size_t x0,
                                   const std::array<double, 3>& e, const std::vector<double>& ts,
                                   const EllipticityPair& ell, double beta_tol = 1e-6);

/// Convex cone in the thin plane against which ratio experiments run. The
/// generators span the slit cone Sigma*; every generator must satisfy the
/// inclusion g/|g| . e <= -epsilon. The quantitative boundary Harnack
/// hypothesis is stated for epsilon below 1/8; larger openings up to 1 are
/// accepted and flagged, since the measured ratio remains well defined.
struct ConeSpec {
    std::array<double, 3> apex = {0.0, 0.0, 0.0};
    std::array<double, 3> e = {1.0, 0.0, 0.0};
    double epsilon = 0.1;
    std::vector<std::array<double, 3>> generators;

    void validate(int dim) const;

    /// Membership of a thin vector in the generated cone (not relative to
    /// the apex; callers subtract it).
    bool contains_direction(const std::array<double, 3>& v, int dim) const;

    /// Membership of a point, relative to the apex.
    bool contains_point(const std::array<double, 3>& x, int dim) const;
};

/// Measured two-sided comparability of a pair of nonnegative solutions
/// vanishing on the slit cone. Ratios are of the normalized fields, each
/// divided by its sup over the ball of radius epsilon/2 about the apex, so
/// the report is invariant under rescaling either input.
struct HarnackReport {
    double sup_ratio = 0.0;
    double inf_ratio = 0.0;
    double implied_constant = 0.0; ///< max(sup, 1/inf)
    double floor = 0.0;            ///< denominator cutoff, 10x solver tol, normalized units
    double epsilon = 0.0;
    bool epsilon_within_hypothesis = false; ///< epsilon < 1/8
    double region_radius = 0.0;
    int node_count = 0;
    double sup_b1 = 0.0, sup_b2 = 0.0; ///< raw normalization sups

    std::string to_json() const;
};

/// Nodewise ratio statistics of u1 over u2 on the ball of radius
/// region_radius (default epsilon/4) about the apex, over nodes where the
/// normalized u2 clears the floor of ten solver tolerances. Preconditions
/// checked nodewise and rejected with the offending node in the message:
/// both fields nonnegative, both vanishing on the plane nodes of the cone,
/// and each monotone nondecreasing along its declared thin direction theta_i
/// with -theta_i inside the cone. The thetas must align with a lattice
/// direction so monotonicity is checkable exactly.
HarnackReport harnack_ratio(const GridFunction& u1, const GridFunction& u2,
                            const std::array<double, 3>& theta1, const std::array<double, 3>& theta2,
                            const ConeSpec& cone, double solve_tol,
                            std::optional<double> region_radius = std::nullopt);

} // namespace slitfb
