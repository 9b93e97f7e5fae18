#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "slitfb/angular_ode.hpp"
#include "slitfb/ellipticity.hpp"
#include "slitfb/grid.hpp"
#include "slitfb/signorini.hpp"

namespace slitfb {

/// One numerically checked inequality of a barrier certificate.
/// worst_violation is the largest measured deficit against the claimed
/// inequality; a negative value means the inequality held with margin.
struct CertificateCondition {
    std::string name;
    bool satisfied = false;
    double worst_violation = 0.0;
    std::array<double, 3> location = {0.0, 0.0, 0.0};
};

/// Bundle of the per-condition checks backing one barrier claim.
struct BarrierCertificate {
    std::string barrier;
    std::vector<CertificateCondition> conditions;

    bool all_satisfied() const;

    /// {"barrier": ..., "conditions": [{name, satisfied, worst_violation,
    /// location}, ...]}
    std::string to_json() const;
};

/// Truncated unit bump: min{1, |x'|^2 + N(2|x_n| - x_n^2)} inside the box
/// {|x'| <= 1, |x_n| <= 1} and 1 outside, with N = (dim-1) Lambda / lambda.
/// The quadratic branch has M+ = 2(dim-1)Lambda - 2N lambda = 0 exactly, so
/// the function is a supersolution of the maximal operator off the thin
/// plane, and it dominates min{1, |x'|^2 + x_n^2}.
double eval_phi0(const std::array<double, 3>& x, const EllipticityPair& ell, int dim);

/// Extremal value of the exact Hessian of the quadratic branch of eval_phi0,
/// diag(2, ..., 2, -2N). Vanishes up to rounding at the bump's own N.
double phi0_quadratic_extremal(const EllipticityPair& ell, int dim);

/// Dyadic superposition sum_i 2^i a_i phi0(2^{-i} x). Terms are added until
/// the bound on the remainder, including the declared tail of the weight
/// sequence, drops below rel_tol of the partial sum. Throws when a weight is
/// negative or not finite, when the tail declaration is not summable, or
/// when the declared tail is too large for the requested accuracy.
double eval_series_barrier(const std::array<double, 3>& x, const std::vector<double>& a,
                           double tail_bound, const EllipticityPair& ell, int dim,
                           double rel_tol = 1e-8);

/// Weight sequence together with its derived dominating sequence
/// b_k = a_k / sqrt(s_k), where s_k is the tail sum from index k onward.
/// b_k/a_k is nondecreasing and unbounded while b stays summable, with
/// sum(b) <= 2 sqrt(s_1). Inputs with total mass above 1 are rescaled to
/// unit mass first; `scale` records the applied factor. Trailing entries
/// with a vanishing tail sum have no defined b and are dropped, which sets
/// `truncated`.
struct SeriesWeights {
    std::vector<double> a;
    double tail_bound = 0.0;
    std::vector<double> b;
    double scale = 1.0;
    bool truncated = false;
};

SeriesWeights series_weights(std::vector<double> a, double tail_bound = 0.0);

/// Ball in the thin plane: the last coordinate of the center must vanish.
struct ThinBall {
    std::array<double, 3> center = {0.0, 0.0, 0.0};
    double radius = 0.0;
};

/// Slit bump barrier: even reflection of the half-ball solution of
/// M- psi = kappa f0 with bump trace data, scaled by 1/kappa. kappa is found
/// by geometric bisection from 1 so that the half solve stays nonnegative.
/// The certificate checks four conditions:
///   interior_subsolution   M- phi >= indicator(B_{1-rho}) off the thin ball
///   nonnegative            phi >= 0 on the whole ball
///   thin_support           phi = 0 on the thin plane outside the thin ball
///   zero_boundary          phi = 0 on the outer boundary
/// Off the plane the first condition uses the half-grid stencils the solve
/// itself enforced, so its slack is solver residual divided by kappa. On the
/// plane outside the thin ball the inequality holds in the viscosity sense
/// exactly when the reflection kink is convex (no admissible touching
/// parabola exists there), so the recorded deficit is the worst concavity of
/// the kink, not an operator value.
struct SlitBarrier {
    GridFunction field;
    double kappa = 1.0;
    /// Largest value over the thin ball; the barrier is at most this times
    /// the indicator of the ball on the thin plane.
    double support_bound = 0.0;
    BarrierCertificate certificate;
    bool kappa_search_failed = false;
    /// Most negative half-solve value at the smallest tested kappa; only
    /// meaningful when the search failed.
    double kappa_violation = 0.0;
};

/// Builds the slit bump barrier on a symmetric ball grid of extent 1.
/// rho in (0, 1) fixes the plateau of the right-hand side; the thin ball
/// must sit strictly inside the unit thin ball.
SlitBarrier slit_subsolution(double rho, const ThinBall& ball, const EllipticityPair& ell,
                             std::shared_ptr<const Grid> grid, const SolveOptions& opts = {});

/// Radial boundary-growth barrier exp(-N|x|) - exp(-N rho/2).
double hopf_barrier(const std::array<double, 3>& x, double N, double rho);

/// True when the barrier is a strict subsolution on the annulus
/// {rho/4 <= |x| <= rho/2}: the factor lambda N^2 - Lambda N (dim-1)/|x| is
/// smallest at the inner radius, so positivity is checked there.
bool hopf_certificate(double N, double rho, const EllipticityPair& ell, int dim = 3);

/// Tangential cone profile e.x' -/+ eta |x'| (1 - (e.x'/|x'|)^2); the minus
/// sign (super = false) is positive exactly on the cone around +e, the plus
/// sign on the complement of the cone around -e.
double cone_psi(const std::array<double, 3>& x, const std::array<double, 3>& e, double eta,
                bool super, int dim);

struct ConeBarrierSpec {
    bool super = false;
    std::array<double, 3> e = {1.0, 0.0, 0.0}; ///< unit, tangential
    double eta = 0.1;
    double gamma = 0.1; ///< in (0, min(beta1, 1 - beta2))
};

/// Half-space extension of the powered cone profile together with the sign
/// of its one-sided normal derivative over the cone. worst_derivative is the
/// minimum over samples for the subsolution flavor (claimed positive) and
/// the maximum for the supersolution flavor (claimed negative). bracket_gap
/// is the largest disagreement, over the sample region, between the two
/// far-field fixed points reached from the upper and lower seeds; it should
/// be near zero when the closure converged. converged reports that every
/// inner solve met its tolerance and both fixed-point runs stabilised.
struct ConeBarrierReport {
    GridFunction field;
    double bracket_gap = 0.0;
    double exponent = 0.0;
    double worst_derivative = 0.0;
    std::array<double, 3> worst_location = {0.0, 0.0, 0.0};
    int sample_count = 0;
    bool too_coarse = false;
    bool sign_ok = false;
    bool converged = true;
};

/// Solves the extension problem for (cone_psi)_+^exponent on a dim-3 half
/// grid, with exponent beta2 + gamma under the minimal operator (sub flavor)
/// or beta1 - gamma under the maximal operator (super flavor). The extension
/// of a homogeneous trace is homogeneous (uniqueness in the subcritical
/// growth class), so the truncated box is closed by a scaling fixed point:
/// outer Dirichlet values are pulled back from the solution on an interior
/// sphere, rescaled by |x|^exponent, and iterated until stable. Two seeds
/// start the iteration, an exact homogeneous majorant built from the one
/// dimensional boundary profiles and zero; both must reach the same fixed
/// point. A Dirichlet cap alone cannot certify the derivative sign: an O(1)
/// cap gap divided by the sample height h pollutes every one-sided slope.
ConeBarrierReport cone_barrier(const ConeBarrierSpec& spec, const ExponentPair& exponents,
                               std::shared_ptr<const Grid> grid, const SolveOptions& opts = {});

/// Constants of the half-space maximum principle check: v is expected to be
/// a supersolution up to sigma off the contact set, to vanish on it, to be
/// at least c0 where |x_n| >= c1, and at least -sigma everywhere; the
/// conclusion to verify is v >= 0 and v >= c2 |x_n| on the half ball.
struct MaxPrincipleSpec {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double sigma = 0.0;
};

struct MaxPrincipleReport {
    BarrierCertificate certificate;
    /// Smallest ratio v/|x_n| over off-plane nodes of the half ball.
    double fitted_c2 = 0.0;
    bool hypotheses_ok = false;
    bool conclusion_ok = false;
};

/// Comparison quadratic |x' - z'|^2 - (dim Lambda/lambda) x_n^2 used to push
/// the contact set away from a positivity region, and the extremal value of
/// its exact Hessian, which equals -2 Lambda for every ellipticity pair.
double comparison_quadratic(const std::array<double, 3>& x, const std::array<double, 3>& z,
                            const EllipticityPair& ell, int dim);
double comparison_quadratic_extremal(const EllipticityPair& ell, int dim);

/// Checks the four hypotheses above and the two conclusions on a symmetric
/// grid of extent 1. omega_star lists the thin nodes playing the role of the
/// contact set; hypothesis checks use the discrete minimal operator with the
/// grid's full frame family. Discrete checks pass when the measured deficit
/// stays below tol.
MaxPrincipleReport max_principle_check(const GridFunction& v, const MaxPrincipleSpec& spec,
                                       const std::vector<std::size_t>& omega_star,
                                       const EllipticityPair& ell, double tol = 1e-8);

enum class BarrierKind { Phi0, Series, SlitSubsol, Hopf, ConeSub, ConeSuper };

/// Umbrella description of one barrier for configuration-driven runs; only
/// the fields of the selected kind are read.
struct BarrierSpec {
    BarrierKind kind = BarrierKind::Phi0;
    std::vector<double> weights; ///< series
    double tail_bound = 0.0;     ///< series
    double rho = 0.1;            ///< slit_subsol, hopf
    ThinBall ball;               ///< slit_subsol
    double hopf_n = 0.0;         ///< hopf
    std::array<double, 3> e = {1.0, 0.0, 0.0}; ///< cone
    double eta = 0.1;                          ///< cone
    double gamma = 0.0;                        ///< cone

    /// Kind-specific invariants; cone kinds need the critical exponents to
    /// bound gamma. Throws std::invalid_argument on violation.
    void validate(const EllipticityPair& ell, int dim,
                  const ExponentPair* exponents = nullptr) const;
};

} // namespace slitfb
