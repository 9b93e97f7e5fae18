#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "slitfb/ellipticity.hpp"
#include "slitfb/pucci.hpp"
#include "slitfb/sym_matrix.hpp"

namespace slitfb {

/// Hessian of the homogeneous function r^beta g(theta) at r = 1, written in
/// the orthonormal polar frame (e_r, e_theta):
///
///   [ beta (beta - 1) g        (beta - 1) g'     ]
///   [ (beta - 1) g'            g'' + beta g      ]
SymMatrix polar_hessian(double beta, double g, double gp, double gpp);

/// Angular slice of a beta-homogeneous solution of an extremal equation on
/// the upper half plane. Samples are uniformly spaced on [0, theta_end]; g''
/// is stored alongside so the ODE residual stays checkable after the fact.
struct AngularProfile {
    double beta = 0.5;
    ExtremalSign sign = ExtremalSign::Plus;
    std::vector<double> theta;
    std::vector<double> g;
    std::vector<double> gp;
    std::vector<double> gpp;

    double theta_end() const { return theta.back(); }

    /// Cubic Hermite interpolation through the (g, g') samples.
    double eval_g(double th) const;
    double eval_gp(double th) const;

    /// Largest |M(polar_hessian)| over the stored samples; bounded by the
    /// implicit-solve tolerance when the profile is intact.
    double max_ode_residual(const EllipticityPair& ell) const;
};

/// Integrates the implicit angular ODE M(polar_hessian(beta, g, g', g'')) = 0
/// from g(0) = g0, g'(0) = gp0. The extremal operator is strictly increasing
/// in g'' with slope in [lambda, Lambda], so each stage solves for g'' by
/// bisection inside an a-priori bracket. Throws on profile blow-up or (never
/// observed, defensively) bracket failure.
AngularProfile solve_profile(double beta, const EllipticityPair& ell, ExtremalSign sign,
                             double g0, double gp0, double theta_end);

/// Slope at the positive trace of the homogeneous solution with g(0) = 1 and
/// g(pi) = 0: shoots on g'(0) until the far end vanishes. The plus sign gives
/// the upper derivative constant, the minus sign the lower one.
double derivative_constant(double beta, const EllipticityPair& ell, ExtremalSign sign);

/// Raised when the critical-exponent search finds no sign change; carries the
/// sampled constant-versus-beta curve for diagnosis.
struct BetaSearchError : std::runtime_error {
    BetaSearchError(const std::string& what, std::vector<std::array<double, 2>> samples)
        : std::runtime_error(what), curve(std::move(samples)) {}
    std::vector<std::array<double, 2>> curve;
};

/// Root of the derivative constant in (0.05, 0.95) by bracketing bisection:
/// the plus sign yields the lower critical exponent, the minus sign the upper
/// one. Both collapse to 1/2 for a linear operator.
double find_beta(const EllipticityPair& ell, ExtremalSign sign, double tol = 1e-8);

/// Homogeneity mu in (1, 2) of the half-space profile that detaches from the
/// slit: the even profile g(0) = 1, g'(0) = 0 first vanishes at the far end,
/// g(pi; mu) = 0, with one-sided admissibility g'(pi) >= 0. This is the growth
/// exponent the blow-up classifier measures at a regular contact-boundary
/// point; it reduces to 3/2 for a linear operator but is otherwise unrelated
/// to 1 + find_beta. Scans (1, 2) for the first sign change, then bisects.
double detachment_exponent(const EllipticityPair& ell, ExtremalSign sign, double tol = 1e-8);

/// The even angular profile at the detachment exponent itself: g(0) = 1,
/// g'(0) = 0, integrated to pi, with beta set to the exponent. Composing
/// r^beta g(atan2(|x_n|, x' . e)) gives the half-space solution the blow-up
/// classifier is expected to recover at a regular point.
AngularProfile detachment_profile(const EllipticityPair& ell, ExtremalSign sign, double tol = 1e-8);

/// The two critical homogeneity exponents of an ellipticity pair.
struct ExponentPair {
    double beta1 = 0.5;
    double beta2 = 0.5;
    EllipticityPair ell;
    double tol = 1e-8;
};

/// Runs find_beta for both signs and validates the ordering
/// 0 < beta1 <= 1/2 <= beta2 < 1 (with equality for linear operators).
ExponentPair compute_exponents(const EllipticityPair& ell, double tol = 1e-8);

/// CSV table: lambda, Lambda, beta1, beta2, C_bar_half, C_under_half, tol.
void write_exponent_table(std::ostream& out, const std::vector<ExponentPair>& rows);

/// Half-space slit solution in dimension n: the 2D profile composed with
/// (x' . e, |x_n|). Zero on the closed slit {x' . e <= 0, x_n = 0}.
struct SlitSolutionSpec {
    std::array<double, 3> e = {1.0, 0.0, 0.0}; ///< unit, tangential (e_n = 0)
    ExtremalSign sign = ExtremalSign::Plus;
    double exponent = 0.5; ///< the critical exponent matching sign
};

class SlitSolution {
public:
    /// Shoots the profile for the spec's exponent; rejects directions that
    /// are not unit tangential vectors and exponents that are visibly not
    /// critical (the shot initial slope must vanish).
    SlitSolution(const SlitSolutionSpec& spec, const EllipticityPair& ell, int dim);

    double operator()(std::array<double, 3> x) const;
    const AngularProfile& profile() const { return profile_; }
    const SlitSolutionSpec& spec() const { return spec_; }

private:
    SlitSolutionSpec spec_;
    int dim_;
    AngularProfile profile_;
};

/// One-off evaluation of the slit solution.
double w0_eval(std::array<double, 3> x, const SlitSolutionSpec& spec, const EllipticityPair& ell,
               int dim = 3);

} // namespace slitfb
