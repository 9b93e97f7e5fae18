#include "slitfb/angular_ode.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace slitfb {

namespace {

constexpr double kBaseStep = M_PI / 2048.0;
constexpr double kBlowupCap = 1e6;
constexpr double kGppTol = 1e-12;
constexpr double kShootTol = 1e-10;

/// Solves M(polar_hessian(beta, g, gp, q)) = 0 for q. The operator value is
/// strictly increasing in q with slope in [lambda, Lambda], which bounds the
/// root by the stated bracket.
double implicit_gpp(double beta, const EllipticityPair& ell, ExtremalSign sign, double g,
                    double gp) {
    const double bound = (ell.Lambda / ell.lambda) *
                             (std::abs(beta * (beta - 1.0) * g) +
                              2.0 * std::abs((beta - 1.0) * gp) + std::abs(beta * g)) +
                         1.0;
    auto value = [&](double q) { return pucci_eval(polar_hessian(beta, g, gp, q), ell, sign); };
    double lo = -bound;
    double hi = bound;
    if (value(lo) > 0.0 || value(hi) < 0.0) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "angular ODE bracket failed: beta=%.6g g=%.6g g'=%.6g bound=%.6g", beta, g,
                      gp, bound);
        throw std::logic_error(msg);
    }
    while (hi - lo > kGppTol) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (value(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct HermiteSlot {
    std::size_t i;
    double s;
    double dt;
};

HermiteSlot locate(const AngularProfile& p, double th) {
    const double end = p.theta_end();
    if (th < -1e-12 || th > end + 1e-12) {
        throw std::out_of_range("angle outside the profile range");
    }
    const double dt = p.theta[1] - p.theta[0];
    std::size_t i = static_cast<std::size_t>(std::floor(std::max(0.0, th) / dt));
    if (i >= p.theta.size() - 1) i = p.theta.size() - 2;
    return {i, (th - p.theta[i]) / dt, dt};
}

} // namespace

SymMatrix polar_hessian(double beta, double g, double gp, double gpp) {
    SymMatrix h(2);
    h.at(0, 0) = beta * (beta - 1.0) * g;
    h.at(0, 1) = (beta - 1.0) * gp;
    h.at(1, 1) = gpp + beta * g;
    return h;
}

double AngularProfile::eval_g(double th) const {
    const auto [i, s, dt] = locate(*this, th);
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * g[i] + (s3 - 2.0 * s2 + s) * dt * gp[i] +
           (-2.0 * s3 + 3.0 * s2) * g[i + 1] + (s3 - s2) * dt * gp[i + 1];
}

double AngularProfile::eval_gp(double th) const {
    const auto [i, s, dt] = locate(*this, th);
    const double s2 = s * s;
    return ((6.0 * s2 - 6.0 * s) * g[i] + (3.0 * s2 - 4.0 * s + 1.0) * dt * gp[i] +
            (6.0 * s - 6.0 * s2) * g[i + 1] + (3.0 * s2 - 2.0 * s) * dt * gp[i + 1]) /
           dt;
}

double AngularProfile::max_ode_residual(const EllipticityPair& ell) const {
    double r = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        r = std::max(r, std::abs(pucci_eval(polar_hessian(beta, g[i], gp[i], gpp[i]), ell, sign)));
    }
    return r;
}

namespace {

/// Runs the RK4 sweep, stopping early once the trajectory leaves the trust
/// region. Returns true when theta_end was reached; on early exit the partial
/// trajectory, including the offending state, is left in *p.
bool integrate_profile(double beta, const EllipticityPair& ell, ExtremalSign sign, double g0,
                       double gp0, double theta_end, AngularProfile* p) {
    const int n = std::max(1, static_cast<int>(std::lround(theta_end / kBaseStep)));
    const double dt = theta_end / n;

    p->beta = beta;
    p->sign = sign;
    p->theta.reserve(n + 1);
    p->g.reserve(n + 1);
    p->gp.reserve(n + 1);
    p->gpp.reserve(n + 1);

    auto accel = [&](double g, double gp) { return implicit_gpp(beta, ell, sign, g, gp); };

    double g = g0;
    double gp = gp0;
    p->theta.push_back(0.0);
    p->g.push_back(g);
    p->gp.push_back(gp);
    p->gpp.push_back(accel(g, gp));

    for (int k = 1; k <= n; ++k) {
        const double a1 = p->gpp.back();
        const double g2 = g + 0.5 * dt * gp, v2 = gp + 0.5 * dt * a1;
        const double a2 = accel(g2, v2);
        const double g3 = g + 0.5 * dt * v2, v3 = gp + 0.5 * dt * a2;
        const double a3 = accel(g3, v3);
        const double g4 = g + dt * v3, v4 = gp + dt * a3;
        const double a4 = accel(g4, v4);
        const double gn = g + dt / 6.0 * (gp + 2.0 * v2 + 2.0 * v3 + v4);
        const double vn = gp + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        g = gn;
        gp = vn;
        p->theta.push_back(k * dt);
        p->g.push_back(g);
        p->gp.push_back(gp);
        p->gpp.push_back(accel(g, gp));
        if (std::abs(g) > kBlowupCap || std::abs(gp) > kBlowupCap) return false;
    }
    return true;
}

}  // namespace

AngularProfile solve_profile(double beta, const EllipticityPair& ell, ExtremalSign sign, double g0,
                             double gp0, double theta_end) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("homogeneity degree must lie in (0, 1)");
    }
    if (!(theta_end > 0.0 && theta_end <= M_PI)) {
        throw std::invalid_argument("profile range must lie in (0, pi]");
    }
    AngularProfile p;
    if (!integrate_profile(beta, ell, sign, g0, gp0, theta_end, &p)) {
        throw std::runtime_error("angular profile blew up before reaching theta_end");
    }
    return p;
}

double derivative_constant(double beta, const EllipticityPair& ell, ExtremalSign sign) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("homogeneity degree must lie in (0, 1)");
    }
    // A divergent trajectory is a definitive overshoot for the shooting
    // iteration, so it maps to a capped end value carrying the escape sign.
    auto end_value = [&](double slope) {
        AngularProfile p;
        if (integrate_profile(beta, ell, sign, 1.0, slope, M_PI, &p)) return p.g.back();
        const double g_last = p.g.back();
        const double gp_last = p.gp.back();
        return std::copysign(kBlowupCap, std::abs(g_last) >= std::abs(gp_last) ? g_last : gp_last);
    };

    // The end value grows monotonically with the initial slope; bracket the
    // root starting from the linear-operator closed form.
    double guess = -beta / std::tan(beta * M_PI);
    double lo = guess;
    double flo = end_value(lo);
    double hi = guess;
    double fhi = flo;
    double step = 0.25;
    for (int k = 0; k < 80 && flo > 0.0; ++k) {
        hi = lo;
        fhi = flo;
        lo -= step;
        step *= 2.0;
        flo = end_value(lo);
    }
    step = 0.25;
    for (int k = 0; k < 80 && fhi < 0.0; ++k) {
        lo = hi;
        flo = fhi;
        hi += step;
        step *= 2.0;
        fhi = end_value(hi);
    }
    if (std::abs(flo) <= kShootTol) return lo;
    if (std::abs(fhi) <= kShootTol) return hi;
    if (flo > 0.0 || fhi < 0.0) throw std::runtime_error("shooting failed to bracket");

    // Secant steps inside the bracket, interleaved with plain bisection so the
    // width provably collapses even when the end value is very steep.
    for (int k = 0; k < 200; ++k) {
        double x = hi - fhi * (hi - lo) / (fhi - flo);
        if (k % 2 == 1 || !(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double fx = end_value(x);
        if (std::abs(fx) <= kShootTol) return x;
        if (fx < 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if (hi - lo <= 1e-14 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
            return 0.5 * (lo + hi);
        }
    }
    throw std::runtime_error("shooting for the derivative constant did not converge");
}

double detachment_exponent(const EllipticityPair& ell, ExtremalSign sign, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
    auto end_state = [&](double mu) {
        AngularProfile p;
        if (integrate_profile(mu, ell, sign, 1.0, 0.0, M_PI, &p)) {
            return std::array<double, 2>{p.g.back(), p.gp.back()};
        }
        const double g_last = p.g.back();
        const double gp_last = p.gp.back();
        const double esc = std::abs(g_last) >= std::abs(gp_last) ? g_last : gp_last;
        return std::array<double, 2>{std::copysign(kBlowupCap, esc), 0.0};
    };

    // Walk up from the fold at mu = 1 to the first sign change of g(pi; mu),
    // then bisect. The scan step is coarse; profiles vary slowly in mu.
    constexpr int kScanSteps = 64;
    const double mu_min = 1.0 + 1e-6;
    const double mu_max = 2.0 - 1e-6;
    double lo = mu_min;
    double flo = end_state(lo)[0];
    if (flo == 0.0) return lo;
    double hi = 0.0;
    bool bracketed = false;
    for (int k = 1; k <= kScanSteps; ++k) {
        const double m = mu_min + (mu_max - mu_min) * k / kScanSteps;
        const double fm = end_state(m)[0];
        if (fm == 0.0) return m;
        if ((fm < 0.0) != (flo < 0.0)) {
            hi = m;
            bracketed = true;
            break;
        }
        lo = m;
        flo = fm;
    }
    if (!bracketed) {
        std::vector<std::array<double, 2>> curve;
        for (int k = 0; k <= 9; ++k) {
            const double m = mu_min + (mu_max - mu_min) * k / 9.0;
            curve.push_back({m, end_state(m)[0]});
        }
        throw BetaSearchError("no detachment exponent in (1, 2)", std::move(curve));
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = end_state(mid)[0];
        if (fmid == 0.0) {
            lo = mid;
            hi = mid;
            break;
        }
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    const double mu = 0.5 * (lo + hi);
    if (end_state(mu)[1] < 0.0) {
        throw std::runtime_error("detachment profile fails one-sided admissibility");
    }
    return mu;
}

AngularProfile detachment_profile(const EllipticityPair& ell, ExtremalSign sign, double tol) {
    const double mu = detachment_exponent(ell, sign, tol);
    AngularProfile p;
    if (!integrate_profile(mu, ell, sign, 1.0, 0.0, M_PI, &p)) {
        throw std::runtime_error("detachment profile blew up at its own exponent");
    }
    return p;
}

double find_beta(const EllipticityPair& ell, ExtremalSign sign, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
    double lo = 0.05;
    double hi = 0.95;
    double flo = derivative_constant(lo, ell, sign);
    const double fhi = derivative_constant(hi, ell, sign);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) {
        std::vector<std::array<double, 2>> curve;
        for (int k = 0; k <= 9; ++k) {
            const double b = lo + (hi - lo) * k / 9.0;
            curve.push_back({b, derivative_constant(b, ell, sign)});
        }
        throw BetaSearchError("no sign change of the derivative constant in (0.05, 0.95)",
                              std::move(curve));
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = derivative_constant(mid, ell, sign);
        if (fmid == 0.0) return mid;
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

ExponentPair compute_exponents(const EllipticityPair& ell, double tol) {
    ExponentPair out{find_beta(ell, ExtremalSign::Plus, tol),
                     find_beta(ell, ExtremalSign::Minus, tol), ell, tol};
    const double slack = std::max(10.0 * tol, 1e-6);
    const bool ordered = out.beta1 > 0.0 && out.beta1 <= 0.5 + slack &&
                         out.beta2 >= 0.5 - slack && out.beta2 < 1.0;
    const bool linear_ok = !ell.is_linear() || (std::abs(out.beta1 - 0.5) <= slack &&
                                                std::abs(out.beta2 - 0.5) <= slack);
    if (!ordered || !linear_ok) {
        throw std::logic_error("critical exponents violate their ordering invariant");
    }
    return out;
}

void write_exponent_table(std::ostream& out, const std::vector<ExponentPair>& rows) {
    out << "lambda,Lambda,beta1,beta2,C_bar_half,C_under_half,tol\n";
    char line[256];
    for (const ExponentPair& r : rows) {
        const double cbar = derivative_constant(0.5, r.ell, ExtremalSign::Plus);
        const double cund = derivative_constant(0.5, r.ell, ExtremalSign::Minus);
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.ell.lambda, r.ell.Lambda, r.beta1, r.beta2, cbar, cund, r.tol);
        out << line;
    }
}

SlitSolution::SlitSolution(const SlitSolutionSpec& spec, const EllipticityPair& ell, int dim)
    : spec_(spec), dim_(dim) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("slit solutions live in dimension 2 or 3");
    double norm2 = 0.0;
    for (int i = 0; i + 1 < dim; ++i) norm2 += spec.e[i] * spec.e[i];
    if (std::abs(norm2 - 1.0) > 1e-12 || spec.e[dim - 1] != 0.0) {
        throw std::invalid_argument("slit direction must be a unit tangential vector");
    }
    const double slope = derivative_constant(spec.exponent, ell, spec.sign);
    if (std::abs(slope) > 1e-4) {
        throw std::invalid_argument("exponent is not critical: the shot initial slope is nonzero");
    }
    profile_ = solve_profile(spec.exponent, ell, spec.sign, 1.0, slope, M_PI);
}

double SlitSolution::operator()(std::array<double, 3> x) const {
    double s = 0.0;
    for (int i = 0; i + 1 < dim_; ++i) s += x[i] * spec_.e[i];
    const double t = std::abs(x[dim_ - 1]);
    if (t == 0.0 && s <= 0.0) return 0.0;
    const double r = std::hypot(s, t);
    if (r == 0.0) return 0.0;
    return std::pow(r, spec_.exponent) * profile_.eval_g(std::atan2(t, s));
}

double w0_eval(std::array<double, 3> x, const SlitSolutionSpec& spec, const EllipticityPair& ell,
               int dim) {
    return SlitSolution(spec, ell, dim)(x);
}

} // namespace slitfb
