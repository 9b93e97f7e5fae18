#include "slitfb/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "slitfb/discrete_operator.hpp"
#include "slitfb/pucci.hpp"
#include "slitfb/stencil.hpp"
#include "slitfb/sym_matrix.hpp"

namespace slitfb {

namespace {

void check_dim(int dim, const char* who) {
    if (dim != 2 && dim != 3) {
        throw std::invalid_argument(std::string(who) + ": dim must be 2 or 3");
    }
}

double norm_dim(const std::array<double, 3>& x, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += x[k] * x[k];
    return std::sqrt(s);
}

/// Largest slope of phi0 along rays from the origin: each term of the dyadic
/// series is bounded by its weight times min{2^i, (1 + 2N)|x|}.
double phi0_lipschitz(const EllipticityPair& ell, int dim) {
    return 1.0 + 2.0 * (dim - 1) * ell.Lambda / ell.lambda;
}

void check_weights(const std::vector<double>& a, double tail_bound, const char* who) {
    for (double v : a) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument(std::string(who) + ": weights must be finite and nonnegative");
        }
    }
    if (!std::isfinite(tail_bound) || tail_bound < 0.0) {
        throw std::invalid_argument(std::string(who) +
                                    ": tail declaration must be a finite nonnegative sum");
    }
}

/// Unit tangential direction: unit length in the first dim-1 components and
/// zero beyond them.
void check_tangential(const std::array<double, 3>& e, int dim, const char* who) {
    double n2 = 0.0;
    for (int k = 0; k + 1 < dim; ++k) n2 += e[k] * e[k];
    for (int k = dim - 1; k < 3; ++k) {
        if (e[k] != 0.0) {
            throw std::invalid_argument(std::string(who) + ": direction must be tangential");
        }
    }
    if (std::abs(n2 - 1.0) > 1e-12) {
        throw std::invalid_argument(std::string(who) + ": direction must have unit length");
    }
}

} // namespace

bool BarrierCertificate::all_satisfied() const {
    for (const CertificateCondition& c : conditions) {
        if (!c.satisfied) return false;
    }
    return true;
}

std::string BarrierCertificate::to_json() const {
    nlohmann::json j;
    j["barrier"] = barrier;
    j["conditions"] = nlohmann::json::array();
    for (const CertificateCondition& c : conditions) {
        j["conditions"].push_back({{"name", c.name},
                                   {"satisfied", c.satisfied},
                                   {"worst_violation", c.worst_violation},
                                   {"location", c.location}});
    }
    return j.dump(2);
}

double eval_phi0(const std::array<double, 3>& x, const EllipticityPair& ell, int dim) {
    check_dim(dim, "eval_phi0");
    double tang2 = 0.0;
    for (int k = 0; k + 1 < dim; ++k) tang2 += x[k] * x[k];
    const double t = std::abs(x[dim - 1]);
    if (tang2 > 1.0 || t > 1.0) return 1.0;
    const double n_coeff = (dim - 1) * ell.Lambda / ell.lambda;
    return std::min(1.0, tang2 + n_coeff * (2.0 * t - t * t));
}

double phi0_quadratic_extremal(const EllipticityPair& ell, int dim) {
    check_dim(dim, "phi0_quadratic_extremal");
    const double n_coeff = (dim - 1) * ell.Lambda / ell.lambda;
    std::array<double, 3> d = {2.0, 2.0, 2.0};
    d[dim - 1] = -2.0 * n_coeff;
    return pucci_plus(SymMatrix::diag(std::span<const double>(d.data(), dim)), ell);
}

double eval_series_barrier(const std::array<double, 3>& x, const std::vector<double>& a,
                           double tail_bound, const EllipticityPair& ell, int dim,
                           double rel_tol) {
    check_dim(dim, "eval_series_barrier");
    check_weights(a, tail_bound, "eval_series_barrier");
    if (!std::isfinite(rel_tol) || rel_tol <= 0.0) {
        throw std::invalid_argument("eval_series_barrier: rel_tol must be positive");
    }

    const double reach = phi0_lipschitz(ell, dim) * norm_dim(x, dim);

    // Suffix bounds over the stored prefix; each dropped term costs at most
    // a_i min{2^i, reach}, and the declared tail at most reach per unit mass.
    const std::size_t n = a.size();
    std::vector<double> suffix(n + 1, reach * tail_bound);
    for (std::size_t i = n; i-- > 0;) {
        suffix[i] = suffix[i + 1] + a[i] * std::min(std::ldexp(1.0, static_cast<int>(i)), reach);
    }

    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 3> y = x;
        const double inv = std::ldexp(1.0, -static_cast<int>(i));
        for (int k = 0; k < dim; ++k) y[k] *= inv;
        value += std::ldexp(a[i], static_cast<int>(i)) * eval_phi0(y, ell, dim);
        if (suffix[i + 1] <= rel_tol * value) return value;
    }
    if (suffix[n] > rel_tol * value) {
        throw std::invalid_argument(
            "eval_series_barrier: declared tail too large for the requested accuracy here");
    }
    return value;
}

SeriesWeights series_weights(std::vector<double> a, double tail_bound) {
    check_weights(a, tail_bound, "series_weights");

    SeriesWeights w;
    double total = tail_bound;
    for (double v : a) total += v;
    if (total > 1.0) {
        w.scale = 1.0 / total;
        for (double& v : a) v *= w.scale;
        tail_bound *= w.scale;
    }

    const std::size_t n = a.size();
    std::vector<double> s(n + 1, tail_bound);
    for (std::size_t k = n; k-- > 0;) s[k] = s[k + 1] + a[k];

    // b_k = a_k / sqrt(s_k) is undefined once the tail sum hits zero, which
    // with nonnegative weights can only happen on a trailing run of zeros.
    std::size_t keep = n;
    while (keep > 0 && s[keep - 1] == 0.0) --keep;
    w.truncated = keep < n;
    a.resize(keep);

    w.b.resize(keep);
    for (std::size_t k = 0; k < keep; ++k) w.b[k] = a[k] / std::sqrt(s[k]);
    w.a = std::move(a);
    w.tail_bound = tail_bound;
    return w;
}

SlitBarrier slit_subsolution(double rho, const ThinBall& ball, const EllipticityPair& ell,
                             std::shared_ptr<const Grid> grid, const SolveOptions& opts) {
    if (!grid) throw std::invalid_argument("slit_subsolution: grid required");
    const Grid& g = *grid;
    const int dim = g.dim();
    if (!g.symmetric_in_xn() || g.shape() != DomainShape::Ball) {
        throw std::invalid_argument("slit_subsolution: need a symmetric ball grid");
    }
    if (std::abs(g.extent() - 1.0) > 1e-12) {
        throw std::invalid_argument("slit_subsolution: grid extent must be 1");
    }
    if (!(rho > 0.0 && rho < 1.0)) {
        throw std::invalid_argument("slit_subsolution: rho must be in (0, 1)");
    }
    for (int k = dim - 1; k < 3; ++k) {
        if (ball.center[k] != 0.0) {
            throw std::invalid_argument("slit_subsolution: thin ball center must lie on the plane");
        }
    }
    const double off = norm_dim(ball.center, dim);
    if (!(ball.radius > 0.0) || off + ball.radius >= 1.0) {
        throw std::invalid_argument(
            "slit_subsolution: thin ball must sit strictly inside the unit thin ball");
    }

    const double r2 = ball.radius * ball.radius;
    ScalarField bump = [ball, r2](std::array<double, 3> x) {
        double q = 0.0;
        for (int k = 0; k < 3; ++k) q += (x[k] - ball.center[k]) * (x[k] - ball.center[k]);
        return std::max(0.0, 1.0 - q / r2);
    };
    ScalarField plateau = [rho, dim](std::array<double, 3> x) {
        const double r = norm_dim(x, dim);
        if (r <= 1.0 - rho) return 1.0;
        if (r >= 1.0 - 0.5 * rho) return 0.0;
        return (1.0 - 0.5 * rho - r) / (0.5 * rho);
    };

    GridSpec hs;
    hs.dim = dim;
    hs.h = g.h();
    hs.extent = 1.0;
    hs.half_in_xn = true;
    hs.shape = DomainShape::Ball;
    auto half = std::make_shared<const Grid>(hs);

    SignoriniProblem p;
    p.grid = half;
    p.op = OperatorSpec{ell, ExtremalSign::Minus, std::nullopt};
    p.obstacle = ObstacleSpec{[](std::array<double, 3>) { return 0.0; }, 0.0};
    p.dirichlet = bump;
    p.mode = ProblemMode::PureDirichlet;

    double kappa = 1.0;
    p.rhs = [plateau](std::array<double, 3> x) { return plateau(x); };
    SolveReport rep = solve_signorini(p, opts);
    double low_point = *std::min_element(rep.solution.values().begin(), rep.solution.values().end());
    bool accepted = !rep.failed && low_point >= -1e-12;
    for (int step = 1; step <= 20 && !accepted; ++step) {
        kappa = std::ldexp(1.0, -step);
        p.rhs = [kappa, plateau](std::array<double, 3> x) { return kappa * plateau(x); };
        rep = solve_signorini(p, opts);
        low_point = *std::min_element(rep.solution.values().begin(), rep.solution.values().end());
        accepted = !rep.failed && low_point >= -1e-12;
    }

    // Even reflection: the symmetric grid stores the same upper-half lattice,
    // so values transfer node by node through the shared coordinates.
    GridFunction psi_scaled(half);
    for (std::size_t idx = 0; idx < half->node_count(); ++idx) {
        psi_scaled[idx] = rep.solution[idx] / kappa;
    }
    GridFunction phi(grid);
    for (std::size_t idx = 0; idx < half->node_count(); ++idx) {
        phi[grid->index(half->coords(idx))] = psi_scaled[idx];
    }
    double support_bound = 0.0;
    for (std::size_t node : g.thin_nodes()) {
        const auto x = g.point(node);
        double q = 0.0;
        for (int k = 0; k < dim; ++k) q += (x[k] - ball.center[k]) * (x[k] - ball.center[k]);
        if (q <= r2) support_bound = std::max(support_bound, phi[node]);
    }

    // Condition 1, off the plane: the half-grid stencils are exactly the ones
    // the solve enforced, so the certified slack is the recomputed residual
    // divided by kappa. Reflected long-arm stencils would cross the kink and
    // measure nothing about the smooth solution, so they are not used.
    const SolveResiduals hres = residual(p, rep.solution);
    const double slack1 = (2.0 * hres.interior + 1e-14) / kappa;
    const DirectionSet dirs = DirectionSet::for_dim(dim);
    const GridFunction mphi_half = discrete_extremal(psi_scaled, ell, dirs, ExtremalSign::Minus);

    BarrierCertificate cert;
    cert.barrier = "slit_subsol";
    CertificateCondition interior{"interior_subsolution", true,
                                  -std::numeric_limits<double>::infinity(), {0, 0, 0}};
    auto record = [](CertificateCondition& c, double deficit, const std::array<double, 3>& x) {
        if (deficit > c.worst_violation) {
            c.worst_violation = deficit;
            c.location = x;
        }
    };
    for (std::size_t node : half->interior_nodes()) {
        const auto x = half->point(node);
        const double required = norm_dim(x, dim) <= 1.0 - rho ? 1.0 : 0.0;
        record(interior, required - mphi_half[node], x);
    }
    // Condition 1 on the plane outside the thin ball: a convex reflection
    // kink admits no touching parabola from above, so the inequality holds
    // vacuously; the deficit measured is the kink's concavity.
    for (std::size_t node : g.thin_nodes()) {
        const auto x = g.point(node);
        double q = 0.0;
        for (int k = 0; k < dim; ++k) q += (x[k] - ball.center[k]) * (x[k] - ball.center[k]);
        if (q <= r2) continue;
        const auto c = g.coords(node);
        std::array<int, 3> up = {0, 0, 0};
        up[dim - 1] = 1;
        const std::size_t above = g.offset_index(c, up);
        if (above == Grid::npos) continue;
        record(interior, phi[node] - phi[above], x);
    }
    interior.satisfied = interior.worst_violation <= slack1;
    cert.conditions.push_back(interior);

    CertificateCondition nonneg{"nonnegative", true, -std::numeric_limits<double>::infinity(),
                                {0, 0, 0}};
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        record(nonneg, -phi[idx], g.point(idx));
    }
    nonneg.satisfied = nonneg.worst_violation <= 1e-10;
    cert.conditions.push_back(nonneg);

    CertificateCondition support{"thin_support", true, -std::numeric_limits<double>::infinity(),
                                 {0, 0, 0}};
    for (std::size_t node : g.thin_nodes()) {
        const auto x = g.point(node);
        double q = 0.0;
        for (int k = 0; k < dim; ++k) q += (x[k] - ball.center[k]) * (x[k] - ball.center[k]);
        if (q > r2) record(support, std::abs(phi[node]), x);
    }
    support.satisfied = support.worst_violation <= 1e-12;
    cert.conditions.push_back(support);

    CertificateCondition boundary{"zero_boundary", true, -std::numeric_limits<double>::infinity(),
                                  {0, 0, 0}};
    for (std::size_t node : g.boundary_nodes()) {
        record(boundary, std::abs(phi[node]), g.point(node));
    }
    boundary.satisfied = boundary.worst_violation <= 1e-12;
    cert.conditions.push_back(boundary);

    return SlitBarrier{std::move(phi), kappa,    support_bound,
                       std::move(cert), !accepted, accepted ? 0.0 : low_point};
}

double hopf_barrier(const std::array<double, 3>& x, double N, double rho) {
    return std::exp(-N * norm_dim(x, 3)) - std::exp(-N * 0.5 * rho);
}

bool hopf_certificate(double N, double rho, const EllipticityPair& ell, int dim) {
    check_dim(dim, "hopf_certificate");
    if (!std::isfinite(rho) || rho <= 0.0 || !std::isfinite(N)) {
        throw std::invalid_argument("hopf_certificate: need finite N and positive rho");
    }
    if (N <= 0.0) return false;
    // The subsolution factor lambda N^2 - Lambda N (dim-1)/|x| increases with
    // |x|, so the whole annulus is covered by its inner radius.
    return ell.lambda * N * N - ell.Lambda * N * (dim - 1) / (0.25 * rho) > 0.0;
}

double cone_psi(const std::array<double, 3>& x, const std::array<double, 3>& e, double eta,
                bool super, int dim) {
    double s = 0.0;
    double t2 = 0.0;
    for (int k = 0; k + 1 < dim; ++k) {
        s += x[k] * e[k];
        t2 += x[k] * x[k];
    }
    const double t = std::sqrt(t2);
    if (t == 0.0) return 0.0;
    const double ray = s / t;
    const double correction = eta * t * (1.0 - ray * ray);
    return super ? s + correction : s - correction;
}

namespace {

// Trilinear interpolation of a grid function at an off-lattice point. The
// point must lie inside the lattice box; cells are clamped at the rim.
double trilinear(const GridFunction& f, const std::array<double, 3>& p) {
    const Grid& g = f.grid();
    const double h = g.h();
    const int m = static_cast<int>(std::lround(g.extent() / h));
    int base[3] = {0, 0, 0};
    double w[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
        const double fc = p[k] / h;
        double fl = std::floor(fc);
        const double lo = k == 2 ? 0.0 : -m;
        fl = std::clamp(fl, lo, static_cast<double>(m - 1));
        base[k] = static_cast<int>(fl);
        w[k] = std::clamp(fc - fl, 0.0, 1.0);
    }
    double value = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
        std::array<int, 3> c;
        double weight = 1.0;
        for (int k = 0; k < 3; ++k) {
            const int bit = (corner >> k) & 1;
            c[k] = base[k] + bit;
            weight *= bit ? w[k] : 1.0 - w[k];
        }
        if (weight == 0.0) continue;
        value += weight * f[g.index(c)];
    }
    return value;
}

} // namespace

ConeBarrierReport cone_barrier(const ConeBarrierSpec& spec, const ExponentPair& exponents,
                               std::shared_ptr<const Grid> grid, const SolveOptions& opts) {
    if (!grid) throw std::invalid_argument("cone_barrier: grid required");
    const Grid& g = *grid;
    const int dim = g.dim();
    if (dim != 3) throw std::invalid_argument("cone_barrier: the cone geometry needs dim 3");
    if (!g.half_in_xn() || g.symmetric_in_xn()) {
        throw std::invalid_argument("cone_barrier: need a plain half grid");
    }
    check_tangential(spec.e, dim, "cone_barrier");
    if (!std::isfinite(spec.eta) || spec.eta <= 0.0) {
        throw std::invalid_argument("cone_barrier: eta must be positive");
    }
    const double gamma_cap = std::min(exponents.beta1, 1.0 - exponents.beta2);
    if (!(spec.gamma > 0.0 && spec.gamma < gamma_cap)) {
        throw std::invalid_argument("cone_barrier: gamma must lie in (0, min(beta1, 1 - beta2))");
    }

    const EllipticityPair ell = exponents.ell;
    const bool super = spec.super;
    const double expo = super ? exponents.beta1 - spec.gamma : exponents.beta2 + spec.gamma;
    const ExtremalSign sign = super ? ExtremalSign::Plus : ExtremalSign::Minus;

    ScalarField trace = [spec, expo, dim](std::array<double, 3> x) {
        const double p = cone_psi(x, spec.e, spec.eta, spec.super, dim);
        return p > 0.0 ? std::pow(p, expo) : 0.0;
    };

    // Upper seed: the trace is dominated by a sum of one dimensional powered
    // traces whose extensions are exact homogeneous profiles.
    const AngularProfile prof =
        solve_profile(expo, ell, sign, 1.0, derivative_constant(expo, ell, sign), std::numbers::pi);
    std::vector<std::array<double, 2>> rays; // components along e and its tangential normal
    double factor = 1.0;
    if (!super) {
        // psi_sub is dominated by the linear trace along e itself.
        rays.push_back({1.0, 0.0});
    } else {
        // |x'|^expo is dominated by the four half-line traces of the frame,
        // and psi_super by (eta + 1/(4 eta)) |x'| once eta exceeds 1/2.
        rays = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
        const double stretch = spec.eta <= 0.5 ? 1.0 : spec.eta + 0.25 / spec.eta;
        factor = std::pow(stretch, expo);
    }
    const std::array<double, 3> e2 = {-spec.e[1], spec.e[0], 0.0};
    ScalarField upper = [spec, e2, rays, factor, expo, prof, dim](std::array<double, 3> x) {
        double se = 0.0;
        double sn = 0.0;
        for (int k = 0; k + 1 < dim; ++k) {
            se += x[k] * spec.e[k];
            sn += x[k] * e2[k];
        }
        const double t = x[dim - 1];
        double total = 0.0;
        for (const auto& ray : rays) {
            const double s = ray[0] * se + ray[1] * sn;
            const double r = std::hypot(s, t);
            if (r > 0.0) total += std::pow(r, expo) * prof.eval_g(std::atan2(t, s));
        }
        return factor * total;
    };
    ScalarField zero = [](std::array<double, 3>) { return 0.0; };

    // Scaling closure of the truncated box. Outer boundary nodes take their
    // values from the solution itself, pulled back to the sphere |x| = r0 and
    // rescaled by homogeneity, iterated to a fixed point.
    const double h = g.h();
    const double pull_r = 0.5 * g.extent();
    std::vector<std::size_t> outer;
    std::vector<int> outer_slot(g.node_count(), -1);
    for (std::size_t node : g.boundary_nodes()) {
        if (g.coords(node)[dim - 1] == 0) continue;
        outer_slot[node] = static_cast<int>(outer.size());
        outer.push_back(node);
    }

    bool all_converged = true;
    auto run = [&](const std::vector<double>& far_values, const GridFunction* warm,
                   const ScalarField& seed, const SolveOptions& solve_opts) {
        ScalarField far = [&](std::array<double, 3> x) {
            std::array<int, 3> c = {0, 0, 0};
            for (int k = 0; k < dim; ++k) c[k] = static_cast<int>(std::lround(x[k] / h));
            const std::size_t node = g.index(c);
            const int slot = outer_slot[node];
            if (slot >= 0) return far_values[static_cast<std::size_t>(slot)];
            return warm ? (*warm)[node] : seed(x);
        };
        ExtensionResult ext = extension_solve(trace, ell, sign, grid, FarFieldCap{far, nullptr},
                                              solve_opts);
        if (ext.upper_report.failed) all_converged = false;
        return std::move(ext.upper_report.solution);
    };
    auto pullback = [&](const GridFunction& f) {
        std::vector<double> data(outer.size());
        for (std::size_t i = 0; i < outer.size(); ++i) {
            const auto x = g.point(outer[i]);
            const double r = norm_dim(x, dim);
            std::array<double, 3> p = {0.0, 0.0, 0.0};
            for (int k = 0; k < dim; ++k) p[k] = x[k] * (pull_r / r);
            data[i] = std::pow(r / pull_r, expo) * trilinear(f, p);
        }
        return data;
    };
    SolveOptions march = opts;
    march.tol = std::max(opts.tol, 1e-7);
    auto closure = [&](const ScalarField& seed) {
        std::vector<double> cur(outer.size());
        for (std::size_t i = 0; i < outer.size(); ++i) cur[i] = seed(g.point(outer[i]));
        GridFunction f = run(cur, nullptr, seed, march);
        bool settled = false;
        double prev_delta = std::numeric_limits<double>::infinity();
        bool just_accelerated = false;
        for (int it = 0; it < 60 && !settled; ++it) {
            std::vector<double> next = pullback(f);
            double delta = 0.0;
            double scale = 1.0;
            for (std::size_t i = 0; i < outer.size(); ++i) {
                delta = std::max(delta, std::abs(next[i] - cur[i]));
                scale = std::max(scale, std::abs(next[i]));
            }
            if (delta <= 1e-6 * scale) {
                settled = true;
                break;
            }
            // The data map contracts geometrically; once the ratio of
            // consecutive increments is visible, jump to the estimated limit.
            if (!just_accelerated && it >= 2 && delta < prev_delta) {
                const double q = std::min(delta / prev_delta, 0.95);
                const double boost = q / (1.0 - q);
                for (std::size_t i = 0; i < outer.size(); ++i) {
                    next[i] += boost * (next[i] - cur[i]);
                }
                just_accelerated = true;
            } else {
                just_accelerated = false;
            }
            prev_delta = delta;
            cur = std::move(next);
            f = run(cur, &f, seed, march);
        }
        if (!settled) all_converged = false;
        // Final polish at the caller's tolerance with the settled far field.
        return run(cur, &f, seed, opts);
    };

    GridFunction f_hi = closure(upper);
    GridFunction f_lo = closure(zero);

    ConeBarrierReport report{.field = GridFunction(grid), .bracket_gap = 0.0, .exponent = expo};
    const double region = 0.6 * g.extent();
    for (std::size_t node = 0; node < g.node_count(); ++node) {
        report.field[node] = 0.5 * (f_hi[node] + f_lo[node]);
        if (norm_dim(g.point(node), dim) <= region) {
            report.bracket_gap = std::max(report.bracket_gap, std::abs(f_hi[node] - f_lo[node]));
        }
    }
    report.converged = all_converged;
    report.worst_derivative = super ? -std::numeric_limits<double>::infinity()
                                    : std::numeric_limits<double>::infinity();

    // One-sided normal derivative over plane nodes that sit well inside the
    // positivity cone and away from both the origin and the far cap.
    const double lo = 0.25 * g.extent();
    const double hi = 0.6 * g.extent();
    std::array<int, 3> up = {0, 0, 0};
    up[dim - 1] = 1;
    for (std::size_t node : g.boundary_nodes()) {
        const auto c = g.coords(node);
        if (c[dim - 1] != 0) continue;
        const auto x = g.point(node);
        const double r = norm_dim(x, dim);
        if (r < lo || r > hi) continue;
        if (cone_psi(x, spec.e, spec.eta, super, dim) < 2.0 * h) continue;
        const std::size_t above = g.offset_index(c, up);
        if (above == Grid::npos) continue;
        const double slope = (report.field[above] - report.field[node]) / h;
        ++report.sample_count;
        const bool extreme =
            super ? slope > report.worst_derivative : slope < report.worst_derivative;
        if (extreme) {
            report.worst_derivative = slope;
            report.worst_location = x;
        }
    }
    report.too_coarse = report.sample_count == 0;
    if (report.too_coarse) {
        report.worst_derivative = 0.0;
        report.sign_ok = false;
    } else {
        report.sign_ok = super ? report.worst_derivative < 0.0 : report.worst_derivative > 0.0;
    }
    return report;
}

double comparison_quadratic(const std::array<double, 3>& x, const std::array<double, 3>& z,
                            const EllipticityPair& ell, int dim) {
    check_dim(dim, "comparison_quadratic");
    double q = 0.0;
    for (int k = 0; k + 1 < dim; ++k) q += (x[k] - z[k]) * (x[k] - z[k]);
    return q - dim * (ell.Lambda / ell.lambda) * x[dim - 1] * x[dim - 1];
}

double comparison_quadratic_extremal(const EllipticityPair& ell, int dim) {
    check_dim(dim, "comparison_quadratic_extremal");
    std::array<double, 3> d = {2.0, 2.0, 2.0};
    d[dim - 1] = -2.0 * dim * ell.Lambda / ell.lambda;
    return pucci_plus(SymMatrix::diag(std::span<const double>(d.data(), dim)), ell);
}

MaxPrincipleReport max_principle_check(const GridFunction& v, const MaxPrincipleSpec& spec,
                                       const std::vector<std::size_t>& omega_star,
                                       const EllipticityPair& ell, double tol) {
    const Grid& g = v.grid();
    const int dim = g.dim();
    if (!g.symmetric_in_xn() || g.shape() != DomainShape::Ball) {
        throw std::invalid_argument("max_principle_check: need a symmetric ball grid");
    }
    if (std::abs(g.extent() - 1.0) > 1e-12) {
        throw std::invalid_argument("max_principle_check: grid extent must be 1");
    }
    if (!(spec.c0 > 0.0 && spec.c1 > 0.0 && spec.c2 > 0.0 && spec.sigma > 0.0)) {
        throw std::invalid_argument("max_principle_check: constants must be positive");
    }
    if (!(spec.c1 < std::sqrt(ell.lambda / (9.0 * dim * ell.Lambda)))) {
        throw std::invalid_argument(
            "max_principle_check: c1 must stay below sqrt(lambda / (9 dim Lambda))");
    }
    if (!std::isfinite(tol) || tol < 0.0) {
        throw std::invalid_argument("max_principle_check: tol must be nonnegative");
    }
    if (!v.all_finite()) {
        throw std::invalid_argument("max_principle_check: field must be finite");
    }
    std::vector<char> contact(g.node_count(), 0);
    for (std::size_t idx : omega_star) {
        if (idx >= g.node_count() || g.role(idx) != NodeRole::Thin) {
            throw std::invalid_argument("max_principle_check: omega_star must list thin nodes");
        }
        contact[idx] = 1;
    }

    const GridFunction mv = discrete_extremal(v, ell, DirectionSet::for_dim(dim), ExtremalSign::Minus);

    MaxPrincipleReport report;
    report.certificate.barrier = "max_principle";
    auto push = [&](const char* name, double worst, const std::array<double, 3>& x) {
        CertificateCondition c{name, worst <= tol, worst, x};
        report.certificate.conditions.push_back(std::move(c));
    };

    const double neg_inf = -std::numeric_limits<double>::infinity();
    double worst1 = neg_inf, worst2 = neg_inf, worst3 = neg_inf, worst4 = neg_inf;
    std::array<double, 3> loc1{}, loc2{}, loc3{}, loc4{};
    auto bump = [](double deficit, const std::array<double, 3>& x, double& worst,
                   std::array<double, 3>& loc) {
        if (deficit > worst) {
            worst = deficit;
            loc = x;
        }
    };
    auto supersolution_nodes = [&](const std::vector<std::size_t>& nodes) {
        for (std::size_t node : nodes) {
            if (contact[node]) continue;
            bump(mv[node] - spec.sigma, g.point(node), worst1, loc1);
        }
    };
    supersolution_nodes(g.interior_nodes());
    supersolution_nodes(g.thin_nodes());
    for (std::size_t node : g.thin_nodes()) {
        if (contact[node]) bump(std::abs(v[node]), g.point(node), worst2, loc2);
    }
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto x = g.point(idx);
        if (x[dim - 1] >= spec.c1 * (1.0 - 1e-12)) bump(spec.c0 - v[idx], x, worst3, loc3);
        bump(-spec.sigma - v[idx], x, worst4, loc4);
    }
    push("interior_supersolution", worst1, loc1);
    push("vanishes_on_contact", worst2, loc2);
    push("bulk_positivity", worst3, loc3);
    push("global_lower_bound", worst4, loc4);
    report.hypotheses_ok = report.certificate.all_satisfied();

    double worst_neg = neg_inf, worst_growth = neg_inf;
    std::array<double, 3> loc_neg{}, loc_growth{};
    report.fitted_c2 = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto x = g.point(idx);
        if (norm_dim(x, dim) > 0.5 * (1.0 + 1e-12)) continue;
        bump(-v[idx], x, worst_neg, loc_neg);
        if (x[dim - 1] > 0.0) {
            const double ratio = v[idx] / x[dim - 1];
            report.fitted_c2 = std::min(report.fitted_c2, ratio);
            bump(spec.c2 - ratio, x, worst_growth, loc_growth);
        }
    }
    push("conclusion_nonnegative", worst_neg, loc_neg);
    push("conclusion_linear_growth", worst_growth, loc_growth);
    const std::size_t nc = report.certificate.conditions.size();
    report.conclusion_ok = report.certificate.conditions[nc - 2].satisfied &&
                           report.certificate.conditions[nc - 1].satisfied;
    return report;
}

void BarrierSpec::validate(const EllipticityPair& ell, int dim,
                           const ExponentPair* exponents) const {
    check_dim(dim, "BarrierSpec::validate");
    switch (kind) {
        case BarrierKind::Phi0:
            break;
        case BarrierKind::Series:
            check_weights(weights, tail_bound, "BarrierSpec::validate");
            break;
        case BarrierKind::SlitSubsol: {
            if (!(rho > 0.0 && rho < 1.0)) {
                throw std::invalid_argument("BarrierSpec::validate: rho must be in (0, 1)");
            }
            for (int k = dim - 1; k < 3; ++k) {
                if (ball.center[k] != 0.0) {
                    throw std::invalid_argument(
                        "BarrierSpec::validate: thin ball center must lie on the plane");
                }
            }
            if (!(ball.radius > 0.0) || norm_dim(ball.center, dim) + ball.radius >= 1.0) {
                throw std::invalid_argument(
                    "BarrierSpec::validate: thin ball must sit strictly inside the unit thin ball");
            }
            break;
        }
        case BarrierKind::Hopf:
            if (!(rho > 0.0) || !std::isfinite(hopf_n)) {
                throw std::invalid_argument(
                    "BarrierSpec::validate: hopf barrier needs positive rho and finite N");
            }
            break;
        case BarrierKind::ConeSub:
        case BarrierKind::ConeSuper: {
            check_tangential(e, dim, "BarrierSpec::validate");
            if (!(eta > 0.0) || !std::isfinite(eta)) {
                throw std::invalid_argument("BarrierSpec::validate: eta must be positive");
            }
            if (exponents == nullptr) {
                throw std::invalid_argument(
                    "BarrierSpec::validate: cone barriers need the critical exponents");
            }
            const double cap = std::min(exponents->beta1, 1.0 - exponents->beta2);
            if (!(gamma > 0.0 && gamma < cap)) {
                throw std::invalid_argument(
                    "BarrierSpec::validate: gamma must lie in (0, min(beta1, 1 - beta2))");
            }
            (void)ell;
            break;
        }
    }
}

} // namespace slitfb
