#include "slitfb/fb_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "slitfb/angular_ode.hpp"

namespace slitfb {

namespace {

double norm_dim(const std::array<double, 3>& x, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += x[k] * x[k];
    return std::sqrt(s);
}

bool is_thin_vector(const std::array<double, 3>& v, int dim) {
    for (int k = dim; k < 3; ++k) {
        if (v[k] != 0.0) return false;
    }
    return v[dim - 1] == 0.0;
}

/// Coprime thin-tangent lattice directions with components up to 3.
std::vector<std::array<int, 3>> tangent_directions(int dim) {
    std::vector<std::array<int, 3>> dirs;
    if (dim == 2) {
        dirs.push_back({1, 0, 0});
        dirs.push_back({-1, 0, 0});
        return dirs;
    }
    for (int p = -3; p <= 3; ++p) {
        for (int q = -3; q <= 3; ++q) {
            if (p == 0 && q == 0) continue;
            if (std::gcd(std::abs(p), std::abs(q)) != 1) continue;
            dirs.push_back({p, q, 0});
        }
    }
    return dirs;
}

/// Node indices on the thin plane {x_n = 0}, independent of role so the same
/// walk works on symmetric, half, and full grids.
std::vector<std::size_t> plane_nodes(const Grid& g) {
    std::vector<std::size_t> out;
    const int n = g.dim() - 1;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        if (g.coords(i)[n] == 0) out.push_back(i);
    }
    return out;
}

/// Least-squares slope of (log t, log y).
double loglog_slope(const std::vector<double>& t, const std::vector<double>& y, double* intercept) {
    const std::size_t n = t.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(t[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    if (intercept) *intercept = (sy - slope * sx) / static_cast<double>(n);
    return slope;
}

struct PlaneModel {
    double w0 = 0.0;
    std::array<double, 3> grad = {0.0, 0.0, 0.0};
    std::array<double, 3> x0 = {0.0, 0.0, 0.0};

    double eval(const std::array<double, 3>& x, int dim) const {
        double v = w0;
        for (int k = 0; k < dim - 1; ++k) v += grad[k] * (x[k] - x0[k]);
        return v;
    }
};

double deviation(const GridFunction& u, const ScalarField& phi, const PlaneModel& plane,
                 std::size_t idx) {
    const auto& g = u.grid();
    const auto x = g.point(idx);
    return u[idx] - phi(x) - plane.eval(x, g.dim());
}

/// Fits the tangential gradient over the immediate plane neighbors of the
/// center by least squares, with the constant pinned to the center value so
/// the deviation vanishes there exactly. Over B_h the least-squares solution
/// is the central difference per axis, the tightest two-sided window: on a
/// field that detaches like d^{3/2} any gradient estimate carries a spurious
/// slope of order sqrt(window), and that slope feeds straight into the
/// fitted growth exponent.
PlaneModel fit_plane(const GridFunction& u, const ScalarField& phi, std::size_t x0) {
    const auto& g = u.grid();
    const int dim = g.dim();
    PlaneModel plane;
    plane.x0 = g.point(x0);
    plane.w0 = u[x0] - phi(plane.x0);

    const auto c0 = g.coords(x0);
    double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
    const int reach = 1;
    auto visit = [&](const std::array<int, 3>& d) {
        std::array<int, 3> c = c0;
        for (int k = 0; k < dim - 1; ++k) c[k] += d[k];
        for (int k = 0; k < dim - 1; ++k) {
            if (std::abs(c[k]) > g.m()) return;
        }
        const std::size_t idx = g.index(c);
        const auto x = g.point(idx);
        const double w = u[idx] - phi(x) - plane.w0;
        const double dx = d[0] * g.h();
        const double dy = d[1] * g.h();
        a11 += dx * dx;
        a12 += dx * dy;
        a22 += dy * dy;
        b1 += dx * w;
        b2 += dy * w;
    };
    if (dim == 2) {
        for (int i = -reach; i <= reach; ++i) visit({i, 0, 0});
    } else {
        for (int i = -reach; i <= reach; ++i) {
            for (int j = -reach; j <= reach; ++j) {
                if (i * i + j * j <= reach * reach) visit({i, j, 0});
            }
        }
    }
    if (dim == 2) {
        plane.grad[0] = a11 > 0.0 ? b1 / a11 : 0.0;
    } else {
        const double det = a11 * a22 - a12 * a12;
        if (det > 1e-14 * std::max(1.0, a11 * a22)) {
            plane.grad[0] = (b1 * a22 - b2 * a12) / det;
            plane.grad[1] = (b2 * a11 - b1 * a12) / det;
        }
    }
    return plane;
}

/// Largest ball radius around x0 that stays inside the domain.
double max_ball_radius(const Grid& g, std::size_t x0) {
    const auto x = g.point(x0);
    if (g.shape() == DomainShape::Ball) return g.extent() - norm_dim(x, g.dim());
    double r = g.extent();
    for (int k = 0; k < g.dim() - 1; ++k) r = std::min(r, g.extent() - std::abs(x[k]));
    if (!g.half_in_xn()) {
        r = std::min(r, g.extent() - std::abs(x[g.dim() - 1]));
    } else {
        r = std::min(r, g.extent() - x[g.dim() - 1]);
    }
    return r;
}

/// Contact flags over the plane by field scale: a node is in contact when
/// |u - phi| stays within 1e-8 of the largest plane deviation.
std::vector<char> contact_flags(const GridFunction& u, const ScalarField& phi,
                                const std::vector<std::size_t>& plane) {
    const auto& g = u.grid();
    double scale = 0.0;
    std::vector<double> w(plane.size());
    for (std::size_t j = 0; j < plane.size(); ++j) {
        w[j] = u[plane[j]] - phi(g.point(plane[j]));
        scale = std::max(scale, std::abs(w[j]));
    }
    const double tol = 1e-8 * std::max(scale, 1e-300);
    std::vector<char> contact(plane.size());
    for (std::size_t j = 0; j < plane.size(); ++j) contact[j] = std::abs(w[j]) <= tol;
    return contact;
}

} // namespace

GrowthProfile growth_profile(const GridFunction& u, const ScalarField& phi, std::size_t x0,
                             double mu, std::vector<double> radii) {
    const auto& g = u.grid();
    const int dim = g.dim();
    if (x0 >= g.node_count()) throw std::invalid_argument("growth_profile: node out of range");
    if (g.coords(x0)[dim - 1] != 0) {
        throw std::invalid_argument("growth_profile: center must lie on the thin plane");
    }
    if (!(mu > 0.0) || !(mu < 2.0)) {
        throw std::invalid_argument("growth_profile: mu must lie in (0, 2)");
    }
    if (radii.empty()) throw std::invalid_argument("growth_profile: no radii");
    std::sort(radii.begin(), radii.end());
    const double fit = max_ball_radius(g, x0) * (1.0 + 1e-12) + 1e-15;
    if (radii.front() <= 0.0 || radii.back() > fit) {
        throw std::invalid_argument("growth_profile: radii must be positive and fit the domain");
    }

    GrowthProfile prof;
    prof.center_node = x0;
    prof.center = g.point(x0);
    prof.mu = mu;

    const PlaneModel plane = fit_plane(u, phi, x0);
    prof.center_value = plane.w0;
    prof.plane_gradient = plane.grad;
    const double scale = std::abs(plane.w0) + u.max_abs();
    if (std::abs(plane.w0) > 1e-6 * std::max(1.0, scale)) {
        throw std::invalid_argument("growth_profile: center does not touch the obstacle");
    }

    prof.radii = radii;
    prof.sup_values.assign(radii.size(), 0.0);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const auto x = g.point(i);
        double d2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double t = x[k] - prof.center[k];
            d2 += t * t;
        }
        const double d = std::sqrt(d2);
        const auto it = std::lower_bound(radii.begin(), radii.end(), d * (1.0 - 1e-12));
        if (it == radii.end()) continue;
        const std::size_t slot = static_cast<std::size_t>(it - radii.begin());
        prof.sup_values[slot] = std::max(prof.sup_values[slot], std::abs(deviation(u, phi, plane, i)));
    }
    for (std::size_t i = 1; i < prof.sup_values.size(); ++i) {
        prof.sup_values[i] = std::max(prof.sup_values[i], prof.sup_values[i - 1]);
    }

    const double r_max = radii.back();
    const double s_max = prof.sup_values.back();
    prof.theta.assign(radii.size(), 0.0);
    double suffix = 0.0;
    for (std::size_t i = radii.size(); i-- > 0;) {
        if (s_max > 0.0) {
            const double val = std::pow(radii[i] / r_max, -mu) * (prof.sup_values[i] / s_max);
            suffix = std::max(suffix, val);
        }
        prof.theta[i] = suffix;
    }
    return prof;
}

std::string Classification::kind_name() const {
    switch (kind) {
        case PointClass::Regular: return "regular";
        case PointClass::Degenerate: return "degenerate";
        default: return "inconclusive";
    }
}

BlowupReport blowup_sequence(const GrowthProfile& profile, const GridFunction& u,
                             const ScalarField& phi, double nu_threshold) {
    if (profile.radii.empty() || profile.radii.size() != profile.sup_values.size()) {
        throw std::invalid_argument("blowup_sequence: malformed profile");
    }
    const auto& g = u.grid();
    BlowupReport rep;
    rep.profile = profile;
    rep.classification.epsilon = 2.0 - profile.mu;
    rep.classification.nu_threshold = nu_threshold;

    const double r_max = profile.radii.back();
    const double s_max = profile.sup_values.back();
    const double r_min = profile.radii.front();

    // Selection schedule: rho_k = r_max / k down to the smallest tabulated
    // radius. The argmax choice makes the selection inequality hold with
    // factor one instead of one half.
    const int k_max = std::min(4096, static_cast<int>(std::floor(r_max / r_min * (1.0 + 1e-9))));
    for (int k = 1; k <= k_max; ++k) {
        const double rho = r_max / k;
        double best = -1.0;
        double best_r = 0.0;
        for (std::size_t i = 0; i < profile.radii.size(); ++i) {
            if (profile.radii[i] < rho * (1.0 - 1e-12) || s_max <= 0.0) continue;
            const double val = std::pow(profile.radii[i] / r_max, -profile.mu) *
                               (profile.sup_values[i] / s_max);
            if (val > best) {
                best = val;
                best_r = profile.radii[i];
            }
        }
        if (best < 0.0) continue;
        BlowupScale sc;
        sc.k = k;
        sc.r_k = best_r;
        sc.theta_k = best;
        sc.admitted = best >= nu_threshold;
        rep.scales.push_back(sc);
        rep.classification.modulus_samples.push_back(best);
    }
    for (const auto& sc : rep.scales) {
        if (!sc.admitted) continue;
        if (std::find(rep.selected_radii.begin(), rep.selected_radii.end(), sc.r_k) ==
            rep.selected_radii.end()) {
            rep.selected_radii.push_back(sc.r_k);
        }
    }
    std::sort(rep.selected_radii.begin(), rep.selected_radii.end());

    // Rescaled fields for lattice-compatible admitted radii.
    const PlaneModel plane{profile.center_value, profile.plane_gradient, profile.center};
    for (double r : rep.selected_radii) {
        const double cells = r / g.h();
        const long m = std::lround(cells);
        if (m < 2 || std::abs(cells - static_cast<double>(m)) > 1e-9 * std::max(1.0, cells)) continue;
        const double sup = profile.sup_values[static_cast<std::size_t>(
            std::lower_bound(profile.radii.begin(), profile.radii.end(), r * (1.0 - 1e-12)) -
            profile.radii.begin())];
        if (sup <= 0.0) continue;
        GridSpec spec;
        spec.dim = g.dim();
        spec.h = 1.0 / static_cast<double>(m);
        spec.extent = 1.0;
        spec.half_in_xn = g.half_in_xn();
        spec.symmetric_in_xn = g.symmetric_in_xn();
        spec.shape = DomainShape::Ball;
        auto unit = std::make_shared<Grid>(spec);
        GridFunction v(unit, 0.0);
        const auto c0 = g.coords(profile.center_node);
        bool ok = true;
        for (std::size_t i = 0; i < unit->node_count() && ok; ++i) {
            const auto p = unit->point(i);
            if (norm_dim(p, g.dim()) > 1.0 + 1e-12) continue;
            auto c = unit->coords(i);
            std::array<int, 3> src = c0;
            for (int k = 0; k < g.dim(); ++k) src[k] += c[k];
            for (int k = 0; k < g.dim(); ++k) {
                const int lo = (k == g.dim() - 1 && g.half_in_xn()) ? 0 : -g.m();
                if (src[k] < lo || src[k] > g.m()) ok = false;
            }
            if (!ok) break;
            v[i] = deviation(u, phi, plane, g.index(src)) / sup;
        }
        if (ok) rep.rescaled.push_back({r, std::move(v)});
    }

    // Log-log exponent over scales with positive sup.
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < profile.radii.size(); ++i) {
        if (profile.sup_values[i] > 0.0) {
            ts.push_back(profile.radii[i]);
            ys.push_back(profile.sup_values[i]);
        }
    }
    if (ts.size() >= 2) rep.fitted_exponent = loglog_slope(ts, ys, nullptr);

    const double eps = rep.classification.epsilon;
    if (ts.size() < 3) {
        rep.classification.kind = PointClass::Inconclusive;
        return rep;
    }
    bool all_steep = true;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const double slope = std::log(ys[i + 1] / ys[i]) / std::log(ts[i + 1] / ts[i]);
        all_steep = all_steep && slope >= 2.0 - eps - 1e-12;
    }
    const bool diverges = !profile.theta.empty() && profile.theta.front() >= nu_threshold;
    if (diverges && *rep.fitted_exponent <= 2.0 - eps - 0.05) {
        rep.classification.kind = PointClass::Regular;
    } else if (all_steep) {
        rep.classification.kind = PointClass::Degenerate;
    } else {
        rep.classification.kind = PointClass::Inconclusive;
    }
    return rep;
}

std::vector<double> dyadic_radii(const Grid& grid, std::size_t x0) {
    const double fit = max_ball_radius(grid, x0);
    std::vector<double> radii;
    double r = grid.extent();
    while (r > fit * (1.0 + 1e-12)) r /= 2.0;
    while (r >= 16.0 * grid.h() * (1.0 - 1e-12)) {
        radii.push_back(r);
        r /= 2.0;
    }
    std::sort(radii.begin(), radii.end());
    return radii;
}

Classification classify_point(const GridFunction& u, const ScalarField& phi, std::size_t x0,
                              double epsilon, double nu_threshold) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw std::invalid_argument("classify_point: epsilon must lie in (0, 1)");
    }
    const auto& g = u.grid();
    const auto plane = plane_nodes(g);
    const auto contact = contact_flags(u, phi, plane);
    const auto slot = std::find(plane.begin(), plane.end(), x0);
    if (slot == plane.end() || !contact[static_cast<std::size_t>(slot - plane.begin())]) {
        throw std::invalid_argument("classify_point: node is not on the contact set");
    }
    const auto radii = dyadic_radii(g, x0);
    if (radii.size() < 3) {
        Classification c;
        c.epsilon = epsilon;
        c.nu_threshold = nu_threshold;
        return c;
    }
    const auto prof = growth_profile(u, phi, x0, 2.0 - epsilon, radii);
    return blowup_sequence(prof, u, phi, nu_threshold).classification;
}

FreeBoundaryGraph extract_free_boundary(const SolveReport& report, const ScalarField& phi) {
    const auto& u = report.solution;
    const auto& g = u.grid();
    const int dim = g.dim();
    // Only thin-role nodes carry the complementarity condition; plane nodes
    // on the outer boundary are Dirichlet data and must not register as
    // detachment.
    const auto& plane = g.thin_nodes();
    if (plane.empty()) {
        throw std::invalid_argument("extract_free_boundary: grid has no thin nodes");
    }
    std::vector<char> contact(g.node_count(), 0);
    for (std::size_t i : report.contact_nodes) contact[i] = 1;
    std::size_t n_contact = 0;
    for (std::size_t i : plane) n_contact += contact[i];
    if (n_contact == 0 || n_contact == plane.size()) {
        throw std::invalid_argument("extract_free_boundary: contact set is empty or full");
    }

    auto thin_neighbor = [&](std::size_t idx, const std::array<int, 3>& d,
                             std::size_t* out) -> bool {
        auto c = g.coords(idx);
        for (int k = 0; k < dim - 1; ++k) {
            c[k] += d[k];
            if (std::abs(c[k]) > g.m()) return false;
        }
        const std::size_t nb = g.index(c);
        if (g.role(nb) != NodeRole::Thin) return false;
        *out = nb;
        return true;
    };

    FreeBoundaryGraph fb;
    for (std::size_t i : plane) {
        if (!contact[i]) continue;
        std::size_t nb = 0;
        bool fb_node = false;
        for (int k = 0; k < dim - 1; ++k) {
            for (int s = -1; s <= 1; s += 2) {
                std::array<int, 3> d = {0, 0, 0};
                d[k] = s;
                if (thin_neighbor(i, d, &nb) && !contact[nb]) fb_node = true;
            }
        }
        if (fb_node) {
            fb.nodes.push_back(i);
            fb.points.push_back(g.point(i));
        }
    }
    if (fb.nodes.empty()) {
        throw std::invalid_argument("extract_free_boundary: contact set has no plane rim");
    }

    // Detachment derivative along a unit thin direction: minimum over the
    // free boundary nodes of the forward difference at reach 2h, sampled at
    // the nearest plane node. Used for the report and for picking the sign
    // of e; a difference-quotient alone cannot rank oblique lattice steps
    // when the detachment is superlinear, so the direction itself comes from
    // the free boundary geometry below.
    auto w_at = [&](std::size_t idx) { return u[idx] - phi(g.point(idx)); };
    auto score_along = [&](const std::array<double, 3>& dir) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i : fb.nodes) {
            auto c = g.coords(i);
            bool ok = true;
            for (int k = 0; k < dim - 1; ++k) {
                c[k] += static_cast<int>(std::lround(2.0 * dir[k]));
                if (std::abs(c[k]) > g.m()) ok = false;
            }
            if (!ok) continue;
            worst = std::min(worst, (w_at(g.index(c)) - w_at(i)) / (2.0 * g.h()));
        }
        return worst;
    };

    std::array<double, 3> e = {1.0, 0.0, 0.0};
    if (dim == 3 && fb.nodes.size() >= 2) {
        // Principal axis of the free boundary cloud; e is its in-plane
        // normal. Exact for lattice half-spaces of any rational slope.
        double cx = 0.0, cy = 0.0;
        for (const auto& p : fb.points) {
            cx += p[0];
            cy += p[1];
        }
        cx /= static_cast<double>(fb.points.size());
        cy /= static_cast<double>(fb.points.size());
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (const auto& p : fb.points) {
            sxx += (p[0] - cx) * (p[0] - cx);
            sxy += (p[0] - cx) * (p[1] - cy);
            syy += (p[1] - cy) * (p[1] - cy);
        }
        const double gap = std::hypot(sxx - syy, 2.0 * sxy);
        if (gap > 1e-12 * (sxx + syy)) {
            const double ang = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
            e = {-std::sin(ang), std::cos(ang), 0.0};
        } else {
            // Isotropic cloud: fall back to ranking lattice directions by
            // the detachment score.
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& d : tangent_directions(dim)) {
                const double len = std::sqrt(static_cast<double>(d[0] * d[0] + d[1] * d[1]));
                const std::array<double, 3> cand = {d[0] / len, d[1] / len, 0.0};
                const double s = score_along(cand);
                if (std::isfinite(s) && s > best) {
                    best = s;
                    e = cand;
                }
            }
        }
    }
    const double plus = score_along(e);
    const std::array<double, 3> neg = {-e[0], -e[1], 0.0};
    const double minus = score_along(neg);
    if (std::isfinite(minus) && (!std::isfinite(plus) || minus > plus)) {
        e = neg;
        fb.direction_score = minus;
    } else {
        fb.direction_score = plus;
    }
    fb.e = e;

    // Graph fit over the coordinate orthogonal to e: pairs closer than half
    // a cell in the orthogonal coordinate must agree in the e coordinate up
    // to the residual; farther pairs bound the Lipschitz constant after the
    // one-cell allowance.
    std::vector<double> svals(fb.nodes.size()), tvals(fb.nodes.size());
    for (std::size_t j = 0; j < fb.nodes.size(); ++j) {
        const auto& p = fb.points[j];
        svals[j] = p[0] * e[0] + p[1] * e[1];
        tvals[j] = dim == 3 ? -p[0] * e[1] + p[1] * e[0] : 0.0;
    }
    for (std::size_t a = 0; a < fb.nodes.size(); ++a) {
        for (std::size_t b = a + 1; b < fb.nodes.size(); ++b) {
            const double dt = std::abs(tvals[a] - tvals[b]);
            const double ds = std::abs(svals[a] - svals[b]);
            if (dt <= 0.5 * g.h()) {
                fb.residual = std::max(fb.residual, 0.5 * ds);
            } else {
                const double slack = ds - 2.0 * g.h();
                if (slack > 0.0) fb.lipschitz = std::max(fb.lipschitz, slack / dt);
            }
        }
    }
    return fb;
}

MonotonicityReport directional_monotonicity(const GridFunction& u, const std::array<double, 3>& e,
                                            double lipschitz, const std::vector<std::size_t>& region,
                                            const std::vector<std::size_t>* slit) {
    const auto& g = u.grid();
    const int dim = g.dim();
    if (std::abs(norm_dim(e, dim) - 1.0) > 1e-9 || !is_thin_vector(e, dim)) {
        throw std::invalid_argument("directional_monotonicity: e must be a unit thin vector");
    }
    if (lipschitz < 0.0) throw std::invalid_argument("directional_monotonicity: negative Lipschitz bound");
    const double cos_min = lipschitz / std::sqrt(1.0 + lipschitz * lipschitz);

    std::vector<char> in_slit(g.node_count(), 0);
    if (slit) {
        for (std::size_t i : *slit) in_slit[i] = 1;
    }

    std::vector<std::array<int, 3>> cone;
    for (const auto& d : tangent_directions(dim)) {
        const double len = std::sqrt(static_cast<double>(d[0] * d[0] + d[1] * d[1]));
        const double dot = (d[0] * e[0] + d[1] * e[1]) / len;
        if (dot >= cos_min - 1e-12) cone.push_back(d);
    }
    if (cone.empty()) throw std::invalid_argument("directional_monotonicity: empty direction cone");

    MonotonicityReport rep;
    rep.min_difference = std::numeric_limits<double>::infinity();
    rep.directions_checked = static_cast<int>(cone.size());
    for (const auto& d : cone) {
        const double len = g.h() * std::sqrt(static_cast<double>(d[0] * d[0] + d[1] * d[1]));
        for (std::size_t i : region) {
            const auto c = g.coords(i);
            std::array<int, 3> cf = c, cb = c;
            for (int k = 0; k < dim - 1; ++k) {
                cf[k] += d[k];
                cb[k] -= d[k];
            }
            auto fits = [&](const std::array<int, 3>& cc) {
                for (int k = 0; k < dim - 1; ++k) {
                    if (std::abs(cc[k]) > g.m()) return false;
                }
                return true;
            };
            std::size_t fi = 0, bi = 0;
            bool has_f = fits(cf);
            if (has_f) {
                fi = g.index(cf);
                has_f = !in_slit[fi];
            }
            bool has_b = fits(cb);
            if (has_b) {
                bi = g.index(cb);
                has_b = !in_slit[bi];
            }
            double diff;
            if (has_f && has_b) {
                diff = (u[fi] - u[bi]) / (2.0 * len);
            } else if (has_f) {
                diff = (u[fi] - u[i]) / len;
            } else if (has_b) {
                diff = (u[i] - u[bi]) / len;
            } else {
                continue;
            }
            if (diff < rep.min_difference) {
                rep.min_difference = diff;
                rep.argmin_node = i;
                rep.argmin_direction = d;
            }
        }
    }
    if (!std::isfinite(rep.min_difference)) {
        throw std::invalid_argument("directional_monotonicity: no admissible stencil in the region");
    }
    return rep;
}

NondegeneracyFit nondegeneracy_fit(const GridFunction& u, const ScalarField& phi, std::size_t x0,
                                   const std::array<double, 3>& e, const std::vector<double>& ts,
                                   const EllipticityPair& ell, double beta_tol) {
    const auto& g = u.grid();
    const int dim = g.dim();
    if (std::abs(norm_dim(e, dim) - 1.0) > 1e-9 || !is_thin_vector(e, dim)) {
        throw std::invalid_argument("nondegeneracy_fit: e must be a unit thin vector");
    }
    const auto origin = g.point(x0);
    NondegeneracyFit fit;
    const double beta2 = find_beta(ell, ExtremalSign::Minus, beta_tol);
    fit.eps0 = 0.5 * (1.0 - beta2);

    std::vector<double> tt, ww;
    for (double t : ts) {
        if (!(t > 0.0)) continue;
        std::array<int, 3> c = {0, 0, 0};
        bool ok = true;
        for (int k = 0; k < dim; ++k) {
            c[k] = static_cast<int>(std::lround((origin[k] + t * e[k]) / g.h()));
            const int lo = (k == dim - 1 && g.half_in_xn()) ? 0 : -g.m();
            if (c[k] < lo || c[k] > g.m()) ok = false;
        }
        if (!ok) continue;
        const std::size_t idx = g.index(c);
        const double w = u[idx] - phi(g.point(idx));
        if (w > 0.0) {
            tt.push_back(t);
            ww.push_back(w);
        }
    }
    fit.samples = static_cast<int>(tt.size());
    if (fit.samples < 3) return fit;
    double intercept = 0.0;
    fit.exponent = loglog_slope(tt, ww, &intercept);
    fit.constant = std::exp(intercept);
    fit.valid = true;
    fit.passes = fit.exponent <= 2.0 - fit.eps0;
    return fit;
}

void ConeSpec::validate(int dim) const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("ConeSpec: dim must be 2 or 3");
    for (int k = dim - 1; k < 3; ++k) {
        if (apex[k] != 0.0) throw std::invalid_argument("ConeSpec: apex must lie on the thin plane");
    }
    if (std::abs(norm_dim(e, dim) - 1.0) > 1e-9 || !is_thin_vector(e, dim)) {
        throw std::invalid_argument("ConeSpec: e must be a unit thin vector");
    }
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw std::invalid_argument("ConeSpec: epsilon must lie in (0, 1)");
    }
    if (generators.empty()) throw std::invalid_argument("ConeSpec: no generators");
    for (const auto& gv : generators) {
        const double n = norm_dim(gv, dim);
        if (!(n > 0.0) || !is_thin_vector(gv, dim)) {
            throw std::invalid_argument("ConeSpec: generators must be nonzero thin vectors");
        }
        double dot = 0.0;
        for (int k = 0; k < dim - 1; ++k) dot += gv[k] * e[k];
        if (dot / n > -epsilon + 1e-12) {
            throw std::invalid_argument("ConeSpec: generator escapes the inclusion cone");
        }
    }
}

bool ConeSpec::contains_direction(const std::array<double, 3>& v, int dim) const {
    const double n = norm_dim(v, dim);
    if (!(n > 0.0) || !is_thin_vector(v, dim)) return false;
    if (dim == 2) {
        for (const auto& gv : generators) {
            if (gv[0] * v[0] > 0.0) return true;
        }
        return false;
    }
    // Angular interval test in the thin plane: v must lie between a pair of
    // generators spanning at most a flat angle (counterclockwise from the
    // first to the second, so both orders are tried).
    const double two_pi = 2.0 * std::numbers::pi;
    const double av = std::atan2(v[1], v[0]);
    for (const auto& gi : generators) {
        for (const auto& gj : generators) {
            const double ai = std::atan2(gi[1], gi[0]);
            const double aj = std::atan2(gj[1], gj[0]);
            double span = aj - ai;
            double off = av - ai;
            span -= two_pi * std::floor(span / two_pi);
            off -= two_pi * std::floor(off / two_pi);
            if (span <= std::numbers::pi + 1e-12 && off <= span + 1e-9) return true;
        }
    }
    return false;
}

bool ConeSpec::contains_point(const std::array<double, 3>& x, int dim) const {
    std::array<double, 3> v = {0.0, 0.0, 0.0};
    double n = 0.0;
    for (int k = 0; k < dim - 1; ++k) {
        v[k] = x[k] - apex[k];
        n += v[k] * v[k];
    }
    if (std::abs(x[dim - 1] - apex[dim - 1]) > 1e-12) return false;
    if (n == 0.0) return true;
    return contains_direction(v, dim);
}

HarnackReport harnack_ratio(const GridFunction& u1, const GridFunction& u2,
                            const std::array<double, 3>& theta1, const std::array<double, 3>& theta2,
                            const ConeSpec& cone, double solve_tol,
                            std::optional<double> region_radius) {
    const auto& g = u1.grid();
    const int dim = g.dim();
    if (&u2.grid() != &g &&
        (u2.grid().node_count() != g.node_count() || u2.grid().dim() != g.dim() ||
         u2.grid().h() != g.h())) {
        throw std::invalid_argument("harnack_ratio: fields live on different grids");
    }
    cone.validate(dim);
    if (!(solve_tol > 0.0)) throw std::invalid_argument("harnack_ratio: solver tol must be positive");

    const std::array<const GridFunction*, 2> us = {&u1, &u2};
    const std::array<const std::array<double, 3>*, 2> thetas = {&theta1, &theta2};
    std::array<std::array<int, 3>, 2> steps{};
    for (int i = 0; i < 2; ++i) {
        const auto& th = *thetas[i];
        if (std::abs(norm_dim(th, dim) - 1.0) > 1e-9 || !is_thin_vector(th, dim)) {
            throw std::invalid_argument("harnack_ratio: theta must be a unit thin vector");
        }
        std::array<double, 3> neg = {-th[0], -th[1], -th[2]};
        if (!cone.contains_direction(neg, dim)) {
            throw std::invalid_argument("harnack_ratio: -theta must lie in the slit cone");
        }
        // Shortest coprime lattice vector parallel to theta, so monotonicity
        // is checkable along exact node steps.
        bool found = false;
        double best_len = std::numeric_limits<double>::infinity();
        for (int p = -12; p <= 12; ++p) {
            for (int q = -12; q <= 12; ++q) {
                if (p == 0 && q == 0) continue;
                if (dim == 2 && q != 0) continue;
                if (std::gcd(std::abs(p), std::abs(q)) != 1) continue;
                const double len = std::sqrt(static_cast<double>(p * p + q * q));
                const double cross = p * th[1] - q * th[0];
                const double along = p * th[0] + q * th[1];
                if (std::abs(cross) <= 1e-9 * len && along > 0.0 && len < best_len) {
                    steps[i] = {p, q, 0};
                    best_len = len;
                    found = true;
                }
            }
        }
        if (!found) throw std::invalid_argument("harnack_ratio: theta is not lattice aligned");
    }

    // Normalization sups over the ball of radius epsilon/2 about the apex.
    HarnackReport rep;
    rep.epsilon = cone.epsilon;
    rep.epsilon_within_hypothesis = cone.epsilon < 0.125;
    rep.region_radius = region_radius.value_or(cone.epsilon / 4.0);
    rep.floor = 10.0 * solve_tol;

    std::array<double, 2> sup = {0.0, 0.0};
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto x = g.point(idx);
        double d2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double t = x[k] - cone.apex[k];
            d2 += t * t;
        }
        if (d2 > cone.epsilon * cone.epsilon / 4.0 * (1.0 + 1e-12)) continue;
        sup[0] = std::max(sup[0], (*us[0])[idx]);
        sup[1] = std::max(sup[1], (*us[1])[idx]);
    }
    if (!(sup[0] > 0.0) || !(sup[1] > 0.0)) {
        throw std::invalid_argument("harnack_ratio: a field vanishes on the normalization ball");
    }
    rep.sup_b1 = sup[0];
    rep.sup_b2 = sup[1];

    auto describe = [&](std::size_t idx) {
        const auto x = g.point(idx);
        std::ostringstream os;
        os << "(" << x[0] << ", " << x[1];
        if (dim == 3) os << ", " << x[2];
        os << ")";
        return os.str();
    };

    // Nodewise preconditions on the normalized fields.
    for (int i = 0; i < 2; ++i) {
        const double s = sup[i];
        for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
            const double v = (*us[i])[idx] / s;
            if (v < -rep.floor) {
                throw std::invalid_argument("harnack_ratio: field " + std::to_string(i + 1) +
                                            " negative at node " + describe(idx));
            }
            if (cone.contains_point(g.point(idx), dim) && std::abs(v) > rep.floor) {
                throw std::invalid_argument("harnack_ratio: field " + std::to_string(i + 1) +
                                            " fails to vanish on the slit at node " + describe(idx));
            }
        }
        for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
            auto c = g.coords(idx);
            for (int k = 0; k < dim - 1; ++k) c[k] += steps[i][k];
            bool fits = true;
            for (int k = 0; k < dim - 1; ++k) fits = fits && std::abs(c[k]) <= g.m();
            if (!fits) continue;
            const std::size_t nb = g.index(c);
            if ((*us[i])[nb] / s < (*us[i])[idx] / s - rep.floor) {
                throw std::invalid_argument("harnack_ratio: field " + std::to_string(i + 1) +
                                            " not monotone along theta at node " + describe(idx));
            }
        }
    }

    rep.sup_ratio = -std::numeric_limits<double>::infinity();
    rep.inf_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto x = g.point(idx);
        double d2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double t = x[k] - cone.apex[k];
            d2 += t * t;
        }
        if (d2 > rep.region_radius * rep.region_radius * (1.0 + 1e-12)) continue;
        const double a = (*us[0])[idx] / sup[0];
        const double b = (*us[1])[idx] / sup[1];
        if (b < rep.floor) continue;
        const double r = a / b;
        rep.sup_ratio = std::max(rep.sup_ratio, r);
        rep.inf_ratio = std::min(rep.inf_ratio, r);
        ++rep.node_count;
    }
    if (rep.node_count == 0) {
        throw std::runtime_error("harnack_ratio: no region node clears the floor");
    }
    rep.implied_constant = std::max(rep.sup_ratio, rep.inf_ratio > 0.0 ? 1.0 / rep.inf_ratio
                                                                       : std::numeric_limits<double>::infinity());
    return rep;
}

std::string BlowupReport::to_json() const {
    nlohmann::json j;
    j["center"] = profile.center;
    j["mu"] = profile.mu;
    j["radii"] = profile.radii;
    j["sup_values"] = profile.sup_values;
    j["theta"] = profile.theta;
    j["plane_gradient"] = profile.plane_gradient;
    j["center_value"] = profile.center_value;
    nlohmann::json sc = nlohmann::json::array();
    for (const auto& s : scales) {
        sc.push_back({{"k", s.k}, {"r_k", s.r_k}, {"theta_k", s.theta_k}, {"admitted", s.admitted}});
    }
    j["scales"] = sc;
    j["selected_radii"] = selected_radii;
    j["rescaled_count"] = rescaled.size();
    if (fitted_exponent) {
        j["fitted_exponent"] = *fitted_exponent;
    } else {
        j["fitted_exponent"] = nullptr;
    }
    j["classification"] = {{"kind", classification.kind_name()},
                           {"epsilon", classification.epsilon},
                           {"nu_threshold", classification.nu_threshold},
                           {"modulus_samples", classification.modulus_samples}};
    return j.dump(2);
}

std::string FreeBoundaryGraph::to_json() const {
    nlohmann::json j;
    j["e"] = e;
    j["lipschitz"] = lipschitz;
    j["residual"] = residual;
    j["direction_score"] = direction_score;
    j["node_count"] = nodes.size();
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) pts.push_back(p);
    j["points"] = pts;
    return j.dump(2);
}

std::string HarnackReport::to_json() const {
    nlohmann::json j;
    j["sup_ratio"] = sup_ratio;
    j["inf_ratio"] = inf_ratio;
    j["implied_constant"] = implied_constant;
    j["floor"] = floor;
    j["epsilon"] = epsilon;
    j["epsilon_within_hypothesis"] = epsilon_within_hypothesis;
    j["region_radius"] = region_radius;
    j["node_count"] = node_count;
    j["normalization_sups"] = {sup_b1, sup_b2};
    return j.dump(2);
}

} // namespace slitfb
