#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include <json.hpp>

#include "slitfb/angular_ode.hpp"
#include "slitfb/fb_analysis.hpp"
#include "slitfb/signorini.hpp"

using namespace slitfb;

namespace {

std::shared_ptr<const Grid> make_grid(GridSpec spec) {
    return std::make_shared<const Grid>(spec);
}

ScalarField zero_field() {
    return [](std::array<double, 3>) { return 0.0; };
}

/// Even harmonic with a slit along {x <= 0, y = 0}, detaching like r^{3/2}.
double explicit_slit_solution(std::array<double, 3> x) {
    const double r = std::hypot(x[0], x[1]);
    const double th = std::atan2(std::abs(x[1]), x[0]);
    return std::pow(r, 1.5) * std::cos(1.5 * th);
}

GridFunction sampled(std::shared_ptr<const Grid> g, const ScalarField& f) {
    return GridFunction::sample(std::move(g), f);
}

} // namespace

TEST_CASE("growth table of a radial power matches the closed form") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, [](std::array<double, 3> x) {
        return std::pow(std::hypot(x[0], x[1]), 1.5);
    });
    const std::size_t origin = g->index({0, 0, 0});
    GrowthProfile prof = growth_profile(u, zero_field(), origin, 1.9, {0.25, 0.5, 1.0});

    // The even field has an exactly vanishing central difference and value.
    CHECK(prof.center_value == 0.0);
    CHECK(prof.plane_gradient[0] == 0.0);
    CHECK(prof.plane_gradient[1] == 0.0);
    CHECK(prof.mu == 1.9);

    // sup over B_r is r^{3/2} at lattice-exact radii, and theta is the
    // normalized suffix maximum of (r / r_max)^{-mu} sup(r) / sup(r_max).
    REQUIRE(prof.radii.size() == 3);
    CHECK(prof.sup_values[0] == doctest::Approx(std::pow(0.25, 1.5)).epsilon(1e-14));
    CHECK(prof.sup_values[1] == doctest::Approx(std::pow(0.5, 1.5)).epsilon(1e-14));
    CHECK(prof.sup_values[2] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(prof.theta[0] == doctest::Approx(std::pow(0.25, -0.4)).epsilon(1e-13));
    CHECK(prof.theta[1] == doctest::Approx(std::pow(0.5, -0.4)).epsilon(1e-13));
    CHECK(prof.theta[2] == doctest::Approx(1.0).epsilon(1e-14));

    for (std::size_t i = 1; i < prof.radii.size(); ++i) {
        CHECK(prof.sup_values[i] >= prof.sup_values[i - 1]);
        CHECK(prof.theta[i] <= prof.theta[i - 1]);
    }
}

TEST_CASE("growth table normalization is invariant under rescaling the field") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, explicit_slit_solution);
    GridFunction u7(g);
    for (std::size_t n = 0; n < g->node_count(); ++n) u7[n] = 7.0 * u[n];
    const std::size_t origin = g->index({0, 0, 0});

    GrowthProfile a = growth_profile(u, zero_field(), origin, 1.9, {0.25, 0.5, 1.0});
    GrowthProfile b = growth_profile(u7, zero_field(), origin, 1.9, {0.25, 0.5, 1.0});
    for (std::size_t i = 0; i < a.theta.size(); ++i) {
        CHECK(b.theta[i] == doctest::Approx(a.theta[i]).epsilon(1e-13));
        CHECK(b.sup_values[i] == doctest::Approx(7.0 * a.sup_values[i]).epsilon(1e-13));
    }
}

TEST_CASE("quadratic and vanishing deviations give flat theta tables") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    const std::size_t origin = g->index({0, 0, 0});

    // |x|^2 grows faster than r^{mu}, so the suffix maximum is pinned at the
    // outermost radius and the whole table is 1.
    GridFunction q = sampled(g, [](std::array<double, 3> x) {
        return x[0] * x[0] + x[1] * x[1];
    });
    GrowthProfile qp = growth_profile(q, zero_field(), origin, 1.9, {0.25, 0.5, 1.0});
    for (double t : qp.theta) CHECK(t == doctest::Approx(1.0).epsilon(1e-14));

    // A field equal to its obstacle has no deviation at all.
    GridFunction z(g, 0.0);
    GrowthProfile zp = growth_profile(z, zero_field(), origin, 1.9, {0.25, 0.5, 1.0});
    for (double s : zp.sup_values) CHECK(s == 0.0);
    for (double t : zp.theta) CHECK(t == 0.0);
}

TEST_CASE("growth profile rejects bad centers, exponents, and radii") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, explicit_slit_solution);
    const std::size_t origin = g->index({0, 0, 0});

    // Off-plane center.
    const std::size_t interior = g->index({0, 0, 4});
    REQUIRE(g->role(interior) == NodeRole::Interior);
    CHECK_THROWS_WITH(growth_profile(u, zero_field(), interior, 1.9, {0.5}),
                      "growth_profile: center must lie on the thin plane");

    // Detached center: the field clears the obstacle there.
    GridFunction lifted(g, 1.0);
    CHECK_THROWS_WITH(growth_profile(lifted, zero_field(), origin, 1.9, {0.5}),
                      "growth_profile: center does not touch the obstacle");

    // Exponent outside (0, 2), empty and oversized radii, bad node id.
    CHECK_THROWS_WITH(growth_profile(u, zero_field(), origin, 0.0, {0.5}),
                      "growth_profile: mu must lie in (0, 2)");
    CHECK_THROWS_WITH(growth_profile(u, zero_field(), origin, 2.0, {0.5}),
                      "growth_profile: mu must lie in (0, 2)");
    CHECK_THROWS_WITH(growth_profile(u, zero_field(), origin, 1.9, {}),
                      "growth_profile: no radii");
    CHECK_THROWS_WITH(growth_profile(u, zero_field(), origin, 1.9, {1.5}),
                      "growth_profile: radii must be positive and fit the domain");
    CHECK_THROWS_WITH(growth_profile(u, zero_field(), g->node_count(), 1.9, {0.5}),
                      "growth_profile: node out of range");
}

TEST_CASE("blowup selection picks maximizers that meet the selection identity") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 64, .extent = 2.0, .symmetric_in_xn = true,
                        .shape = DomainShape::Ball});
    GridFunction u = sampled(g, explicit_slit_solution);
    const std::size_t origin = g->index({0, 0, 0});
    GrowthProfile prof = growth_profile(u, zero_field(), origin, 1.9, dyadic_radii(*g, origin));
    BlowupReport rpt = blowup_sequence(prof, u, zero_field(), 1.8);

    const double r_max = prof.radii.back();
    const double s_max = prof.sup_values.back();
    REQUIRE(!rpt.scales.empty());
    for (const BlowupScale& sc : rpt.scales) {
        // r_k maximizes the normalized quotient over radii at least rho_k, so
        // its value equals theta(rho_k), the selection inequality with factor
        // one.
        const auto it = std::find(prof.radii.begin(), prof.radii.end(), sc.r_k);
        REQUIRE(it != prof.radii.end());
        const std::size_t i = static_cast<std::size_t>(it - prof.radii.begin());
        const double val = std::pow(sc.r_k / r_max, -prof.mu) * (prof.sup_values[i] / s_max);
        CHECK(val == doctest::Approx(sc.theta_k).epsilon(1e-12));
        CHECK(val >= 0.5 * sc.theta_k);
        CHECK(sc.admitted == (sc.theta_k >= 1.8));
    }
}

TEST_CASE("sampled slit field classifies regular at fine resolution") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 64, .extent = 2.0, .symmetric_in_xn = true,
                        .shape = DomainShape::Ball});
    GridFunction u = sampled(g, explicit_slit_solution);
    const std::size_t origin = g->index({0, 0, 0});

    auto radii = dyadic_radii(*g, origin);
    REQUIRE(radii.size() == 4);
    CHECK(radii.front() == doctest::Approx(0.25));
    CHECK(radii.back() == doctest::Approx(2.0));

    GrowthProfile prof = growth_profile(u, zero_field(), origin, 1.9, radii);
    // The tangential central difference of r^{3/2} cos(3 theta / 2) at the
    // origin is (h^{3/2} - 0) / (2h) = sqrt(h) / 2.
    CHECK(prof.plane_gradient[0] == doctest::Approx(0.0625).epsilon(1e-13));
    CHECK(prof.plane_gradient[1] == 0.0);
    CHECK(prof.sup_values[0] == doctest::Approx(0.1136249891).epsilon(1e-8));
    CHECK(prof.sup_values[3] == doctest::Approx(2.763889028).epsilon(1e-8));
    CHECK(prof.theta[0] == doctest::Approx(2.137096968).epsilon(1e-8));
    CHECK(prof.theta[2] == doctest::Approx(1.30634026).epsilon(1e-8));

    BlowupReport rpt = blowup_sequence(prof, u, zero_field(), 1.8);
    REQUIRE(rpt.fitted_exponent.has_value());
    CHECK(*rpt.fitted_exponent == doctest::Approx(1.5343834786).epsilon(1e-8));
    CHECK(rpt.classification.kind == PointClass::Regular);
    CHECK(rpt.classification.kind_name() == "regular");

    // Only the innermost radius diverges past the threshold; its rescaled
    // field lives on a unit ball grid with unit sup.
    REQUIRE(rpt.selected_radii.size() == 1);
    CHECK(rpt.selected_radii[0] == doctest::Approx(0.25));
    REQUIRE(rpt.rescaled.size() == 1);
    CHECK(rpt.rescaled[0].radius == doctest::Approx(0.25));
    CHECK(rpt.rescaled[0].field.grid().h() == doctest::Approx(0.0625));
    double mx = 0.0;
    for (std::size_t n = 0; n < rpt.rescaled[0].field.grid().node_count(); ++n) {
        mx = std::max(mx, std::abs(rpt.rescaled[0].field[n]));
    }
    CHECK(mx == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(classify_point(u, zero_field(), origin, 0.1, 1.8).kind == PointClass::Regular);

    // A strict threshold refuses the verdict instead of flipping it.
    Classification strict = classify_point(u, zero_field(), origin, 0.1, 10.0);
    CHECK(strict.kind == PointClass::Inconclusive);
}

TEST_CASE("classification is invariant under scaling and thin reflections") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 64, .extent = 2.0, .symmetric_in_xn = true,
                        .shape = DomainShape::Ball});
    const std::size_t origin = g->index({0, 0, 0});

    GridFunction u = sampled(g, explicit_slit_solution);
    GridFunction u7(g);
    for (std::size_t n = 0; n < g->node_count(); ++n) u7[n] = 7.0 * u[n];
    GridFunction mirrored = sampled(g, [](std::array<double, 3> x) {
        return explicit_slit_solution({-x[0], x[1], 0.0});
    });

    CHECK(classify_point(u, zero_field(), origin, 0.1, 1.8).kind == PointClass::Regular);
    CHECK(classify_point(u7, zero_field(), origin, 0.1, 1.8).kind == PointClass::Regular);
    CHECK(classify_point(mirrored, zero_field(), origin, 0.1, 1.8).kind == PointClass::Regular);
}

TEST_CASE("half-space detachment data classifies regular") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 64, .extent = 2.0, .symmetric_in_xn = true,
                        .shape = DomainShape::Ball});
    GridFunction u = sampled(g, [](std::array<double, 3> x) {
        return x[0] > 0.0 ? std::pow(x[0], 1.5) : 0.0;
    });
    const std::size_t origin = g->index({0, 0, 0});
    GrowthProfile prof = growth_profile(u, zero_field(), origin, 1.9, dyadic_radii(*g, origin));
    CHECK(prof.plane_gradient[0] == doctest::Approx(0.0625).epsilon(1e-13));
    CHECK(prof.theta.front() == doctest::Approx(2.103170).epsilon(1e-5));

    BlowupReport rpt = blowup_sequence(prof, u, zero_field(), 1.8);
    REQUIRE(rpt.fitted_exponent.has_value());
    CHECK(*rpt.fitted_exponent == doctest::Approx(1.5422702959).epsilon(1e-8));
    CHECK(rpt.classification.kind == PointClass::Regular);
}

TEST_CASE("quadratic detachment classifies degenerate with an empty selection") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, [](std::array<double, 3> x) {
        return x[0] * x[0] + x[1] * x[1];
    });
    const std::size_t origin = g->index({0, 0, 0});
    GrowthProfile prof = growth_profile(u, zero_field(), origin, 1.9, {0.25, 0.5, 1.0});
    BlowupReport rpt = blowup_sequence(prof, u, zero_field(), 10.0);

    REQUIRE(rpt.fitted_exponent.has_value());
    CHECK(*rpt.fitted_exponent == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(rpt.classification.kind == PointClass::Degenerate);
    CHECK(rpt.selected_radii.empty());
    CHECK(rpt.rescaled.empty());
}

TEST_CASE("interior contact nodes never classify regular") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, [](std::array<double, 3> x) {
        return x[0] > 0.5 ? std::pow(x[0] - 0.5, 1.5) : 0.0;
    });
    const std::size_t origin = g->index({0, 0, 0});

    // The origin sits deep inside the contact set; its growth table is zero.
    Classification cls = classify_point(u, zero_field(), origin, 0.1, 1.8);
    CHECK(cls.kind == PointClass::Inconclusive);
    GrowthProfile prof = growth_profile(u, zero_field(), origin, 1.9, {0.25, 0.5});
    CHECK(prof.sup_values[0] == 0.0);
    CHECK(prof.sup_values[1] == 0.0);
    CHECK(prof.theta[0] == 0.0);
}

TEST_CASE("classify rejects detached nodes and bad dead bands") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, explicit_slit_solution);
    const std::size_t detached = g->index({8, 0, 0});
    REQUIRE(u[detached] > 1e-3);
    CHECK_THROWS_WITH(classify_point(u, zero_field(), detached, 0.1, 1.8),
                      "classify_point: node is not on the contact set");
    const std::size_t origin = g->index({0, 0, 0});
    CHECK_THROWS_WITH(classify_point(u, zero_field(), origin, 0.0, 1.8),
                      "classify_point: epsilon must lie in (0, 1)");
    CHECK_THROWS_WITH(classify_point(u, zero_field(), origin, 1.0, 1.8),
                      "classify_point: epsilon must lie in (0, 1)");
}

TEST_CASE("dyadic radii run from the extent down to sixteen cells") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 64, .extent = 2.0, .symmetric_in_xn = true,
                        .shape = DomainShape::Ball});
    auto radii = dyadic_radii(*g, g->index({0, 0, 0}));
    REQUIRE(radii.size() == 4);
    CHECK(radii[0] == doctest::Approx(0.25));
    CHECK(radii[1] == doctest::Approx(0.5));
    CHECK(radii[2] == doctest::Approx(1.0));
    CHECK(radii[3] == doctest::Approx(2.0));

    // An off-center node only keeps radii whose ball stays inside.
    auto off = dyadic_radii(*g, g->index({64, 0, 0}));
    REQUIRE(!off.empty());
    CHECK(off.back() <= 1.0 + 1e-12);
}

TEST_CASE("free boundary direction recovery on half-space data") {
    auto g = make_grid({.dim = 3, .h = 1.0 / 8, .extent = 1.0, .symmetric_in_xn = true});
    struct Case {
        double ex, ey;
        double max_angle_deg;
    };
    for (const Case& c : {Case{1, 0, 1e-9}, Case{1, 1, 1e-9}, Case{2, 1, 0.1}}) {
        const double nn = std::hypot(c.ex, c.ey);
        auto sfun = [&](std::array<double, 3> x) { return (x[0] * c.ex + x[1] * c.ey) / nn; };
        SolveReport rep{GridFunction(g), 0, {}, {}, false};
        rep.solution = sampled(g, [&](std::array<double, 3> x) {
            const double s = sfun(x);
            return s > 0 ? std::pow(s, 1.5) : 0.0;
        });
        for (std::size_t n : g->thin_nodes()) {
            if (sfun(g->point(n)) <= 1e-12) rep.contact_nodes.push_back(n);
        }
        FreeBoundaryGraph fb = extract_free_boundary(rep, zero_field());

        const double dot = (fb.e[0] * c.ex + fb.e[1] * c.ey) / nn;
        // The sign must point toward detachment, not just align with the line.
        CHECK(dot > 0.0);
        const double ang = std::acos(std::min(1.0, dot)) * 180.0 / std::numbers::pi;
        CHECK(ang <= c.max_angle_deg);
        CHECK(fb.e[2] == 0.0);
        CHECK(fb.lipschitz <= 1e-12);
        CHECK(fb.residual <= 1e-12);
        CHECK(fb.direction_score > 0.1);
        CHECK(fb.nodes.size() == fb.points.size());
    }
}

TEST_CASE("free boundary direction is equivariant under swapping thin axes") {
    auto g = make_grid({.dim = 3, .h = 1.0 / 8, .extent = 1.0, .symmetric_in_xn = true});
    auto build = [&](bool swapped) {
        SolveReport rep{GridFunction(g), 0, {}, {}, false};
        rep.solution = sampled(g, [&](std::array<double, 3> x) {
            const double s = swapped ? x[1] : x[0];
            return s > 0 ? std::pow(s, 1.5) : 0.0;
        });
        for (std::size_t n : g->thin_nodes()) {
            const auto x = g->point(n);
            if ((swapped ? x[1] : x[0]) <= 1e-12) rep.contact_nodes.push_back(n);
        }
        return extract_free_boundary(rep, zero_field());
    };
    FreeBoundaryGraph a = build(false);
    FreeBoundaryGraph b = build(true);
    CHECK(a.e[0] == doctest::Approx(b.e[1]).epsilon(1e-12));
    CHECK(a.e[1] == doctest::Approx(b.e[0]).epsilon(1e-12));
    CHECK(a.nodes.size() == b.nodes.size());
    CHECK(a.direction_score == doctest::Approx(b.direction_score).epsilon(1e-12));
}

TEST_CASE("free boundary extraction rejects empty, full, and plane-free inputs") {
    auto g = make_grid({.dim = 2, .h = 0.25, .extent = 1.0, .symmetric_in_xn = true});
    SolveReport rep{GridFunction(g), 0, {}, {}, false};
    CHECK_THROWS_WITH(extract_free_boundary(rep, zero_field()),
                      "extract_free_boundary: contact set is empty or full");
    for (std::size_t n : g->thin_nodes()) rep.contact_nodes.push_back(n);
    CHECK_THROWS_WITH(extract_free_boundary(rep, zero_field()),
                      "extract_free_boundary: contact set is empty or full");

    auto box = make_grid({.dim = 2, .h = 0.25, .extent = 1.0});
    SolveReport plain{GridFunction(box), 0, {}, {}, false};
    plain.contact_nodes.push_back(0);
    CHECK_THROWS_WITH(extract_free_boundary(plain, zero_field()),
                      "extract_free_boundary: grid has no thin nodes");
}

TEST_CASE("directional monotonicity separates monotone fields from bumps") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    std::vector<std::size_t> region;
    for (std::size_t n = 0; n < g->node_count(); ++n) region.push_back(n);

    // Half-space detachment grows along +x; the minimum difference is zero on
    // the contact half.
    GridFunction u = sampled(g, [](std::array<double, 3> x) {
        return x[0] > 0.0 ? std::pow(x[0], 1.5) : 0.0;
    });
    MonotonicityReport up = directional_monotonicity(u, {1.0, 0.0, 0.0}, 0.5, region);
    CHECK(up.min_difference == 0.0);
    CHECK(up.directions_checked >= 1);

    // A radial bump decays somewhere along every direction.
    GridFunction bump = sampled(g, [](std::array<double, 3> x) {
        return std::exp(-4.0 * (x[0] * x[0] + x[1] * x[1]));
    });
    MonotonicityReport down = directional_monotonicity(bump, {1.0, 0.0, 0.0}, 0.5, region);
    CHECK(down.min_difference < -1e-3);
    CHECK(down.argmin_direction[0] != 0);
}

TEST_CASE("monotonicity near the slit uses one-sided differences") {
    // The explicit slit solution is nondecreasing along +x, but a centered
    // difference across the slit would see the kink; supplying the slit makes
    // the check pass cleanly on the sampled field.
    auto g = make_grid({.dim = 2, .h = 1.0 / 32, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, explicit_slit_solution);
    std::vector<std::size_t> region;
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        const auto x = g->point(n);
        if (std::hypot(x[0], x[1]) <= 0.5) region.push_back(n);
    }
    std::vector<std::size_t> slit;
    for (std::size_t n : g->thin_nodes()) {
        if (g->point(n)[0] <= 1e-12) slit.push_back(n);
    }
    MonotonicityReport rep = directional_monotonicity(u, {1.0, 0.0, 0.0}, 0.5, region, &slit);
    CHECK(rep.min_difference >= -1e-12);
}

TEST_CASE("monotonicity rejects bad directions and empty cones") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u(g, 0.0);
    std::vector<std::size_t> region{g->index({0, 0, 0})};
    CHECK_THROWS_WITH(directional_monotonicity(u, {0.5, 0.0, 0.0}, 0.5, region),
                      "directional_monotonicity: e must be a unit thin vector");
    CHECK_THROWS_WITH(directional_monotonicity(u, {1.0, 0.0, 0.0}, -1.0, region),
                      "directional_monotonicity: negative Lipschitz bound");

    // In 3D a direction can sit so far from every lattice ray that the cone
    // threshold l / sqrt(1 + l^2) admits nothing.
    auto g3 = make_grid({.dim = 3, .h = 0.25, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u3(g3, 0.0);
    std::vector<std::size_t> region3{g3->index({0, 0, 0})};
    CHECK_THROWS_WITH(directional_monotonicity(u3, {0.6, 0.8, 0.0}, 10.0, region3),
                      "directional_monotonicity: empty direction cone");
}

TEST_CASE("nondegeneracy fit separates detachment laws at the pass bound") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 32, .extent = 1.0, .symmetric_in_xn = true});
    const std::size_t origin = g->index({0, 0, 0});
    const EllipticityPair ell(1.0, 1.0);
    std::vector<double> ts;
    for (int k = 2; k <= 12; ++k) ts.push_back(k / 32.0);

    // The explicit field detaches exactly like t^{3/2} along the positive
    // axis; with lambda = Lambda the bound 2 - eps0 is 1.75.
    GridFunction u = sampled(g, explicit_slit_solution);
    NondegeneracyFit fit = nondegeneracy_fit(u, zero_field(), origin, {1.0, 0.0, 0.0}, ts, ell);
    CHECK(fit.valid);
    CHECK(fit.samples == static_cast<int>(ts.size()));
    CHECK(fit.constant == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.exponent == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(fit.eps0 == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(fit.passes);

    // Quadratic detachment sits above the bound and fails.
    GridFunction q = sampled(g, [](std::array<double, 3> x) {
        return x[0] > 0.0 ? x[0] * x[0] : 0.0;
    });
    NondegeneracyFit qfit = nondegeneracy_fit(q, zero_field(), origin, {1.0, 0.0, 0.0}, ts, ell);
    CHECK(qfit.valid);
    CHECK(qfit.exponent == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(!qfit.passes);

    // Fewer than three positive samples is no fit at all.
    NondegeneracyFit thin = nondegeneracy_fit(u, zero_field(), origin, {1.0, 0.0, 0.0},
                                              {2.0 / 32.0, 3.0 / 32.0}, ell);
    CHECK(!thin.valid);
    CHECK_THROWS_WITH(nondegeneracy_fit(u, zero_field(), origin, {0.0, 0.0, 1.0}, ts, ell),
                      "nondegeneracy_fit: e must be a unit thin vector");
}

TEST_CASE("cone spec membership and validation") {
    ConeSpec cone;
    cone.apex = {0.0, 0.0, 0.0};
    cone.e = {1.0, 0.0, 0.0};
    cone.epsilon = 0.1;
    cone.generators = {{-1.0, 0.0, 0.0}, {-1.0, 1.0, 0.0}};
    cone.validate(3);

    CHECK(cone.contains_direction({-1.0, 0.5, 0.0}, 3));
    CHECK(cone.contains_direction({-2.0, 0.0, 0.0}, 3));
    CHECK(!cone.contains_direction({1.0, 0.0, 0.0}, 3));
    CHECK(!cone.contains_direction({0.0, 1.0, 0.0}, 3));
    CHECK(cone.contains_point({-0.5, 0.25, 0.0}, 3));
    CHECK(!cone.contains_point({0.5, 0.0, 0.0}, 3));

    ConeSpec bad = cone;
    bad.e = {0.5, 0.0, 0.0};
    CHECK_THROWS_WITH(bad.validate(3), "ConeSpec: e must be a unit thin vector");
    bad = cone;
    bad.epsilon = 0.0;
    CHECK_THROWS_WITH(bad.validate(3), "ConeSpec: epsilon must lie in (0, 1)");
    bad = cone;
    bad.generators.push_back({1.0, 0.0, 0.0});
    CHECK_THROWS_WITH(bad.validate(3), "ConeSpec: generator escapes the inclusion cone");
    bad = cone;
    bad.generators.clear();
    CHECK_THROWS_WITH(bad.validate(3), "ConeSpec: no generators");
    bad = cone;
    bad.apex = {0.0, 0.0, 0.5};
    CHECK_THROWS_WITH(bad.validate(3), "ConeSpec: apex must lie on the thin plane");
}

TEST_CASE("harnack ratio of a field against itself is one") {
    const EllipticityPair ell(1.0, 1.5);
    auto g = make_grid({.dim = 2, .h = 1.0 / 32, .extent = 1.0, .half_in_xn = true});
    auto ray_dist = [](std::array<double, 3> x) {
        return x[0] >= 0.0 ? std::hypot(x[0], x[1]) : std::abs(x[1]);
    };
    SolveOptions opts;
    opts.tol = 1e-10;
    FarFieldCap cap{[&](std::array<double, 3> x) { return ray_dist(x); }, nullptr};
    ExtensionResult r = extension_solve([&](std::array<double, 3> x) { return ray_dist(x); },
                                        ell, ExtremalSign::Minus, g, cap, opts);

    ConeSpec cone;
    cone.e = {1.0, 0.0, 0.0};
    cone.epsilon = 0.2;
    cone.generators = {{-1.0, 0.0, 0.0}};

    HarnackReport hr = harnack_ratio(r.field, r.field, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, cone,
                                     opts.tol);
    CHECK(hr.sup_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hr.inf_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hr.implied_constant == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hr.node_count > 0);
    CHECK(hr.epsilon == doctest::Approx(0.2));
    CHECK(!hr.epsilon_within_hypothesis);
    CHECK(hr.region_radius == doctest::Approx(0.05));
    CHECK(hr.floor == doctest::Approx(1e-9));
}

TEST_CASE("harnack ratio compares distinct slit solutions and ignores scale") {
    const EllipticityPair ell(1.0, 1.5);
    const double beta2 = find_beta(ell, ExtremalSign::Minus);
    SlitSolution w2({{1.0, 0.0, 0.0}, ExtremalSign::Minus, beta2}, ell, 2);
    auto ray_dist = [](std::array<double, 3> x) {
        return x[0] >= 0.0 ? std::hypot(x[0], x[1]) : std::abs(x[1]);
    };

    auto g = make_grid({.dim = 2, .h = 1.0 / 32, .extent = 1.0, .half_in_xn = true});
    SolveOptions opts;
    opts.tol = 1e-10;
    FarFieldCap cap1{[&](std::array<double, 3> x) { return ray_dist(x); }, nullptr};
    FarFieldCap cap2{[&](std::array<double, 3> x) { return w2(x); }, nullptr};
    ExtensionResult r1 = extension_solve([&](std::array<double, 3> x) { return ray_dist(x); },
                                         ell, ExtremalSign::Minus, g, cap1, opts);
    ExtensionResult r2 = extension_solve([&](std::array<double, 3> x) { return w2(x); }, ell,
                                         ExtremalSign::Minus, g, cap2, opts);

    ConeSpec cone;
    cone.e = {1.0, 0.0, 0.0};
    cone.epsilon = 0.2;
    cone.generators = {{-1.0, 0.0, 0.0}};

    HarnackReport hr = harnack_ratio(r1.field, r2.field, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, cone,
                                     opts.tol);
    CHECK(hr.sup_ratio == doctest::Approx(1.583334).epsilon(1e-4));
    CHECK(hr.inf_ratio == doctest::Approx(0.393958).epsilon(1e-4));
    CHECK(hr.implied_constant == doctest::Approx(2.538342).epsilon(1e-4));
    CHECK(hr.node_count == 4);
    CHECK(hr.inf_ratio > 0.0);
    CHECK(std::isfinite(hr.sup_ratio));
    CHECK(hr.implied_constant ==
          doctest::Approx(std::max(hr.sup_ratio, 1.0 / hr.inf_ratio)).epsilon(1e-12));

    // Rescaling either input leaves every reported ratio unchanged.
    GridFunction scaled(g);
    for (std::size_t n = 0; n < g->node_count(); ++n) scaled[n] = 7.0 * r2.field[n];
    HarnackReport hr7 = harnack_ratio(r1.field, scaled, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, cone,
                                      opts.tol);
    CHECK(hr7.sup_ratio == doctest::Approx(hr.sup_ratio).epsilon(1e-12));
    CHECK(hr7.inf_ratio == doctest::Approx(hr.inf_ratio).epsilon(1e-12));
}

TEST_CASE("harnack ratio rejects fields that break its hypotheses") {
    const EllipticityPair ell(1.0, 1.5);
    auto g = make_grid({.dim = 2, .h = 1.0 / 32, .extent = 1.0, .half_in_xn = true});
    auto ray_dist = [](std::array<double, 3> x) {
        return x[0] >= 0.0 ? std::hypot(x[0], x[1]) : std::abs(x[1]);
    };
    SolveOptions opts;
    opts.tol = 1e-10;
    FarFieldCap cap{[&](std::array<double, 3> x) { return ray_dist(x); }, nullptr};
    ExtensionResult r = extension_solve([&](std::array<double, 3> x) { return ray_dist(x); },
                                        ell, ExtremalSign::Minus, g, cap, opts);

    ConeSpec cone;
    cone.e = {1.0, 0.0, 0.0};
    cone.epsilon = 0.2;
    cone.generators = {{-1.0, 0.0, 0.0}};
    const std::array<double, 3> ex{1.0, 0.0, 0.0};

    // A negative node.
    GridFunction neg = r.field;
    neg[g->index({8, 0, 4})] = -1.0;
    CHECK_THROWS_WITH_AS(harnack_ratio(neg, r.field, ex, ex, cone, opts.tol),
                         doctest::Contains("negative at node"), std::invalid_argument);

    // A field that fails to vanish on the slit.
    GridFunction lifted = r.field;
    lifted[g->index({-8, 0, 0})] = 0.5;
    CHECK_THROWS_WITH_AS(harnack_ratio(lifted, r.field, ex, ex, cone, opts.tol),
                         doctest::Contains("fails to vanish on the slit"), std::invalid_argument);

    // A monotonicity violation along the declared direction.
    GridFunction dent = r.field;
    const std::size_t peak = g->index({8, 0, 8});
    dent[peak] = r.field[peak] + 1.0;
    CHECK_THROWS_WITH_AS(harnack_ratio(r.field, dent, ex, ex, cone, opts.tol),
                         doctest::Contains("not monotone along theta"), std::invalid_argument);

    // Directions must be lattice aligned and point out of the cone.
    CHECK_THROWS_WITH_AS(harnack_ratio(r.field, r.field, {-1.0, 0.0, 0.0}, ex, cone, opts.tol),
                         doctest::Contains("-theta must lie in the slit cone"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(harnack_ratio(r.field, r.field, {0.6, 0.0, 0.8}, ex, cone, opts.tol),
                         doctest::Contains("theta must be a unit thin vector"),
                         std::invalid_argument);
}

TEST_CASE("analysis reports serialize to the documented JSON shapes") {
    auto g = make_grid({.dim = 2, .h = 1.0 / 16, .extent = 1.0, .symmetric_in_xn = true});
    GridFunction u = sampled(g, explicit_slit_solution);
    const std::size_t origin = g->index({0, 0, 0});
    GrowthProfile prof = growth_profile(u, zero_field(), origin, 1.9, {0.25, 0.5, 1.0});
    BlowupReport rpt = blowup_sequence(prof, u, zero_field(), 1.8);

    const nlohmann::json jb = nlohmann::json::parse(rpt.to_json());
    CHECK(jb.contains("profile"));
    CHECK(jb["profile"].contains("radii"));
    CHECK(jb["profile"].contains("theta"));
    CHECK(jb.contains("scales"));
    CHECK(jb.contains("fitted_exponent"));
    CHECK(jb.contains("classification"));
    CHECK(jb["classification"].contains("kind"));
    CHECK(jb["classification"].contains("nu_threshold"));

    SolveReport rep{u, 0, {}, {}, false};
    for (std::size_t n : g->thin_nodes()) {
        if (g->point(n)[0] <= 1e-12) rep.contact_nodes.push_back(n);
    }
    FreeBoundaryGraph fb = extract_free_boundary(rep, zero_field());
    const nlohmann::json jf = nlohmann::json::parse(fb.to_json());
    CHECK(jf.contains("e"));
    CHECK(jf.contains("nodes"));
    CHECK(jf.contains("lipschitz"));
    CHECK(jf.contains("residual"));
    CHECK(jf.contains("direction_score"));
}
