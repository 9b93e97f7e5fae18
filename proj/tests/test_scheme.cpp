#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "slitfb/discrete_operator.hpp"
#include "slitfb/grid.hpp"
#include "slitfb/rng.hpp"
#include "slitfb/stencil.hpp"

using namespace slitfb;

namespace {

std::shared_ptr<const Grid> make_grid(GridSpec spec) {
    return std::make_shared<const Grid>(spec);
}

SymMatrix random_sym2(const CounterRng& rng, std::uint64_t& ctr) {
    SymMatrix h(2);
    h.at(0, 0) = rng.uniform(ctr++, -2.0, 2.0);
    h.at(0, 1) = rng.uniform(ctr++, -2.0, 2.0);
    h.at(1, 1) = rng.uniform(ctr++, -2.0, 2.0);
    return h;
}

GridFunction sample_quadratic(std::shared_ptr<const Grid> g, const SymMatrix& h) {
    return GridFunction::sample(std::move(g), [&](std::array<double, 3> x) {
        double s = 0.0;
        for (int i = 0; i < h.dim(); ++i) {
            for (int j = 0; j < h.dim(); ++j) s += x[i] * h.at(i, j) * x[j];
        }
        return 0.5 * s;
    });
}

// Exact frame-family value on a Hessian: what the scheme must reproduce on
// sampled quadratics, where second differences are exact.
double frame_extremal(const SymMatrix& h, const DirectionSet& dirs, const EllipticityPair& ell,
                      ExtremalSign sign) {
    const bool plus = sign == ExtremalSign::Plus;
    double best = plus ? -1e300 : 1e300;
    for (const Frame& f : dirs.frames()) {
        double v = 0.0;
        for (int i = 0; i < dirs.dim(); ++i) {
            double q = 0.0;
            const auto& p = f.dirs[i].offset;
            for (int a = 0; a < dirs.dim(); ++a) {
                for (int b = 0; b < dirs.dim(); ++b) q += p[a] * h.at(a, b) * p[b];
            }
            q /= f.dirs[i].len2;
            if (plus) {
                v += (q > 0.0 ? ell.Lambda : ell.lambda) * q;
            } else {
                v += (q > 0.0 ? ell.lambda : ell.Lambda) * q;
            }
        }
        best = plus ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

// Worst angular distance from any direction in the plane to the nearest
// frame axis, in radians.
double max_misalignment(const DirectionSet& dirs) {
    std::vector<double> angles;
    for (const Frame& f : dirs.frames()) {
        const auto& p = f.dirs[0].offset;
        double a = std::atan2(static_cast<double>(p[1]), static_cast<double>(p[0]));
        a = std::fmod(a + 2.0 * M_PI, M_PI / 2.0);
        angles.push_back(a);
    }
    std::sort(angles.begin(), angles.end());
    double gap = angles.front() + M_PI / 2.0 - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
    return 0.5 * gap;
}

} // namespace

TEST_CASE("grid validation and node roles") {
    CHECK_THROWS_AS(Grid({.dim = 2, .h = 0.3, .extent = 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Grid({.dim = 4, .h = 0.25, .extent = 1.0}), std::invalid_argument);

    Grid g({.dim = 2, .h = 0.25, .extent = 1.0, .symmetric_in_xn = true});
    CHECK(g.m() == 4);
    CHECK(g.node_count() == 9 * 5);
    CHECK(g.thin_nodes().size() == 7); // y = 0, |x| < 1
    for (std::size_t t : g.thin_nodes()) {
        CHECK(g.point(t)[1] == 0.0);
        CHECK(g.role(t) == NodeRole::Thin);
    }
    CHECK(g.interior_nodes().size() == 7 * 3);

    // Plain half grid: the x_n = 0 row is Dirichlet, not thin.
    Grid ext({.dim = 2, .h = 0.25, .extent = 1.0, .half_in_xn = true});
    CHECK(ext.thin_nodes().empty());

    // Ball domain: lattice nodes at or outside radius carry data.
    Grid ball({.dim = 2, .h = 0.25, .extent = 1.0, .shape = DomainShape::Ball});
    for (std::size_t b : ball.boundary_nodes()) {
        const auto x = ball.point(b);
        CHECK(std::hypot(x[0], x[1]) >= 1.0 - 1e-12);
    }
    for (std::size_t i : ball.interior_nodes()) {
        const auto x = ball.point(i);
        CHECK(std::hypot(x[0], x[1]) < 1.0);
    }
}

TEST_CASE("grid reflection lookup") {
    auto g = make_grid({.dim = 2, .h = 0.25, .extent = 1.0, .symmetric_in_xn = true});
    const std::size_t thin = g->index({1, 0, 0});
    // One step below the thin plane reflects to one step above.
    CHECK(g->offset_index(g->coords(thin), {0, -1, 0}) == g->index({1, 1, 0}));
    CHECK(g->offset_index(g->coords(thin), {2, -3, 0}) == g->index({3, 3, 0}));
    // Leaving the lattice tangentially has no reflection.
    CHECK(g->offset_index(g->coords(thin), {5, 0, 0}) == Grid::npos);
}

TEST_CASE("second_difference is exact on quadratics") {
    CounterRng rng{31};
    std::uint64_t ctr = 0;
    auto g = make_grid({.dim = 2, .h = 0.125, .extent = 1.0});
    for (int trial = 0; trial < 40; ++trial) {
        SymMatrix h = random_sym2(rng, ctr);
        GridFunction f = sample_quadratic(g, h);
        const std::size_t node = g->index({static_cast<int>(rng.bits(ctr++) % 5) - 2,
                                           static_cast<int>(rng.bits(ctr++) % 5) - 2, 0});
        for (const auto& dir : {LatticeDirection(1, 0), LatticeDirection(0, 1),
                                LatticeDirection(1, 1), LatticeDirection(3, 1),
                                LatticeDirection(1, -2)}) {
            double q = 0.0;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) q += dir.offset[a] * h.at(a, b) * dir.offset[b];
            }
            q /= dir.len2;
            CHECK(second_difference(f, node, dir) == doctest::Approx(q).epsilon(1e-11));
        }
        // Longer arms change nothing on a quadratic.
        CHECK(second_difference(f, node, LatticeDirection(1, 0), 2) ==
              doctest::Approx(second_difference(f, node, LatticeDirection(1, 0), 1)).epsilon(1e-11));
    }
    CHECK_THROWS_AS(second_difference(sample_quadratic(g, SymMatrix::identity(2)),
                                      g->index({7, 0, 0}), LatticeDirection(3, 1)),
                    std::invalid_argument);
}

TEST_CASE("axis frames with lambda = Lambda recover the 5-point Laplacian") {
    auto g = make_grid({.dim = 2, .h = 0.125, .extent = 1.0});
    CounterRng rng{7};
    GridFunction f = GridFunction::sample(g, [&](std::array<double, 3> x) {
        return std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]) + 0.3 * x[0] * x[1];
    });
    EllipticityPair ell(1.0, 1.0);
    GridFunction lap = discrete_extremal(f, ell, DirectionSet::make_2d(1), ExtremalSign::Plus);
    const double h2 = g->h() * g->h();
    int checked = 0;
    for (std::size_t node : g->interior_nodes()) {
        const auto c = g->coords(node);
        const double manual =
            (f[g->index({c[0] + 1, c[1], 0})] + f[g->index({c[0] - 1, c[1], 0})] +
             f[g->index({c[0], c[1] + 1, 0})] + f[g->index({c[0], c[1] - 1, 0})] -
             4.0 * f[node]) /
            h2;
        CHECK(lap[node] == doctest::Approx(manual).epsilon(1e-12));
        ++checked;
        (void)rng;
    }
    CHECK(checked > 0);
}

TEST_CASE("discrete extremal on quadratics matches the frame family exactly "
          "and the exact operator within the angular resolution") {
    CounterRng rng{412};
    std::uint64_t ctr = 0;
    auto g = make_grid({.dim = 2, .h = 0.125, .extent = 1.0});
    DirectionSet dirs = DirectionSet::make_2d(8);
    EllipticityPair ell(1.0, 2.5);
    const double delta = max_misalignment(dirs);
    const std::size_t center = g->index({0, 0, 0});
    for (int trial = 0; trial < 60; ++trial) {
        SymMatrix h = random_sym2(rng, ctr);
        GridFunction f = sample_quadratic(g, h);
        for (ExtremalSign sign : {ExtremalSign::Plus, ExtremalSign::Minus}) {
            GridFunction d = discrete_extremal(f, ell, dirs, sign);
            const double expected = frame_extremal(h, dirs, ell, sign);
            CHECK(d[center] == doctest::Approx(expected).epsilon(1e-10));

            const auto e = eig_sym(h);
            const double bound =
                (ell.Lambda - ell.lambda) * (e[1] - e[0]) * std::pow(std::sin(delta), 2) + 1e-10;
            const double exact = sign == ExtremalSign::Plus ? pucci_plus(h, ell)
                                                            : pucci_minus(h, ell);
            if (sign == ExtremalSign::Plus) {
                CHECK(d[center] <= exact + 1e-10);
                CHECK(d[center] >= exact - bound);
            } else {
                CHECK(d[center] >= exact - 1e-10);
                CHECK(d[center] <= exact + bound);
            }
        }
    }
}

TEST_CASE("frame-angle error on quadratics does not depend on h") {
    SymMatrix h(2);
    h.at(0, 0) = 1.3;
    h.at(0, 1) = -0.7;
    h.at(1, 1) = -0.4;
    EllipticityPair ell(1.0, 3.0);
    DirectionSet dirs = DirectionSet::make_2d(8);
    double coarse = 0.0, fine = 0.0;
    {
        auto g = make_grid({.dim = 2, .h = 0.25, .extent = 1.0});
        coarse = discrete_extremal(sample_quadratic(g, h), ell, dirs,
                                   ExtremalSign::Plus)[g->index({0, 0, 0})];
    }
    {
        auto g = make_grid({.dim = 2, .h = 0.0625, .extent = 1.0});
        fine = discrete_extremal(sample_quadratic(g, h), ell, dirs,
                                 ExtremalSign::Plus)[g->index({0, 0, 0})];
    }
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-11));
}

TEST_CASE("monotonicity: raising a neighbor never lowers the operator") {
    CounterRng rng{900};
    std::uint64_t ctr = 0;
    auto g = make_grid({.dim = 2, .h = 0.125, .extent = 1.0});
    DirectionSet dirs = DirectionSet::make_2d(8);
    EllipticityPair ell(0.5, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        GridFunction f = GridFunction::sample(g, [&](std::array<double, 3>) {
            return rng.uniform(ctr++, -1.0, 1.0);
        });
        const auto& interior = g->interior_nodes();
        const std::size_t node = interior[rng.bits(ctr++) % interior.size()];
        // Bump one node other than the center.
        std::size_t other = node;
        while (other == node) other = rng.bits(ctr++) % g->node_count();
        const double bump = rng.uniform(ctr++, 0.0, 0.5);
        for (ExtremalSign sign : {ExtremalSign::Plus, ExtremalSign::Minus}) {
            OperatorSpec spec{ell, sign, std::nullopt};
            DiscreteOperator op(g, dirs, spec);
            const double before = op.value(f.values(), node);
            GridFunction fb = f;
            fb[other] += bump;
            CHECK(op.value(fb.values(), node) >= before - 1e-12);
        }
    }
}

TEST_CASE("even data on a symmetric grid reproduces the full-grid operator") {
    auto full = make_grid({.dim = 2, .h = 0.125, .extent = 1.0});
    auto half = make_grid({.dim = 2, .h = 0.125, .extent = 1.0, .symmetric_in_xn = true});
    auto even_fn = [](std::array<double, 3> x) {
        return std::cos(2.0 * x[0]) * (x[1] * x[1] + 0.3 * std::pow(x[1], 4)) + 0.2 * x[0];
    };
    GridFunction ffull = GridFunction::sample(full, even_fn);
    GridFunction fhalf = GridFunction::sample(half, even_fn);
    EllipticityPair ell(1.0, 2.0);
    DirectionSet dirs = DirectionSet::make_2d(8);
    GridFunction dfull = discrete_extremal(ffull, ell, dirs, ExtremalSign::Minus);
    GridFunction dhalf = discrete_extremal(fhalf, ell, dirs, ExtremalSign::Minus);
    for (std::size_t node : half->interior_nodes()) {
        const auto c = half->coords(node);
        CHECK(dhalf[node] == doctest::Approx(dfull[full->index(c)]).epsilon(1e-13));
    }
    for (std::size_t node : half->thin_nodes()) {
        const auto c = half->coords(node);
        if (full->role(full->index(c)) == NodeRole::Interior) {
            CHECK(dhalf[node] == doctest::Approx(dfull[full->index(c)]).epsilon(1e-13));
        }
    }
}

TEST_CASE("frames that leave the lattice fall back near the boundary") {
    auto g = make_grid({.dim = 2, .h = 0.25, .extent = 1.0});
    CounterRng rng{55};
    std::uint64_t ctr = 0;
    GridFunction f = GridFunction::sample(g, [&](std::array<double, 3>) {
        return rng.uniform(ctr++, -1.0, 1.0);
    });
    EllipticityPair ell(1.0, 2.0);
    const std::size_t corner = g->index({3, 3, 0});
    // Only the axis and the (1,1) frames fit there; compute their maximum by hand.
    double expect = -1e300;
    const Frame axis = DirectionSet::make_2d(1).frames()[0];
    Frame diag;
    diag.dim = 2;
    diag.dirs[0] = LatticeDirection(1, 1);
    diag.dirs[1] = LatticeDirection(-1, 1);
    for (const Frame& fr : {axis, diag}) {
        double v = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double d2 = second_difference(f, corner, fr.dirs[i]);
            v += (d2 > 0.0 ? ell.Lambda : ell.lambda) * d2;
        }
        expect = std::max(expect, v);
    }
    GridFunction d = discrete_extremal(f, ell, DirectionSet::make_2d(8), ExtremalSign::Plus);
    CHECK(d[corner] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("direction set structure") {
    CHECK_THROWS_AS(DirectionSet::make_2d(5), std::invalid_argument);
    DirectionSet d8 = DirectionSet::make_2d(8);
    CHECK(d8.frames().size() == 8);
    CHECK(d8.max_reach() == 3);
    DirectionSet d3 = DirectionSet::make_3d();
    CHECK(d3.frames().size() == 4);
    CHECK(d3.max_reach() == 1);
    for (const Frame& f : d3.frames()) {
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
                long dot = 0;
                for (int k = 0; k < 3; ++k) {
                    dot += static_cast<long>(f.dirs[i].offset[k]) * f.dirs[j].offset[k];
                }
                CHECK(dot == 0);
            }
        }
    }
}

TEST_CASE("compiled Bellman members: frame-diagonal members are exact, "
          "family stays inside the discrete extremal envelope") {
    auto g = make_grid({.dim = 2, .h = 0.125, .extent = 1.0});
    EllipticityPair ell(1.0, 2.0);
    DirectionSet dirs = DirectionSet::make_2d(8);

    const double d1[] = {1.0, 2.0};
    SymMatrix a = SymMatrix::diag(d1);
    BellmanFamily single(ell, {a});
    CounterRng rng{123};
    std::uint64_t ctr = 0;
    SymMatrix h = random_sym2(rng, ctr);
    GridFunction f = sample_quadratic(g, h);
    GridFunction vb = discrete_bellman(f, single, dirs);
    CHECK(vb[g->index({0, 0, 0})] == doctest::Approx(a.inner(h)).epsilon(1e-10));

    const double d2v[] = {2.0, 1.0};
    const double rot[] = {1.5, 0.5, 0.5, 1.5};
    BellmanFamily fam(ell, {a, SymMatrix::diag(d2v), SymMatrix::from_rows(2, rot)});
    GridFunction noise = GridFunction::sample(g, [&](std::array<double, 3>) {
        return rng.uniform(ctr++, -1.0, 1.0);
    });
    GridFunction bv = discrete_bellman(noise, fam, dirs);
    GridFunction lo = discrete_extremal(noise, ell, dirs, ExtremalSign::Minus);
    GridFunction hi = discrete_extremal(noise, ell, dirs, ExtremalSign::Plus);
    for (std::size_t node : g->interior_nodes()) {
        CHECK(bv[node] >= lo[node] - 1e-11);
        CHECK(bv[node] <= hi[node] + 1e-11);
    }
}

TEST_CASE("csv round trip preserves fields bit for bit") {
    auto g = make_grid({.dim = 2, .h = 0.25, .extent = 1.0, .symmetric_in_xn = true});
    CounterRng rng{2024};
    std::uint64_t ctr = 0;
    GridFunction f = GridFunction::sample(g, [&](std::array<double, 3>) {
        return rng.uniform(ctr++, -10.0, 10.0);
    });
    std::stringstream buf;
    f.write_csv(buf);
    std::string first = buf.str();
    GridFunction back = GridFunction::read_csv(g, buf);
    for (std::size_t i = 0; i < g->node_count(); ++i) CHECK(back[i] == f[i]);
    std::stringstream again;
    back.write_csv(again);
    CHECK(again.str() == first);

    auto other = make_grid({.dim = 2, .h = 0.5, .extent = 1.0});
    std::stringstream buf2(first);
    CHECK_THROWS_AS(GridFunction::read_csv(other, buf2), std::invalid_argument);
}
