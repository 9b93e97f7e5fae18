#include "slitfb/signorini.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace slitfb {

namespace {

double eval_field(const ScalarField& f, const std::array<double, 3>& x) {
    return f ? f(x) : 0.0;
}

/// Neighbor indices of every equation node, resolved once so sweeps touch
/// only flat arrays. Frames whose stencil leaves the lattice at a node are
/// dropped there, matching the evaluation engine.
class StencilTable {
public:
    StencilTable(const Grid& g, const DirectionSet& dirs) : dim_(dirs.dim()) {
        const double h2 = g.h() * g.h();
        const auto& frames = dirs.frames();
        for (std::size_t f = 0; f < frames.size(); ++f) {
            for (int d = 0; d < dim_; ++d) {
                inv_a2_[f][d] = 1.0 / (frames[f].dirs[d].len2 * h2);
            }
        }
    }

    std::size_t add(const Grid& g, const DirectionSet& dirs, std::size_t node) {
        Row row;
        row.node = node;
        row.slot_of_frame.fill(-1);
        const auto c = g.coords(node);
        const auto& frames = dirs.frames();
        for (int f = 0; f < static_cast<int>(frames.size()); ++f) {
            std::array<std::size_t, 6> nb{};
            bool fits = true;
            for (int d = 0; d < dim_ && fits; ++d) {
                const auto& off = frames[f].dirs[d].offset;
                const std::size_t plus = g.offset_index(c, off);
                const std::size_t minus = g.offset_index(c, {-off[0], -off[1], -off[2]});
                if (plus == Grid::npos || minus == Grid::npos) {
                    fits = false;
                } else {
                    nb[2 * d] = plus;
                    nb[2 * d + 1] = minus;
                }
            }
            if (!fits) continue;
            const int slot = row.n_frames++;
            row.slot_of_frame[f] = slot;
            row.frame_of_slot[slot] = f;
            for (int d = 0; d < 2 * dim_; ++d) row.nbr[slot][d] = nb[d];
        }
        if (row.n_frames == 0) {
            throw std::logic_error("no stencil frame fits at an equation node");
        }
        rows_.push_back(row);
        return rows_.size() - 1;
    }

    std::size_t node(std::size_t rank) const { return rows_[rank].node; }
    std::size_t size() const { return rows_.size(); }

    DiscreteOperator::NodeStencil gather(const std::vector<double>& u, std::size_t rank) const {
        const Row& r = rows_[rank];
        DiscreteOperator::NodeStencil s;
        s.n_frames = r.n_frames;
        s.dim = dim_;
        s.center = u[r.node];
        std::copy(r.slot_of_frame.begin(), r.slot_of_frame.end(), s.slot_of_frame);
        for (int slot = 0; slot < r.n_frames; ++slot) {
            const int f = r.frame_of_slot[slot];
            for (int d = 0; d < dim_; ++d) {
                s.sum[slot][d] = u[r.nbr[slot][2 * d]] + u[r.nbr[slot][2 * d + 1]];
                s.inv_a2[slot][d] = inv_a2_[f][d];
            }
        }
        return s;
    }

private:
    struct Row {
        std::size_t node = 0;
        int n_frames = 0;
        std::array<int, 8> slot_of_frame{};
        std::array<int, 8> frame_of_slot{};
        std::size_t nbr[8][6] = {};
    };

    int dim_;
    double inv_a2_[8][3] = {};
    std::vector<Row> rows_;
};

/// Exact root of the scalar node equation F(t) = rhs by policy iteration.
/// With neighbors frozen F is piecewise linear, strictly decreasing, and
/// convex (max-type operators) or concave (min-type), so each affine solve
/// brackets the root from one side and the policy fixed point is exact.
double policy_root(const DiscreteOperator& op, const DiscreteOperator::NodeStencil& s,
                   double rhs, double t0) {
    double t = t0;
    for (int k = 0; k < 64; ++k) {
        const auto a = op.policy_affine(s, t);
        const double next = (a.num - rhs) / a.den;
        if (next == t) break;
        t = next;
    }
    return t;
}

/// Reference root finder: expand a bracket using the local slope, then
/// bisect. Kept deliberately free of policy structure so it can arbitrate.
double bisect_root(const DiscreteOperator& op, const DiscreteOperator::NodeStencil& s,
                   double rhs, double t0) {
    double f0 = op.eval(s, t0) - rhs;
    if (f0 == 0.0) return t0;
    double step = std::abs(f0) / op.policy_affine(s, t0).den;
    step = std::max(step, 1e-300);
    double lo = t0;
    double hi = t0;
    if (f0 > 0.0) {
        hi = t0 + step;
        for (int k = 0; k < 200 && op.eval(s, hi) - rhs > 0.0; ++k) {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
    } else {
        lo = t0 - step;
        for (int k = 0; k < 200 && op.eval(s, lo) - rhs < 0.0; ++k) {
            hi = lo;
            step *= 2.0;
            lo -= step;
        }
    }
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (op.eval(s, mid) - rhs > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Everything a solve or a residual evaluation needs, assembled once.
struct Context {
    const SignoriniProblem& p;
    DirectionSet dirs;
    DiscreteOperator op;
    StencilTable table;
    std::vector<std::size_t> comp_nodes;   ///< complementarity nodes
    std::vector<std::size_t> comp_up;      ///< their neighbor one step into x_n > 0
    std::vector<double> comp_phi;          ///< obstacle samples there
    std::vector<double> rhs;               ///< per equation rank

    struct Visit {
        std::size_t node;
        std::size_t rank;
        bool comp;
    };
    std::vector<Visit> order; ///< ascending node index, equation and thin mixed

    explicit Context(const SignoriniProblem& prob)
        : p(prob),
          dirs(prob.dirs.empty() ? DirectionSet::for_dim(prob.grid->dim()) : prob.dirs),
          op(prob.grid, dirs, prob.op),
          table(*prob.grid, dirs) {
        const Grid& g = *p.grid;
        const bool signorini = p.mode == ProblemMode::Signorini;

        std::vector<std::size_t> equation = g.interior_nodes();
        if (!signorini) {
            equation.insert(equation.end(), g.thin_nodes().begin(), g.thin_nodes().end());
            std::sort(equation.begin(), equation.end());
        }
        rhs.reserve(equation.size());
        for (std::size_t node : equation) {
            const std::size_t rank = table.add(g, dirs, node);
            rhs.push_back(eval_field(p.rhs, g.point(node)));
            order.push_back({node, rank, false});
        }
        if (signorini) {
            std::array<int, 3> up{0, 0, 0};
            up[g.dim() - 1] = 1;
            for (std::size_t node : g.thin_nodes()) {
                const std::size_t nb = g.offset_index(g.coords(node), up);
                comp_nodes.push_back(node);
                comp_up.push_back(nb);
                comp_phi.push_back(p.obstacle.phi(g.point(node)));
                order.push_back({node, comp_nodes.size() - 1, true});
            }
            std::sort(order.begin(), order.end(),
                      [](const Visit& a, const Visit& b) { return a.node < b.node; });
        }
    }

    SolveResiduals residuals(const std::vector<double>& u) const {
        SolveResiduals r;
        for (std::size_t rank = 0; rank < table.size(); ++rank) {
            const auto s = table.gather(u, rank);
            r.interior = std::max(r.interior, std::abs(op.eval(s, s.center) - rhs[rank]));
        }
        const double h = p.grid->h();
        for (std::size_t k = 0; k < comp_nodes.size(); ++k) {
            const double inflow = (u[comp_nodes[k]] - u[comp_up[k]]) / h;
            const double gap = u[comp_nodes[k]] - comp_phi[k];
            r.complementarity = std::max(r.complementarity, std::abs(std::min(inflow, gap)));
        }
        return r;
    }
};

double default_omega(const Grid& g) {
    return std::min(1.99, 2.0 / (1.0 + std::sin(M_PI * g.h() / (2.0 * g.extent()))));
}

} // namespace

void ObstacleSpec::validate_against(const Grid& grid) const {
    if (!phi) throw std::invalid_argument("obstacle function not set");
    const double h = grid.h();
    double observed = 0.0;
    for (std::size_t node : grid.thin_nodes()) {
        const auto x = grid.point(node);
        if (!std::isfinite(phi(x))) throw std::invalid_argument("obstacle value not finite");
        for (int d = 0; d + 1 < grid.dim(); ++d) {
            auto xp = x;
            auto xm = x;
            xp[d] += h;
            xm[d] -= h;
            observed = std::max(observed, std::abs(phi(xp) + phi(xm) - 2.0 * phi(x)) / (h * h));
        }
    }
    if (observed > c11_bound * (1.0 + 1e-9) + 1e-12) {
        throw std::invalid_argument("obstacle curvature exceeds its declared bound");
    }
}

void SignoriniProblem::validate() const {
    if (!grid) throw std::invalid_argument("problem has no grid");
    if (!dirichlet) throw std::invalid_argument("Dirichlet data not set");
    if (!dirs.empty() && dirs.dim() != grid->dim()) {
        throw std::invalid_argument("direction set dimension does not match the grid");
    }
    for (std::size_t b : grid->boundary_nodes()) {
        if (!std::isfinite(dirichlet(grid->point(b)))) {
            throw std::invalid_argument("Dirichlet data not finite");
        }
    }
    if (mode == ProblemMode::Signorini) {
        if (!grid->symmetric_in_xn()) {
            throw std::invalid_argument("thin obstacle problems need a symmetric grid");
        }
        obstacle.validate_against(*grid);
        const int n = grid->dim() - 1;
        for (std::size_t b : grid->boundary_nodes()) {
            const auto x = grid->point(b);
            if (x[n] != 0.0) continue;
            const double g = dirichlet(x);
            if (obstacle.phi(x) > g + 1e-12 * std::max(1.0, std::abs(g))) {
                throw std::invalid_argument(
                    "obstacle exceeds Dirichlet data where the thin plane meets the boundary");
            }
        }
    }
}

std::string SolveReport::to_json() const {
    nlohmann::json j;
    j["iterations"] = iterations;
    j["residuals"] = {{"interior", residuals.interior},
                      {"complementarity", residuals.complementarity}};
    j["contact_nodes"] = contact_nodes;
    j["failed"] = failed;
    return j.dump(2);
}

SolveReport solve_signorini(const SignoriniProblem& p, const SolveOptions& opts) {
    p.validate();
    if (opts.tol <= 0.0) throw std::invalid_argument("solve tolerance must be positive");
    const Grid& g = *p.grid;
    Context ctx(p);

    std::vector<double> u(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) u[i] = p.dirichlet(g.point(i));
    for (std::size_t k = 0; k < ctx.comp_nodes.size(); ++k) {
        u[ctx.comp_nodes[k]] = std::max(ctx.comp_phi[k], u[ctx.comp_nodes[k]]);
    }

    const bool sor = opts.method == SweepMethod::PolicySor;
    double omega = opts.omega.value_or(sor ? default_omega(g) : 1.0);

    auto track = [](const SolveResiduals& r) { return std::max(r.interior, r.complementarity); };

    SolveResiduals res = ctx.residuals(u);
    double best = track(res);
    std::vector<double> best_u = u;
    bool converged = best <= opts.tol;
    int iterations = 0;
    int last_improve = 0;
    std::vector<double> snapshot;

    auto update_equation = [&](const std::vector<double>& from, const Context::Visit& v) {
        const auto s = ctx.table.gather(from, v.rank);
        const double target = ctx.rhs[v.rank];
        const double root = opts.method == SweepMethod::Bisection
                                ? bisect_root(ctx.op, s, target, from[v.node])
                                : policy_root(ctx.op, s, target, from[v.node]);
        u[v.node] = from[v.node] + omega * (root - from[v.node]);
    };
    auto update_comp = [&](const std::vector<double>& from, const Context::Visit& v) {
        const double relaxed =
            from[v.node] + omega * (from[ctx.comp_up[v.rank]] - from[v.node]);
        u[v.node] = std::max(ctx.comp_phi[v.rank], relaxed);
    };

    for (int iter = 1; !converged && iter <= opts.max_iters; ++iter) {
        if (opts.method == SweepMethod::Jacobi) {
            snapshot = u;
            for (const auto& v : ctx.order) {
                if (v.comp) {
                    update_comp(snapshot, v);
                } else {
                    update_equation(snapshot, v);
                }
            }
        } else if (iter % 2 == 1) {
            for (auto it = ctx.order.begin(); it != ctx.order.end(); ++it) {
                it->comp ? update_comp(u, *it) : update_equation(u, *it);
            }
        } else {
            for (auto it = ctx.order.rbegin(); it != ctx.order.rend(); ++it) {
                it->comp ? update_comp(u, *it) : update_equation(u, *it);
            }
        }
        iterations = iter;
        res = ctx.residuals(u);
        const double tr = track(res);
        if (tr <= opts.tol) {
            converged = true;
            best_u = u;
            break;
        }
        if (!std::isfinite(tr) || tr > 100.0 * best) {
            // Over-relaxation went unstable: back off deterministically and
            // restart from the best iterate seen.
            u = best_u;
            omega = omega > 1.01 ? 1.0 + 0.5 * (omega - 1.0) : 1.0;
            last_improve = iter;
            continue;
        }
        if (tr < 0.999 * best) {
            best = tr;
            best_u = u;
            last_improve = iter;
        } else if (iter - last_improve >= 40) {
            omega = omega > 1.01 ? 1.0 + 0.5 * (omega - 1.0) : 1.0;
            last_improve = iter;
        }
    }

    GridFunction sol(p.grid);
    sol.values() = std::move(best_u);
    const SolveResiduals final_res = ctx.residuals(sol.values());
    SolveReport rep{std::move(sol), iterations, final_res, {}, !converged};
    const double contact_tol = opts.contact_factor * opts.tol;
    for (std::size_t k = 0; k < ctx.comp_nodes.size(); ++k) {
        if (rep.solution[ctx.comp_nodes[k]] - ctx.comp_phi[k] <= contact_tol) {
            rep.contact_nodes.push_back(ctx.comp_nodes[k]);
        }
    }
    return rep;
}

SolveResiduals residual(const SignoriniProblem& p, const GridFunction& u) {
    p.validate();
    if (u.grid_ptr().get() != p.grid.get()) {
        throw std::invalid_argument("field lives on a different grid than the problem");
    }
    return Context(p).residuals(u.values());
}

ExtensionResult extension_solve(const ScalarField& trace, const EllipticityPair& ell,
                                ExtremalSign sign, std::shared_ptr<const Grid> grid,
                                const FarFieldCap& cap, const SolveOptions& opts) {
    if (!trace) throw std::invalid_argument("extension needs a trace");
    if (!cap.upper) throw std::invalid_argument("far-field cap not set");
    if (!grid || !grid->half_in_xn() || grid->symmetric_in_xn()) {
        throw std::invalid_argument("extension grids are plain half grids");
    }
    const int n = grid->dim() - 1;
    auto run = [&](const ScalarField& far) {
        SignoriniProblem p;
        p.grid = grid;
        p.op = OperatorSpec{ell, sign, std::nullopt};
        p.dirichlet = [&trace, &far, n](std::array<double, 3> x) {
            return x[n] == 0.0 ? trace(x) : far(x);
        };
        p.mode = ProblemMode::PureDirichlet;
        return solve_signorini(p, opts);
    };

    ExtensionResult out{GridFunction(grid), 0.0, run(cap.upper), std::nullopt};
    if (!cap.lower) {
        out.field = out.upper_report.solution;
        return out;
    }
    out.lower_report = run(cap.lower);
    const GridFunction& hi = out.upper_report.solution;
    const GridFunction& lo = out.lower_report->solution;
    double gap = 0.0;
    for (std::size_t node : grid->interior_nodes()) {
        const double d = hi[node] - lo[node];
        if (d < -1e-8 * std::max(1.0, hi.max_abs())) {
            throw std::runtime_error("far-field runs failed to bracket");
        }
        gap = std::max(gap, d);
        out.field[node] = 0.5 * (hi[node] + lo[node]);
    }
    for (std::size_t node : grid->boundary_nodes()) {
        out.field[node] = 0.5 * (hi[node] + lo[node]);
    }
    out.bracket_gap = gap;
    return out;
}

} // namespace slitfb
