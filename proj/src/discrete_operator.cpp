#include "slitfb/discrete_operator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace slitfb {

namespace {

// Rayleigh quotient of the member matrix along a lattice direction.
double rayleigh(const SymMatrix& a, const LatticeDirection& d) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        for (int j = 0; j < a.dim(); ++j) s += d.offset[i] * a.at(i, j) * d.offset[j];
    }
    return s / d.len2;
}

} // namespace

DiscreteOperator::DiscreteOperator(std::shared_ptr<const Grid> grid, DirectionSet dirs,
                                   OperatorSpec spec)
    : grid_(std::move(grid)), dirs_(std::move(dirs)), spec_(std::move(spec)) {
    if (dirs_.dim() != grid_->dim()) {
        throw std::invalid_argument("DiscreteOperator: direction set dimension mismatch");
    }
    if (dirs_.frames().size() > 8) {
        throw std::invalid_argument("DiscreteOperator: at most 8 frames supported");
    }

    axis_frame_ = -1;
    for (std::size_t f = 0; f < dirs_.frames().size(); ++f) {
        bool axis = true;
        for (int i = 0; i < dirs_.dim(); ++i) {
            if (dirs_.frames()[f].dirs[i].len2 != 1.0) axis = false;
        }
        if (axis) {
            axis_frame_ = static_cast<int>(f);
            break;
        }
    }
    if (axis_frame_ < 0) {
        throw std::invalid_argument("DiscreteOperator: direction set must contain the axis frame");
    }

    if (spec_.family) {
        if (spec_.family->dim() != grid_->dim()) {
            throw std::invalid_argument("DiscreteOperator: Bellman family dimension mismatch");
        }
        for (const SymMatrix& a : spec_.family->members()) {
            CompiledMember cm;
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t f = 0; f < dirs_.frames().size(); ++f) {
                double captured = 0.0;
                double coeff[3];
                for (int i = 0; i < dirs_.dim(); ++i) {
                    coeff[i] = rayleigh(a, dirs_.frames()[f].dirs[i]);
                    captured += coeff[i] * coeff[i];
                }
                if (captured > best) {
                    best = captured;
                    cm.frame = static_cast<int>(f);
                    for (int i = 0; i < dirs_.dim(); ++i) cm.coeff[i] = coeff[i];
                }
            }
            for (int i = 0; i < dirs_.dim(); ++i) {
                cm.axis_coeff[i] = rayleigh(a, dirs_.frames()[static_cast<std::size_t>(axis_frame_)].dirs[i]);
            }
            members_.push_back(cm);
        }
    }
}

DiscreteOperator::NodeStencil DiscreteOperator::gather(const std::vector<double>& u,
                                                       std::size_t node) const {
    NodeStencil s;
    s.dim = grid_->dim();
    s.center = u[node];
    const auto c = grid_->coords(node);
    const double h2 = grid_->h() * grid_->h();
    for (std::size_t f = 0; f < dirs_.frames().size(); ++f) {
        s.slot_of_frame[f] = -1;
        const Frame& fr = dirs_.frames()[f];
        double sum[3];
        double inv_a2[3];
        bool fits = true;
        for (int i = 0; i < s.dim && fits; ++i) {
            const auto& off = fr.dirs[i].offset;
            const std::size_t plus = grid_->offset_index(c, off);
            const std::size_t minus =
                grid_->offset_index(c, {-off[0], -off[1], -off[2]});
            if (plus == Grid::npos || minus == Grid::npos) {
                fits = false;
                break;
            }
            sum[i] = u[plus] + u[minus];
            inv_a2[i] = 1.0 / (fr.dirs[i].len2 * h2);
        }
        if (!fits) continue;
        const int slot = s.n_frames++;
        s.slot_of_frame[f] = slot;
        for (int i = 0; i < s.dim; ++i) {
            s.sum[slot][i] = sum[i];
            s.inv_a2[slot][i] = inv_a2[i];
        }
    }
    if (s.n_frames == 0) {
        throw std::logic_error("DiscreteOperator: no usable frame at node");
    }
    return s;
}

double DiscreteOperator::eval_extremal(const NodeStencil& s, double t) const {
    const double lam = spec_.ell.lambda, Lam = spec_.ell.Lambda;
    const bool plus = spec_.sign == ExtremalSign::Plus;
    double best = plus ? -std::numeric_limits<double>::infinity()
                       : std::numeric_limits<double>::infinity();
    for (int f = 0; f < s.n_frames; ++f) {
        double v = 0.0;
        for (int i = 0; i < s.dim; ++i) {
            const double d2 = (s.sum[f][i] - 2.0 * t) * s.inv_a2[f][i];
            if (plus) {
                v += (d2 > 0.0 ? Lam : lam) * d2;
            } else {
                v += (d2 > 0.0 ? lam : Lam) * d2;
            }
        }
        best = plus ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

double DiscreteOperator::eval_bellman(const NodeStencil& s, double t) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const CompiledMember& m : members_) {
        const int slot = s.slot_of_frame[m.frame];
        const int use = slot >= 0 ? slot : s.slot_of_frame[axis_frame_];
        const double* coeff = slot >= 0 ? m.coeff : m.axis_coeff;
        double v = 0.0;
        for (int i = 0; i < s.dim; ++i) {
            v += coeff[i] * (s.sum[use][i] - 2.0 * t) * s.inv_a2[use][i];
        }
        best = std::max(best, v);
    }
    return best;
}

double DiscreteOperator::eval(const NodeStencil& s, double t) const {
    return spec_.family ? eval_bellman(s, t) : eval_extremal(s, t);
}

double DiscreteOperator::value(const std::vector<double>& u, std::size_t node) const {
    const NodeStencil s = gather(u, node);
    return eval(s, s.center);
}

DiscreteOperator::NodeAffine DiscreteOperator::policy_affine(const NodeStencil& s,
                                                             double t) const {
    NodeAffine out;
    if (spec_.family) {
        double best = -std::numeric_limits<double>::infinity();
        for (const CompiledMember& m : members_) {
            const int slot = s.slot_of_frame[m.frame];
            const int use = slot >= 0 ? slot : s.slot_of_frame[axis_frame_];
            const double* coeff = slot >= 0 ? m.coeff : m.axis_coeff;
            double num = 0.0, den = 0.0, v = 0.0;
            for (int i = 0; i < s.dim; ++i) {
                const double w = coeff[i] * s.inv_a2[use][i];
                num += w * s.sum[use][i];
                den += 2.0 * w;
                v += w * (s.sum[use][i] - 2.0 * t);
            }
            if (v > best) {
                best = v;
                out = {num, den};
            }
        }
        return out;
    }
    const double lam = spec_.ell.lambda, Lam = spec_.ell.Lambda;
    const bool plus = spec_.sign == ExtremalSign::Plus;
    double best = plus ? -std::numeric_limits<double>::infinity()
                       : std::numeric_limits<double>::infinity();
    for (int f = 0; f < s.n_frames; ++f) {
        double num = 0.0, den = 0.0, v = 0.0;
        for (int i = 0; i < s.dim; ++i) {
            const double d2 = (s.sum[f][i] - 2.0 * t) * s.inv_a2[f][i];
            double w;
            if (plus) {
                w = d2 > 0.0 ? Lam : lam;
            } else {
                w = d2 > 0.0 ? lam : Lam;
            }
            v += w * d2;
            num += w * s.sum[f][i] * s.inv_a2[f][i];
            den += 2.0 * w * s.inv_a2[f][i];
        }
        const bool better = plus ? (v > best) : (v < best);
        if (better) {
            best = v;
            out = {num, den};
        }
    }
    return out;
}

namespace {

GridFunction run_interior(const GridFunction& f, const DiscreteOperator& op) {
    GridFunction out(f.grid_ptr(), 0.0);
    const Grid& g = f.grid();
    for (std::size_t node : g.interior_nodes()) out[node] = op.value(f.values(), node);
    if (g.symmetric_in_xn()) {
        for (std::size_t node : g.thin_nodes()) out[node] = op.value(f.values(), node);
    }
    return out;
}

} // namespace

GridFunction discrete_extremal(const GridFunction& f, const EllipticityPair& ell,
                               const DirectionSet& dirs, ExtremalSign sign) {
    OperatorSpec spec;
    spec.ell = ell;
    spec.sign = sign;
    DiscreteOperator op(f.grid_ptr(), dirs, spec);
    return run_interior(f, op);
}

GridFunction discrete_bellman(const GridFunction& f, const BellmanFamily& family,
                              const DirectionSet& dirs) {
    OperatorSpec spec;
    spec.ell = family.ell();
    spec.family = family;
    DiscreteOperator op(f.grid_ptr(), dirs, spec);
    return run_interior(f, op);
}

} // namespace slitfb
