#include "slitfb/pucci.hpp"

#include <stdexcept>

namespace slitfb {

namespace {

double weigh_eigenvalues(const SymMatrix& h, double pos_w, double neg_w) {
    const auto e = eig_sym(h);
    double out = 0.0;
    for (int i = 0; i < h.dim(); ++i) {
        out += (e[i] > 0.0 ? pos_w : neg_w) * e[i];
    }
    return out;
}

} // namespace

double pucci_plus(const SymMatrix& h, const EllipticityPair& ell) {
    return weigh_eigenvalues(h, ell.Lambda, ell.lambda);
}

double pucci_minus(const SymMatrix& h, const EllipticityPair& ell) {
    return weigh_eigenvalues(h, ell.lambda, ell.Lambda);
}

double pucci_eval(const SymMatrix& h, const EllipticityPair& ell, ExtremalSign sign) {
    return sign == ExtremalSign::Plus ? pucci_plus(h, ell) : pucci_minus(h, ell);
}

BellmanFamily::BellmanFamily(EllipticityPair ell, std::vector<SymMatrix> members, double tol)
    : ell_(ell), members_(std::move(members)) {
    if (members_.empty()) throw std::invalid_argument("BellmanFamily: empty member list");
    const int dim = members_.front().dim();
    for (const SymMatrix& a : members_) {
        if (a.dim() != dim) throw std::invalid_argument("BellmanFamily: mixed dimensions");
        const auto e = eig_sym(a);
        for (int i = 0; i < dim; ++i) {
            if (e[i] < ell_.lambda - tol || e[i] > ell_.Lambda + tol) {
                throw std::invalid_argument(
                    "BellmanFamily: member spectrum leaves [lambda, Lambda]");
            }
        }
    }
}

double bellman_eval(const BellmanFamily& fam, const SymMatrix& h) {
    if (h.dim() != fam.dim()) throw std::invalid_argument("bellman_eval: dimension mismatch");
    double best = fam.members().front().inner(h);
    for (std::size_t k = 1; k < fam.members().size(); ++k) {
        best = std::max(best, fam.members()[k].inner(h));
    }
    return best;
}

} // namespace slitfb
