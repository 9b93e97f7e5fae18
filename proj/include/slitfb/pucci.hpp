#pragma once

#include <vector>

#include "slitfb/ellipticity.hpp"
#include "slitfb/sym_matrix.hpp"

namespace slitfb {

/// Which of the two extremal operators is meant.
enum class ExtremalSign { Plus, Minus };

/// Maximal extremal operator: Lambda times the positive eigenvalue mass plus
/// lambda times the negative mass. Equals the supremum of tr(A H) over all
/// symmetric A with spectrum in [lambda, Lambda].
double pucci_plus(const SymMatrix& h, const EllipticityPair& ell);

/// pucci_plus or pucci_minus by tag.
double pucci_eval(const SymMatrix& h, const EllipticityPair& ell, ExtremalSign sign);

/// Minimal extremal operator, the infimum over the same family. Satisfies
/// pucci_minus(H) == -pucci_plus(-H).
double pucci_minus(const SymMatrix& h, const EllipticityPair& ell);

/// Finite family of symmetric coefficient matrices with spectra inside the
/// declared ellipticity window. Evaluating sup_A tr(A H) over the family
/// gives a convex uniformly elliptic operator sandwiched between the two
/// extremal operators.
class BellmanFamily {
public:
    /// Validates every member against ell; a member whose eigenvalues leave
    /// [lambda - tol, Lambda + tol] is rejected.
    BellmanFamily(EllipticityPair ell, std::vector<SymMatrix> members, double tol = 1e-9);

    const EllipticityPair& ell() const { return ell_; }
    const std::vector<SymMatrix>& members() const { return members_; }
    int dim() const { return members_.front().dim(); }

private:
    EllipticityPair ell_;
    std::vector<SymMatrix> members_;
};

/// sup over the family of tr(A H).
double bellman_eval(const BellmanFamily& fam, const SymMatrix& h);

} // namespace slitfb
