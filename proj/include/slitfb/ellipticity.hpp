#pragma once

#include <stdexcept>

namespace slitfb {

/// Ellipticity bounds 0 < lambda <= Lambda shared by every operator in the
/// library. The pair fixes the extremal operators and, through them, the
/// critical homogeneity exponents, so it travels with almost every call.
struct EllipticityPair {
    double lambda = 1.0;
    double Lambda = 1.0;

    EllipticityPair() = default;

    EllipticityPair(double lam, double Lam) : lambda(lam), Lambda(Lam) {
        if (!(lam > 0.0) || !(Lam >= lam)) {
            throw std::invalid_argument("EllipticityPair: need 0 < lambda <= Lambda");
        }
    }

    /// Condition ratio Lambda/lambda; equals 1 exactly in the linear case.
    double ratio() const { return Lambda / lambda; }

    /// True when the extremal operators collapse to lambda * trace.
    bool is_linear() const { return Lambda == lambda; }
};

} // namespace slitfb
