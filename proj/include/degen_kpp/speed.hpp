#pragma once

#include <cmath>
#include <utility>

#include "errors.hpp"

namespace degen_kpp {

/// Roots of l^2 - c l + 1 = 0, ordered (minus, plus).
inline std::pair<double, double> lambda_pm(double c) {
    if (!(c >= 2.0)) throw DomainError("no real roots: c must be >= 2");
    const double disc = std::sqrt((c - 2.0) * (c + 2.0));
    // The larger root is formed without cancellation; the smaller one from the product.
    const double plus = 0.5 * (c + disc);
    return {1.0 / plus, plus};
}

struct Speed {
    double c = 2.0;
    double lambda_minus = 1.0;
    double lambda_plus = 1.0;
    double bell_top = 1.0 / 64.0;

    static Speed make(double c) {
        const auto [lm, lp] = lambda_pm(c);
        return {c, lm, lp, 1.0 / (16.0 * c * c)};
    }
};

/// dh/dr of the transformed wave equation.
inline double rhs(double r, double h, double c) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("rhs: r must lie in (0,1)");
    return 2.0 * c * std::sqrt(h > 0.0 ? h : 0.0) / (1.0 - r) - 2.0 * r;
}

/// Nullcline r^2 (1-r)^2 / c^2: solutions rise above it and fall below it.
inline double bell(double c, double r) {
    const double p = r * (1.0 - r) / c;
    return p * p;
}

inline double lambda_bell(double lambda, double r) {
    const double p = lambda * r * (1.0 - r);
    return p * p;
}

/// Global supersolution c^2 log^2(1-r).
inline double log_square_bound(double c, double r) {
    const double l = c * std::log1p(-r);
    return l * l;
}

/// Larger root of (1-r) m^2 - c m + (1-r) = 0, or 0 when none exists. Above it
/// m = sqrt(h)/r grows without bound as r decreases.
inline double escape_threshold(double c, double x) {
    const double a = c / x;
    if (a <= 2.0) return 0.0;
    return 0.5 * (a + std::sqrt((a - 2.0) * (a + 2.0)));
}

/// Classical KPP decay rate of 1-u at -infinity.
inline double classical_left_rate(double c) {
    return 0.5 * (-c + std::sqrt(c * c + 4.0));
}

}  // namespace degen_kpp
