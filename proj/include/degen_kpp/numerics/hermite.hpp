#pragma once

#include <cmath>

namespace degen_kpp::numerics {

/// Quintic Hermite interpolant on [0, dt] at t = s*dt, from values, first and
/// second derivatives at both ends.
inline double quintic_hermite(double s, double dt, double f0, double d0, double s0, double f1,
                              double d1, double s1) {
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    const double h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    const double h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    const double h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    const double h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    const double h5 = 0.5 * (s3 - 2.0 * s4 + s5);
    return f0 * h0 + dt * d0 * h1 + dt * dt * s0 * h2 + f1 * h3 + dt * d1 * h4 + dt * dt * s1 * h5;
}

inline double cubic_hermite(double s, double dt, double f0, double d0, double f1, double d1) {
    const double s2 = s * s, s3 = s2 * s;
    return f0 * (2.0 * s3 - 3.0 * s2 + 1.0) + dt * d0 * (s3 - 2.0 * s2 + s) +
           f1 * (3.0 * s2 - 2.0 * s3) + dt * d1 * (s3 - s2);
}

inline double cubic_hermite_derivative(double s, double dt, double f0, double d0, double f1,
                                       double d1) {
    const double s2 = s * s;
    return (f0 * (6.0 * s2 - 6.0 * s) + f1 * (6.0 * s - 6.0 * s2)) / dt +
           d0 * (3.0 * s2 - 4.0 * s + 1.0) + d1 * (3.0 * s2 - 2.0 * s);
}

/// Fritsch-Carlson limiting of endpoint slopes so that the cubic stays monotone
/// on an interval with secant slope `secant`.
inline void limit_monotone(double secant, double& d0, double& d1) {
    if (secant == 0.0) {
        d0 = d1 = 0.0;
        return;
    }
    if (d0 * secant < 0.0) d0 = 0.0;
    if (d1 * secant < 0.0) d1 = 0.0;
    const double a = d0 / secant, b = d1 / secant;
    const double norm = a * a + b * b;
    if (norm > 9.0) {
        const double tau = 3.0 / std::sqrt(norm);
        d0 = tau * a * secant;
        d1 = tau * b * secant;
    }
}

}  // namespace degen_kpp::numerics
