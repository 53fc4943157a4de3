#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics/finite_difference.hpp"
#include "numerics/gauss_kronrod.hpp"
#include "numerics/hermite.hpp"
#include "speed.hpp"
#include "tolerance.hpp"
#include "wave.hpp"

namespace degen_kpp {

// ---------------------------------------------------------------------------
// Comparison functions for the h-equation

enum class CandidateKind { log_square, bell_lambda, bell_scaled, power_bump, exact_negative };

inline const char* to_string(CandidateKind k) {
    switch (k) {
        case CandidateKind::log_square: return "log-square";
        case CandidateKind::bell_lambda: return "bell-lambda";
        case CandidateKind::bell_scaled: return "bell-scaled";
        case CandidateKind::power_bump: return "power-bump";
        case CandidateKind::exact_negative: return "exact-negative";
    }
    return "?";
}

/// Closed-form g(r). Parameters by kind:
///   log_square      c^2 log^2(1-r)
///   bell_lambda     lambda^2 r^2 (1-r)^2
///   bell_scaled     r^2 (1-r)^2 / (c+eps)^2
///   power_bump      lambda^2 r^2 (1 + alpha r^beta)
///   exact_negative  -r^2
struct CandidateFunction {
    CandidateKind kind = CandidateKind::log_square;
    double lambda = 0.0;
    double eps = 0.0;
    double alpha = 0.0;
    double beta = 0.0;

    static CandidateFunction log_square() { return {CandidateKind::log_square}; }
    static CandidateFunction bell_lambda(double lambda) {
        return {CandidateKind::bell_lambda, lambda};
    }
    static CandidateFunction bell_scaled(double eps) {
        return {CandidateKind::bell_scaled, 0.0, eps};
    }
    static CandidateFunction power_bump(double lambda, double alpha, double beta) {
        return {CandidateKind::power_bump, lambda, 0.0, alpha, beta};
    }
    static CandidateFunction exact_negative() { return {CandidateKind::exact_negative}; }

    std::string describe() const {
        std::string s = to_string(kind);
        switch (kind) {
            case CandidateKind::bell_lambda: s += "(lambda=" + std::to_string(lambda) + ")"; break;
            case CandidateKind::bell_scaled: s += "(eps=" + std::to_string(eps) + ")"; break;
            case CandidateKind::power_bump:
                s += "(lambda=" + std::to_string(lambda) + ",alpha=" + std::to_string(alpha) +
                     ",beta=" + std::to_string(beta) + ")";
                break;
            default: break;
        }
        return s;
    }

    /// g and dg/dr at r, with x = 1 - r passed separately to keep it exact.
    long double value(long double c, long double r, long double x) const {
        switch (kind) {
            case CandidateKind::log_square: {
                const long double l = c * std::log(x);
                return l * l;
            }
            case CandidateKind::bell_lambda: {
                const long double p = lambda * r * x;
                return p * p;
            }
            case CandidateKind::bell_scaled: {
                const long double p = r * x / (c + eps);
                return p * p;
            }
            case CandidateKind::power_bump:
                return (long double)lambda * lambda * r * r * (1.0L + alpha * std::pow(r, (long double)beta));
            case CandidateKind::exact_negative: return -r * r;
        }
        return 0.0L;
    }

    long double derivative(long double c, long double r, long double x) const {
        switch (kind) {
            case CandidateKind::log_square: return -2.0L * c * c * std::log(x) / x;
            case CandidateKind::bell_lambda:
                return 2.0L * lambda * lambda * r * x * (x - r);
            case CandidateKind::bell_scaled: {
                const long double m = 1.0L / (c + eps);
                return 2.0L * m * m * r * x * (x - r);
            }
            case CandidateKind::power_bump:
                return (long double)lambda * lambda * r *
                       (2.0L + alpha * (2.0L + beta) * std::pow(r, (long double)beta));
            case CandidateKind::exact_negative: return -2.0L * r;
        }
        return 0.0L;
    }
};

enum class Inequality { supersolution, subsolution };

inline const char* to_string(Inequality i) {
    return i == Inequality::supersolution ? "supersolution" : "subsolution";
}

namespace detail {

/// g' - rhs(g) for a supersolution, rhs(g) - g' for a subsolution.
inline long double margin(const CandidateFunction& g, Inequality kind, long double c, long double r,
                          long double x) {
    const long double v = g.value(c, r, x);
    const long double rhs_v = 2.0L * c * std::sqrt(v > 0.0L ? v : 0.0L) / x - 2.0L * r;
    const long double d = g.derivative(c, r, x) - rhs_v;
    return kind == Inequality::supersolution ? d : -d;
}

}  // namespace detail

/// Floating-point certificate of a strict differential inequality at sample points.
struct Certificate {
    std::string candidate;
    Inequality kind = Inequality::supersolution;
    double c = 0.0;
    double r_lo = 0.0;
    double r_hi = 0.0;
    int samples = 0;
    double min_margin = 0.0;
    double witness_r = 0.0;
    bool passed = false;
    /// The margin vanishes identically: g solves the equation.
    bool exact_solution = false;
};

/// Margins below this count as equality.
inline constexpr double strict_margin = 1e-12;

inline Certificate check_inequality(const CandidateFunction& g, Inequality kind, double c,
                                    double r_lo, double r_hi, int n) {
    if (!(c > 0.0)) throw DomainError("c must be positive");
    if (!(0.0 < r_lo && r_lo < r_hi && r_hi < 1.0)) throw DomainError("interval must satisfy 0 < lo < hi < 1");
    if (n < 2) throw DomainError("need at least two sample points");
    Certificate out;
    out.candidate = g.describe();
    out.kind = kind;
    out.c = c;
    out.r_lo = r_lo;
    out.r_hi = r_hi;
    out.samples = n;
    out.min_margin = std::numeric_limits<double>::infinity();
    double max_abs = 0.0;
    const long double mid = 0.5L * ((long double)r_lo + r_hi);
    const long double half = 0.5L * ((long double)r_hi - r_lo);
    for (int k = 0; k < n; ++k) {
        // Chebyshev points of the second kind include both endpoints.
        const long double t = std::cos(std::numbers::pi_v<long double> * k / (n - 1));
        const long double r = mid - half * t;
        const long double x = (1.0L - mid) + half * t;
        const double m = double(detail::margin(g, kind, c, r, x));
        max_abs = std::max(max_abs, std::abs(m));
        if (m < out.min_margin) {
            out.min_margin = m;
            out.witness_r = double(r);
        }
    }
    out.passed = out.min_margin > strict_margin;
    out.exact_solution = max_abs == 0.0;
    return out;
}

inline Certificate check_supersolution(const CandidateFunction& g, double c, double r_lo,
                                       double r_hi, int n = 512) {
    return check_inequality(g, Inequality::supersolution, c, r_lo, r_hi, n);
}

inline Certificate check_subsolution(const CandidateFunction& g, double c, double r_lo,
                                     double r_hi, int n = 512) {
    return check_inequality(g, Inequality::subsolution, c, r_lo, r_hi, n);
}

/// Throws CertificateFailure with the witness when the certificate did not pass.
inline const Certificate& require(const Certificate& cert) {
    if (!cert.passed)
        throw CertificateFailure(cert.candidate + " is not a strict " + to_string(cert.kind) +
                                     (cert.exact_solution ? " (exact solution)" : ""),
                                 cert.witness_r, cert.min_margin);
    return cert;
}

enum class Anchor { at_zero, at_one };

/// Largest R such that the margin is positive on (0, R) (at_zero), or smallest
/// R such that it is positive on (R, 1) (at_one). Returns 0 (resp. 1) when no
/// such interval is found down to 1e-15.
inline double validity_radius(const CandidateFunction& g, Inequality kind, double c,
                              Anchor anchor) {
    auto positive = [&](long double d) {
        const long double r = anchor == Anchor::at_zero ? d : 1.0L - d;
        const long double x = anchor == Anchor::at_zero ? 1.0L - d : d;
        return detail::margin(g, kind, c, r, x) > 0.0L;
    };
    long double d = 1e-15L;
    if (!positive(d)) return anchor == Anchor::at_zero ? 0.0 : 1.0;
    long double good = d, bad = -1.0L;
    while (d < 0.999L) {
        const long double next = std::min(0.999L, d * 1.05L);
        if (!positive(next)) {
            bad = next;
            break;
        }
        good = next;
        d = next;
    }
    if (bad < 0.0L) return anchor == Anchor::at_zero ? double(good) : double(1.0L - good);
    for (int it = 0; it < 200 && bad - good > 1e-15L * bad; ++it) {
        const long double m = 0.5L * (good + bad);
        if (positive(m))
            good = m;
        else
            bad = m;
    }
    return anchor == Anchor::at_zero ? double(good) : double(1.0L - good);
}

/// A candidate together with the inequality it satisfies and where.
struct CandidateCase {
    CandidateFunction g;
    Inequality kind;
    double r_lo;
    double r_hi;
};

/// Sub- and supersolution candidates valid at speed c, each on an interval
/// inside its validity range. Local candidates use (R/1000, 0.9 R) with R the
/// numerical validity radius.
inline std::vector<CandidateCase> standard_candidates(double c) {
    const auto [lm, lp] = lambda_pm(c);
    std::vector<CandidateCase> out;
    out.push_back({CandidateFunction::log_square(), Inequality::supersolution, 0.01, 0.99});
    out.push_back({CandidateFunction::bell_lambda(lm), Inequality::subsolution, 0.01, 0.99});
    out.push_back({CandidateFunction::bell_lambda(lp), Inequality::subsolution, 0.01, 0.99});
    if (lp > lm)
        out.push_back(
            {CandidateFunction::bell_lambda(0.5 * (lm + lp)), Inequality::subsolution, 0.01, 0.99});
    auto local = [&](CandidateFunction g) {
        const double r = validity_radius(g, Inequality::supersolution, c, Anchor::at_zero);
        out.push_back({g, Inequality::supersolution, r * 1e-3, 0.9 * r});
    };
    local(CandidateFunction::bell_lambda(1.1 * lp));
    local(CandidateFunction::bell_lambda(0.9 * lm));
    if (c > 2.0 && c < 1.5 * std::numbers::sqrt2) {
        // Midpoint of the admissible range ((lambda-)^-2 - 1, 1).
        const double beta = 0.5 / (lm * lm);
        local(CandidateFunction::power_bump(lm, 100.0, beta));
    }
    {
        const auto g = CandidateFunction::bell_scaled(0.1);
        const double r = validity_radius(g, Inequality::supersolution, c, Anchor::at_one);
        out.push_back({g, Inequality::supersolution, r + 0.1 * (1.0 - r), 1.0 - 1e-3 * (1.0 - r)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Recursions

struct MnSequence {
    std::vector<double> values;
    /// First n with M_n < 0.
    long first_negative = -1;
};

/// M_{n+1} = c(1+eps) - 1/M_n from M_0 = c(1+eps), stopped at the first negative term.
inline MnSequence bootstrap_Mn(double c, double eps, long cap = 1000000) {
    if (!(c > 0.0 && eps > 0.0)) throw DomainError("bootstrap_Mn requires c > 0 and eps > 0");
    const double a = c * (1.0 + eps);
    if (!(a < 2.0)) throw DomainError("bootstrap_Mn requires c(1+eps) < 2");
    MnSequence out;
    double m = a;
    out.values.push_back(m);
    for (long n = 0; n < cap; ++n) {
        if (m < 0.0) {
            out.first_negative = n;
            return out;
        }
        m = a - 1.0 / m;
        out.values.push_back(m);
    }
    throw ConvergenceError("M_n stayed positive within the cap; this contradicts the small-speed bound");
}

/// Closed form of the M_n recursion: sin((n+2)t)/sin((n+1)t) with cos t = c(1+eps)/2.
inline double Mn_closed_form(double c, double eps, long n) {
    const double t = std::acos(0.5 * c * (1.0 + eps));
    return std::sin(double(n + 2) * t) / std::sin(double(n + 1) * t);
}

struct KnResult {
    double limit = 0.0;
    /// Largest root of (1-r0)^2 X^2 - cX + 1.
    double root = 0.0;
    long iterations = 0;
    std::vector<double> head;  // first terms of the sequence
};

inline double Kn_root(double c, double r0) {
    const double a = (1.0 - r0) * (1.0 - r0);
    const double disc = c * c - 4.0 * a;
    if (disc < 0.0) throw DomainError("(1-r0)^2 X^2 - c X + 1 has no real root");
    return (c + std::sqrt(disc)) / (2.0 * a);
}

/// K_{n+1} = sqrt(c K_n - 1) / (1 - r0), decreasing to the largest root.
inline KnResult bootstrap_Kn(double c, double r0, double K0, long cap = 100000000) {
    if (!(c >= 2.0)) throw DomainError("bootstrap_Kn requires c >= 2");
    if (!(r0 >= 0.0 && r0 < 1.0)) throw DomainError("bootstrap_Kn requires 0 <= r0 < 1");
    KnResult out;
    out.root = Kn_root(c, r0);
    if (!(K0 > out.root)) throw DomainError("K0 must exceed the largest root");
    double k = K0;
    for (long n = 0; n < cap; ++n) {
        if (out.head.size() < 16) out.head.push_back(k);
        const double next = std::sqrt(c * k - 1.0) / (1.0 - r0);
        if (!std::isfinite(next)) throw ConvergenceError("K_n iteration left the domain");
        const double step = std::abs(next - k);
        k = next;
        out.iterations = n + 1;
        if (step < 1e-12) break;
    }
    out.limit = k;
    return out;
}

struct EpsilonSequence {
    std::vector<double> values;
    double limit = 0.0;
    bool increasing = true;
};

/// eps_{n+1} (l+ - l-) + l- = sqrt(eps_n l+^2 + (1-eps_n) l-^2), which increases to 1.
inline EpsilonSequence epsilon_recursion(double c, double eps0, int cap = 100000) {
    if (!(c > 2.0)) throw DomainError("epsilon_recursion requires c > 2");
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw DomainError("epsilon_recursion requires 0 < eps0 < 1");
    const auto [lm, lp] = lambda_pm(c);
    EpsilonSequence out;
    double e = eps0;
    out.values.push_back(e);
    for (int n = 0; n < cap; ++n) {
        const double next = (std::sqrt(e * lp * lp + (1.0 - e) * lm * lm) - lm) / (lp - lm);
        if (next < e) out.increasing = false;
        const bool done = std::abs(next - e) < 1e-15;
        e = next;
        out.values.push_back(e);
        if (done) break;
    }
    out.limit = e;
    return out;
}

// ---------------------------------------------------------------------------
// Residuals of the wave equation

struct Residual {
    double max_residual = 0.0;
    double z_at_max = 0.0;
    int points = 0;
};

/// max |(1-u)u'' + c u' + u(1-u)| over samples with u in [0.05, 0.95], derivatives
/// from five-point differences on the sample grid.
inline Residual tw_residual(const WaveProfile& p, double c) {
    std::vector<double> z, u;
    for (const auto& w : p.samples) {
        z.push_back(w.z);
        u.push_back(w.u);
    }
    Residual out;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (u[i] < 0.05 || u[i] > 0.95) continue;
        const auto d = numerics::stencil_derivatives(z, u, i);
        const double res = std::abs((1.0 - u[i]) * d.d2 + c * d.d1 + u[i] * (1.0 - u[i]));
        ++out.points;
        if (res > out.max_residual) {
            out.max_residual = res;
            out.z_at_max = z[i];
        }
    }
    if (out.points < 5) throw DomainError("grid too coarse: fewer than 5 samples with u in [0.05,0.95]");
    return out;
}

/// Smooth bump exp(-1/(1-t^2)), t = (z - center)/half_width, scaled by `height`.
struct Bump {
    double center = 0.0;
    double half_width = 1.0;
    double height = 1.0;

    double lo() const { return center - half_width; }
    double hi() const { return center + half_width; }
    double value(double z) const {
        const double t = (z - center) / half_width;
        if (std::abs(t) >= 1.0) return 0.0;
        return height * std::exp(-1.0 / (1.0 - t * t));
    }
    double derivative(double z) const {
        const double t = (z - center) / half_width;
        if (std::abs(t) >= 1.0) return 0.0;
        const double q = 1.0 - t * t;
        return value(z) * (-2.0 * t / (q * q)) / half_width;
    }
};

struct TestFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    /// Support [lo, hi].
    double lo = 0.0;
    double hi = 0.0;

    static TestFunction from(const Bump& b) {
        return {[b](double z) { return b.value(z); }, [b](double z) { return b.derivative(z); },
                b.lo(), b.hi()};
    }
};

namespace detail {

/// z at xi from the profile samples (cubic Hermite with dz/dxi = -r(1-r)/sqrt(h)).
inline double profile_z_at_xi(const WaveProfile& p, double xi) {
    const auto& s = p.samples;  // decreasing xi
    auto it = std::upper_bound(s.begin(), s.end(), xi,
                               [](double v, const WaveSample& w) { return v > w.xi; });
    std::size_t i = std::size_t(it - s.begin());
    i = std::min(i == 0 ? 0 : i - 1, s.size() - 2);
    const auto& a = s[i + 1];  // smaller xi
    const auto& b = s[i];
    const double dt = b.xi - a.xi;
    auto dz = [](const WaveSample& w) { return w.u * w.one_minus_u / w.slope; };
    if (p.saturated())
        return p.z_star + numerics::cubic_hermite((xi - a.xi) / dt, dt, a.zeta, dz(a), b.zeta, dz(b));
    return numerics::cubic_hermite((xi - a.xi) / dt, dt, a.z, dz(a), b.z, dz(b));
}

/// xi with profile z(xi) = z, z inside the sampled range.
inline double profile_xi_at_z(const WaveProfile& p, double z) {
    double lo = p.samples.back().xi, hi = p.samples.front().xi;  // z(lo) = z_max, z(hi) = z_min
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (profile_z_at_xi(p, mid) > z)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// |c psi(z*) + int [c u psi' + (1-u) u' psi' - (u')^2 psi - u(1-u) psi] dz|,
/// integrated in xi over the support of psi.
inline double weak_residual(const WaveProfile& p, double c, const TestFunction& psi,
                            const ToleranceSet& tol) {
    if (!(psi.lo < psi.hi)) throw DomainError("test function support is empty");
    if (psi.hi > p.z_max()) throw DomainError("test function support exceeds the resolved range on the right");
    if (!p.saturated() && psi.lo < p.z_min())
        throw DomainError("test function support exceeds the resolved range on the left");
    if (psi.hi <= (p.saturated() ? p.z_star : p.z_min())) return 0.0;
    const HTrace& tr = *p.trace;
    const double xi_a = detail::profile_xi_at_z(p, psi.hi);
    const double xi_b = p.saturated() && psi.lo <= p.z_star ? tr.xi_max()
                                                            : detail::profile_xi_at_z(p, psi.lo);
    auto f = [&](double xi) {
        const double r = logistic(xi), x = logistic_complement(xi);
        const double h = tr.h_at_xi(xi);
        const double s = std::sqrt(h);
        const double z = detail::profile_z_at_xi(p, xi);
        const double v = psi.value(z), d = psi.derivative(z);
        const double term = c * r * d - x * s * d - h * v - r * x * v;
        return term * r * x / s;
    };
    // psi vanishes to all orders at the edge of its support, so pieces there
    // get an absolute target.
    double total = detail::integrate_xi(tr, f, xi_a, xi_b, tol, 1e-3 * tol.quad);
    if (p.saturated()) total += c * psi.value(p.z_star);
    return std::abs(total);
}

/// Five unit-width bumps around the anchor. For the saturated waves of interest
/// the first one straddles z*, so the boundary term c psi(z*) is exercised.
inline std::vector<Bump> standard_bumps() {
    return {{-1.0, 1.0, 1.0}, {-0.5, 1.0, 1.0}, {0.0, 1.0, 1.0}, {0.5, 1.0, 1.0}, {1.5, 1.0, 1.0}};
}

}  // namespace degen_kpp
