#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics/finite_difference.hpp"
#include "numerics/fit.hpp"
#include "numerics/gauss_kronrod.hpp"
#include "numerics/hermite.hpp"
#include "ode_core.hpp"
#include "shooting.hpp"

// A wave-producing trace h defines u through u' = -sqrt(h(u)) and u(0) = 1/2,
// so z = w(r) = int_r^{1/2} ds / sqrt(h(s)). In xi = logit(r) the integrand is
// r(1-r)/sqrt(h), bounded at both ends except for the non-saturated case where
// it tends to c as r -> 1.

namespace degen_kpp {

/// One point of a profile. `one_minus_u` and `zeta` = z - z* keep full relative
/// precision where u rounds to 1.
struct WaveSample {
    double xi = 0.0;
    double z = 0.0;
    double u = 0.0;
    double one_minus_u = 0.0;
    double zeta = std::numeric_limits<double>::infinity();
    /// du/dz = -sqrt(h(u)).
    double slope = 0.0;
};

struct WaveProfile {
    double c = 0.0;
    WaveTag tag = WaveTag::NonSaturated;
    /// -infinity for a non-saturated wave.
    double z_star = -std::numeric_limits<double>::infinity();
    /// Increasing in z.
    std::vector<WaveSample> samples;
    /// Index of the sample with z = 0, u = 1/2.
    std::size_t anchor = 0;
    /// Local exponential rates used past the last sample on each side.
    double right_rate = 0.0;
    double left_rate = 0.0;
    /// w over the last resolved decade of 1-u divided by its value c log 10 for
    /// a trace that sticks to the small bell; near 0 for a finite front.
    double last_decade_ratio = 0.0;
    std::shared_ptr<const HTrace> trace;

    bool saturated() const { return std::isfinite(z_star); }
    double z_min() const { return samples.front().z; }
    double z_max() const { return samples.back().z; }
};

namespace detail {

/// Integral of f(xi) over [a, b] split at the trace samples; each piece meets
/// max(abs_tol, quad * |piece|).
template <class F>
double integrate_xi(const HTrace& tr, F&& f, double a, double b, const ToleranceSet& tol,
                    double abs_tol = 1e-300) {
    if (a == b) return 0.0;
    const double sign = a < b ? 1.0 : -1.0;
    if (a > b) std::swap(a, b);
    const auto& s = tr.samples();
    std::vector<double> cuts{a};
    auto it = std::upper_bound(s.begin(), s.end(), a,
                               [](double v, const TracePoint& p) { return v < p.xi; });
    for (; it != s.end() && it->xi < b; ++it) cuts.push_back(it->xi);
    cuts.push_back(b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const auto q = numerics::integrate_gk(f, cuts[i], cuts[i + 1], abs_tol, tol.quad);
        if (!q.converged) throw IntegrationError("quadrature did not converge", logistic(cuts[i]), 0.0);
        total += q.value;
    }
    return sign * total;
}

/// dz/dxi up to sign: r(1-r)/sqrt(h).
inline double w_integrand(const HTrace& tr, double xi) {
    const double h = tr.h_at_xi(xi);
    if (!(h > 0.0)) throw IntegrationError("wave integrand needs h > 0", logistic(xi), h);
    return logistic(xi) * logistic_complement(xi) / std::sqrt(h);
}

/// e^y E1(y).
inline double scaled_e1(double y) {
    if (y > 40.0) {
        double term = 1.0 / y, sum = term;
        for (int k = 1; k < 12; ++k) {
            term *= -double(k) / y;
            sum += term;
        }
        return sum;
    }
    return -std::exp(y) * std::expint(-y);
}

/// w from the last sample to r = 1 under the saturated model sqrt(h) = sqrt(h_b) + c t.
inline double saturated_tail(const HTrace& tr) {
    const auto& b = tr.samples().back();
    const double c = tr.c();
    return b.r * b.x / c * scaled_e1(std::sqrt(b.h) / c);
}

inline WaveTag infer_tag(const HTrace& tr, bool finite, const ToleranceSet& tol) {
    if (!finite) return WaveTag::NonSaturated;
    const double top = 1.0 / (16.0 * tr.c() * tr.c());
    if (tr.alpha() && std::abs(*tr.alpha() - top) < tol.bisect * top) return WaveTag::SaturatedB;
    const auto n = tr.events_of(EventKind::bell).size();
    if (n == 2) return WaveTag::SaturatedA;
    if (n == 0) return WaveTag::SaturatedC;
    throw ConsistencyError("saturated trace with " + std::to_string(n) + " bell crossings");
}

inline std::vector<double> profile_grid(const HTrace& tr, int n) {
    const double lo = tr.xi_min(), hi = tr.xi_max();
    std::vector<double> g{lo, hi, 0.0};
    for (int k = 1; k <= n; ++k) g.push_back(logit(double(k) / double(n + 1)));
    const int per_decade = 20;
    const double r_min = tr.samples().front().r, x_min = tr.samples().back().x;
    for (double e = std::log10(0.01); e > std::log10(r_min); e -= 1.0 / per_decade)
        g.push_back(logit(std::pow(10.0, e)));
    for (double e = std::log10(0.01); e > std::log10(x_min); e -= 1.0 / per_decade)
        g.push_back(logit_from_complement(std::pow(10.0, e)));
    std::sort(g.begin(), g.end());
    std::vector<double> out;
    for (double v : g) {
        if (v < lo || v > hi) continue;
        if (!out.empty() && v - out.back() < 1e-9 * std::max(1.0, std::abs(v))) {
            if (v == 0.0) out.back() = 0.0;
            continue;
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace detail

/// Profile of the wave defined by a trace, sampled at `n` equispaced values of
/// u plus log-spaced values toward both ends.
inline WaveProfile reconstruct(const HTrace& trace, const ToleranceSet& tol, int n = 2000,
                               std::optional<WaveTag> tag = std::nullopt) {
    tol.validate();
    if (!trace.wave_producing()) throw DomainError("trace does not produce a wave");
    if (!(trace.xi_min() < 0.0 && trace.xi_max() > 0.0))
        throw DomainError("trace must contain r = 1/2");
    if (n < 8) throw DomainError("reconstruct needs at least 8 equispaced samples");
    const auto& s = trace.samples();
    const std::size_t m = s.size();
    auto f = [&](double xi) { return detail::w_integrand(trace, xi); };
    auto piece = [&](double a, double b) {
        if (a == b) return 0.0;
        const auto q = numerics::integrate_gk(f, a, b, 1e-300, tol.quad);
        if (!q.converged) throw IntegrationError("quadrature did not converge", logistic(a), 0.0);
        return q.value;
    };

    WaveProfile out;
    out.c = trace.c();
    out.trace = std::make_shared<const HTrace>(trace);

    std::vector<double> seg(m - 1);
    for (std::size_t k = 0; k + 1 < m; ++k) seg[k] = piece(s[k].xi, s[k + 1].xi);
    std::vector<double> prefix(m, 0.0), suffix(m, 0.0);
    for (std::size_t k = 1; k < m; ++k) prefix[k] = prefix[k - 1] + seg[k - 1];

    const bool saturated_end = trace.one_end().kind == OneEnd::saturated;
    const double x_b = s.back().x;
    const double decade =
        detail::integrate_xi(trace, f, std::max(logit_from_complement(10.0 * x_b), 0.0),
                             s.back().xi, tol);
    out.last_decade_ratio = decade / (out.c * std::log(10.0));
    const bool finite = saturated_end && out.last_decade_ratio < 0.5;
    if (finite != saturated_end)
        throw ConsistencyError("front finiteness disagrees with the trace end classification");
    const double tail = finite ? detail::saturated_tail(trace) : 0.0;
    suffix[m - 1] = tail;
    for (std::size_t k = m - 1; k-- > 0;) suffix[k] = suffix[k + 1] + seg[k];

    auto left_cum = [&](double xi, std::size_t k) { return prefix[k] + piece(s[k].xi, xi); };
    auto right_cum = [&](double xi, std::size_t k) {
        return k + 1 < m ? piece(xi, s[k + 1].xi) + suffix[k + 1] : tail;
    };
    const std::size_t k0 = trace.locate(0.0);
    const double left0 = left_cum(0.0, k0);
    const double right0 = right_cum(0.0, k0);
    if (finite) out.z_star = -right0;

    const auto grid = detail::profile_grid(trace, n);
    out.samples.reserve(grid.size());
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        const double xi = *it;
        const std::size_t k = trace.locate(xi);
        WaveSample w;
        w.xi = xi;
        w.u = logistic(xi);
        w.one_minus_u = logistic_complement(xi);
        const double h = trace.h_at_xi(xi);
        w.slope = -std::sqrt(h);
        if (xi < 0.0)
            w.z = left0 - left_cum(xi, k);
        else if (xi > 0.0)
            w.z = -(right0 - right_cum(xi, k));
        if (finite) w.zeta = right_cum(xi, k);
        if (xi == 0.0) out.anchor = out.samples.size();
        out.samples.push_back(w);
    }
    // Close to a finite front z rounds to z*; zeta carries the ordering there.
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        const auto& a = out.samples[i - 1];
        const auto& b = out.samples[i];
        const bool ordered = finite ? (b.zeta > a.zeta && b.z >= a.z) : b.z > a.z;
        if (!ordered) throw ConsistencyError("reconstructed z is not strictly increasing");
    }
    const auto& first = out.samples.front();
    const auto& last = out.samples.back();
    out.right_rate = -last.slope / last.u;
    out.left_rate = -first.slope / first.one_minus_u;
    out.tag = tag ? *tag : detail::infer_tag(trace, finite, tol);
    if (saturated(out.tag) != finite)
        throw ConsistencyError(std::string("tag ") + to_string(out.tag) +
                               " does not match the front of the trace");
    // Type (b) is tangent to the bell, so its crossing count is not diagnostic.
    if (tag && finite && *tag != WaveTag::SaturatedB) {
        const auto n = trace.events_of(EventKind::bell).size();
        if ((*tag == WaveTag::SaturatedA) != (n == 2) || (*tag == WaveTag::SaturatedC) != (n == 0))
            throw ConsistencyError(std::string("tag ") + to_string(*tag) + " does not match " +
                                   std::to_string(n) + " bell crossings");
    }
    return out;
}

struct UValue {
    double u;
    double one_minus_u;
    bool extrapolated;
};

/// u(z) by cubic Hermite interpolation with the exact slopes; 1 - u is
/// interpolated on the upper half so that it keeps relative precision.
inline UValue evaluate_u_detail(const WaveProfile& p, double z) {
    const auto& s = p.samples;
    if (p.saturated() && z <= p.z_star) return {1.0, 0.0, false};
    if (z < s.front().z) {
        if (p.saturated()) {
            // Between z* and the first sample 1-u ~ -c zeta log zeta.
            const double zeta = z - p.z_star;
            const double q = s.front().one_minus_u * (zeta * std::log(zeta)) /
                             (s.front().zeta * std::log(s.front().zeta));
            return {1.0 - q, q, true};
        }
        const double q = s.front().one_minus_u * std::exp(p.left_rate * (z - s.front().z));
        return {1.0 - q, q, true};
    }
    if (z > s.back().z) {
        const double v = s.back().u * std::exp(-p.right_rate * (z - s.back().z));
        return {v, 1.0 - v, true};
    }
    const bool sat = p.saturated();
    auto key = [sat](const WaveSample& w) { return sat ? w.zeta : w.z; };
    const double q = sat ? z - p.z_star : z;
    auto it = std::upper_bound(s.begin(), s.end(), q,
                               [&](double v, const WaveSample& w) { return v < key(w); });
    std::size_t i = std::size_t(it - s.begin());
    i = std::min(i == 0 ? 0 : i - 1, s.size() - 2);
    const auto& a = s[i];
    const auto& b = s[i + 1];
    const double dz = key(b) - key(a);
    const double t = std::clamp((q - key(a)) / dz, 0.0, 1.0);
    if (a.u > 0.5) {
        double v = numerics::cubic_hermite(t, dz, a.one_minus_u, -a.slope, b.one_minus_u, -b.slope);
        v = std::clamp(v, std::min(a.one_minus_u, b.one_minus_u),
                       std::max(a.one_minus_u, b.one_minus_u));
        return {1.0 - v, v, false};
    }
    double v = numerics::cubic_hermite(t, dz, a.u, a.slope, b.u, b.slope);
    v = std::clamp(v, std::min(a.u, b.u), std::max(a.u, b.u));
    return {v, 1.0 - v, false};
}

inline double evaluate_u(const WaveProfile& p, double z) { return evaluate_u_detail(p, z).u; }

struct TailFit {
    double rate = 0.0;
    double max_residual = 0.0;
    int points = 0;
};

/// Decay rate of u as z -> +infinity from samples with u < 1e-3.
inline TailFit right_tail_rate(const WaveProfile& p, const ToleranceSet& tol) {
    (void)tol;
    std::vector<double> z, y;
    for (const auto& w : p.samples)
        if (w.u < 1e-3) {
            z.push_back(w.z);
            y.push_back(std::log(w.u));
        }
    if (z.size() < 5) throw EstimationError("too few samples with u < 1e-3 for a tail fit");
    const auto fit = numerics::fit_line(z, y);
    return {-fit.slope, fit.max_residual, int(z.size())};
}

struct LeftTail {
    bool saturated = false;
    /// Rate of log(1-u) in z (non-saturated).
    double rate = std::numeric_limits<double>::quiet_NaN();
    /// rate exceeds the classical KPP rate.
    bool steeper_than_classical = false;
    /// (1-u) / (-c zeta log zeta) over the last resolved decade of zeta (saturated).
    std::vector<double> zeta;
    std::vector<double> ratios;
    double ratio_min = std::numeric_limits<double>::quiet_NaN();
    double ratio_max = std::numeric_limits<double>::quiet_NaN();
    int points = 0;
};

inline LeftTail left_tail(const WaveProfile& p, const ToleranceSet& tol) {
    (void)tol;
    LeftTail out;
    out.saturated = p.saturated();
    if (!out.saturated) {
        std::vector<double> z, y;
        for (const auto& w : p.samples)
            if (w.one_minus_u < 1e-3) {
                z.push_back(w.z);
                y.push_back(std::log(w.one_minus_u));
            }
        if (z.size() < 5) throw EstimationError("too few samples with 1-u < 1e-3 for a tail fit");
        const auto fit = numerics::fit_line(z, y);
        out.rate = fit.slope;
        out.points = int(z.size());
        out.steeper_than_classical = out.rate > classical_left_rate(p.c);
        return out;
    }
    const double zeta_min = p.samples.front().zeta;
    if (!(zeta_min > 0.0 && zeta_min < 0.1)) throw EstimationError("front is not resolved near z*");
    out.ratio_min = std::numeric_limits<double>::infinity();
    out.ratio_max = -std::numeric_limits<double>::infinity();
    for (const auto& w : p.samples) {
        if (w.zeta > 10.0 * zeta_min) break;
        const double model = -p.c * w.zeta * std::log(w.zeta);
        const double ratio = w.one_minus_u / model;
        out.zeta.push_back(w.zeta);
        out.ratios.push_back(ratio);
        out.ratio_min = std::min(out.ratio_min, ratio);
        out.ratio_max = std::max(out.ratio_max, ratio);
    }
    out.points = int(out.ratios.size());
    if (out.points < 3) throw EstimationError("last decade before z* holds fewer than 3 samples");
    return out;
}

/// int_0^1 (sqrt(h) + r(1-r)/sqrt(h)) dr, which equals c for every wave.
inline double speed_identity(const HTrace& trace, const ToleranceSet& tol) {
    tol.validate();
    for (const auto& s : trace.samples())
        if (!(s.h > 0.0)) throw IntegrationError("speed identity diverges: h vanishes inside (0,1)", s.r, s.h);
    auto f = [&](double xi) {
        const double r = logistic(xi), x = logistic_complement(xi);
        const double h = trace.h_at_xi(xi);
        if (!(h > 0.0)) return 0.0;
        const double sh = std::sqrt(h);
        return (sh + r * x / sh) * r * x;
    };
    // Past the samples the integrand decays like e^{-|xi|}; 60 units leave < 1e-26.
    const double lo = trace.xi_min(), hi = trace.xi_max();
    double total = detail::integrate_xi(trace, f, lo, hi, tol);
    auto tail = [&](double a, double b) {
        const auto q = numerics::integrate_gk(f, a, b, 1e-300, tol.quad);
        if (!q.converged) throw IntegrationError("speed identity tail did not converge", 0.0, 0.0);
        return q.value;
    };
    total += tail(lo - 60.0, lo);
    if (trace.one_end().kind == OneEnd::small) total += tail(hi, hi + 60.0);
    return total;
}

/// z = w(r) for one radius.
inline double z_of_r(const HTrace& trace, double xi, const ToleranceSet& tol) {
    auto f = [&](double t) { return detail::w_integrand(trace, t); };
    return detail::integrate_xi(trace, f, xi, 0.0, tol);
}

/// Positions of the inflection points of u, which sit at the critical radii of
/// h since u'' = h'(u)/2. Throws when the pattern does not fit the tag.
inline std::vector<double> convexity_pattern(const HTrace& trace, WaveTag tag,
                                             const ToleranceSet& tol) {
    if (!produces_wave(tag)) throw DomainError("no wave for this tag");
    std::vector<double> z;
    if (tag == WaveTag::SaturatedB) {
        z.push_back(0.0);
    } else {
        for (const auto& e : trace.events_of(EventKind::bell)) z.push_back(z_of_r(trace, e.xi, tol));
    }
    std::sort(z.begin(), z.end());
    bool ok = false;
    switch (tag) {
        case WaveTag::NonSaturated: ok = z.size() == 1 && z[0] > 0.0; break;
        case WaveTag::SaturatedA: ok = z.size() == 2 && z[0] < 0.0 && z[1] > 0.0; break;
        case WaveTag::SaturatedB: ok = true; break;
        case WaveTag::SaturatedC: ok = z.empty(); break;
        default: break;
    }
    if (!ok)
        throw ConsistencyError(std::string("inflection pattern of ") + std::to_string(z.size()) +
                               " points does not match " + to_string(tag));
    return z;
}

/// max |h(r) - (u')^2| / max(1, h) over samples with r in [r_lo, r_hi], u' from
/// five-point differences of the (z, u) samples.
inline double round_trip_error(const WaveProfile& p, double r_lo = 0.05, double r_hi = 0.95) {
    std::vector<double> z, u;
    for (const auto& w : p.samples) {
        z.push_back(w.z);
        u.push_back(w.u);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (u[i] < r_lo || u[i] > r_hi) continue;
        const double d = numerics::stencil_derivatives(z, u, i).d1;
        const double h = p.trace->h_at_xi(p.samples[i].xi);
        worst = std::max(worst, std::abs(d * d - h) / std::max(1.0, h));
    }
    return worst;
}

}  // namespace degen_kpp
