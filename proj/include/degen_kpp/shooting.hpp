#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics/fit.hpp"
#include "ode_core.hpp"
#include "speed.hpp"
#include "tolerance.hpp"

namespace degen_kpp {

// ---------------------------------------------------------------------------
// The small solution h0

namespace detail {

/// Coefficients q_n of sqrt(h0) = (1-r) sum q_n (1-r)^n near r = 1.
inline std::vector<double> small_branch_coefficients(double c, int terms) {
    std::vector<double> q(terms, 0.0);
    q[0] = 1.0 / c;
    for (int n = 1; n < terms; ++n) {
        double s = 0.0;  // coefficient of x^(n-1) in q^2
        for (int i = 0; i <= n - 1; ++i) s += q[i] * q[n - 1 - i];
        q[n] = (-(n == 1 ? 2.0 : 0.0) - double(n + 1) * s) / (2.0 * c);
    }
    return q;
}

inline double small_branch_value(const std::vector<double>& q, double x) {
    double acc = 0.0;
    for (auto it = q.rbegin(); it != q.rend(); ++it) acc = acc * x + *it;
    const double root = x * acc;
    return root * root;
}

constexpr double small_series_reach = 0.01;
constexpr int small_series_terms = 18;

}  // namespace detail

struct SmallSolution {
    HTrace trace;
    /// k and h_k(1/2) for the traces started at h(1 - 2^-k) = 0.
    std::vector<int> k_values;
    std::vector<double> half_values;
    double aitken_limit = 0.0;
    double half_value = 0.0;
    /// Location of the unique maximum of h0.
    double max_radius = 0.0;
};

/// The unique solution with h0(0) = h0(1) = 0.
inline SmallSolution solve_small(double c, const ToleranceSet& tol) {
    if (!(c >= 2.0)) throw DomainError("solve_small requires c >= 2");
    tol.validate();
    SmallSolution out;
    const int k_first = 4, k_last = 40;
    for (int k = k_first; k <= k_last; ++k) {
        const double xi_k = logit_from_complement(std::ldexp(1.0, -k));
        auto s = detail::sweep(c, xi_k, 0.0, Direction::toward_zero, 0.0, tol);
        const double v = s.points.back().h;
        out.k_values.push_back(k);
        out.half_values.push_back(v);
        const std::size_t n = out.half_values.size();
        if (n >= 2 && std::abs(v - out.half_values[n - 2]) < tol.bisect * v) break;
    }
    const auto& hv = out.half_values;
    const std::size_t n = hv.size();
    if (n < 2 || std::abs(hv[n - 1] - hv[n - 2]) >= tol.bisect * hv[n - 1])
        throw ConvergenceError("r_n construction of h0 did not converge", hv);
    out.aitken_limit = hv[n - 1];
    if (n >= 3) {
        const double d1 = hv[n - 1] - hv[n - 2], d0 = hv[n - 2] - hv[n - 3];
        const double denom = d1 - d0;
        if (std::abs(denom) > 1e-300 && std::abs(d1) > 0.0)
            out.aitken_limit = hv[n - 1] - d1 * d1 / denom;
    }

    // Near r = 1 the series is exact to rounding; below it the backward sweep is stable.
    const auto q = detail::small_branch_coefficients(c, detail::small_series_terms);
    const double x_seed = detail::small_series_reach;
    const double xi_seed = logit_from_complement(x_seed);
    auto back = detail::sweep(c, xi_seed, detail::small_branch_value(q, x_seed),
                              Direction::toward_zero, detail::xi_zero_cutoff(tol), tol, nullptr,
                              {0.0});
    std::vector<TracePoint> pts(back.points.rbegin(), back.points.rend());
    const double xi_end = detail::xi_one_cutoff(tol);
    for (double t = xi_seed; t < xi_end;) {
        t = std::min(xi_end, t + 2.0 * detail::max_step(t));
        const TracePoint p = make_point(t, 0.0);
        pts.push_back(make_point(t, detail::small_branch_value(q, p.x)));
    }
    out.trace = HTrace(c, std::nullopt, std::move(pts), tol);
    out.half_value = out.trace.h_at_xi(0.0);
    out.trace = HTrace(c, out.half_value, out.trace.samples(), tol);
    if (std::abs(out.half_value - out.aitken_limit) > 10.0 * tol.bisect * out.half_value)
        throw ConvergenceError("h0(1/2) from the r_n limit and from the boundary series disagree",
                               hv);
    for (const auto& e : out.trace.events_of(EventKind::bell))
        if (e.sign < 0) out.max_radius = e.r;
    return out;
}

// ---------------------------------------------------------------------------
// The large solution H by monotone iteration

struct LargeIteration {
    HTrace trace;
    /// sup_r |h_{n+1} - h_n| per iteration.
    std::vector<double> sup_diffs;
    /// sup_r |h_{n+1} - h_n| / h_{n+1} per iteration.
    std::vector<double> rel_diffs;
    /// Most negative pointwise increment seen (0 for an exactly monotone sequence).
    double min_increment = 0.0;
    /// Largest h_n / (c^2 log^2(1-r)) over all iterates.
    double max_bound_ratio = 0.0;
    /// Final value of the stopping statistic.
    double weighted_diff = 0.0;
    /// False when the iteration cap was hit inside a slow geometric tail.
    bool converged = true;
    /// Relative distance to the fixed point implied by the last increments.
    double error_estimate = 0.0;
    int iterations = 0;
    double half_value = 0.0;
};

/// Fixed point of h -> 2c int_0^r sqrt(h+)/(1-s) ds - r^2 started from the
/// lambda+ bell, on a uniform grid in xi. Near r = 0 the iteration contracts like
/// (1 - const r)^n when c = 2, so the relative stopping test is scaled by
/// min(1, r / bulk_radius).
inline LargeIteration solve_large_iteration(double c, const ToleranceSet& tol,
                                            int nodes_per_unit = 400,
                                            int max_iterations = 10000) {
    constexpr double bulk_radius = 1e-3;
    constexpr double slow_tail_limit = 1e-6;
    if (!(c >= 2.0)) throw DomainError("solve_large_iteration requires c >= 2");
    tol.validate();
    const double lp = lambda_pm(c).second;
    const double d = 1.0 / nodes_per_unit;
    const long j_lo = long(std::floor(detail::xi_zero_cutoff(tol) / d));
    const long j_hi = long(std::ceil(detail::xi_one_cutoff(tol) / d));
    const std::size_t n = std::size_t(j_hi - j_lo + 1);
    std::vector<double> xi(n), r(n), x(n), bound(n), h(n), next(n), f(n), cum(n);
    for (std::size_t j = 0; j < n; ++j) {
        xi[j] = double(j_lo + long(j)) * d;
        r[j] = logistic(xi[j]);
        x[j] = logistic_complement(xi[j]);
        const double l = c * std::log(x[j]);
        bound[j] = l * l;
        h[j] = lambda_bell(lp, r[j]);
    }
    // Below the first node H = m^2 r^2 (1-r)^2 with m = lp + b r + O(r^2), so the
    // integral of sqrt(H)/(1-s) over (0, r) is lp r^2 / 2 + b r^3 / 3.
    const double b = 3.0 * lp * lp / (3.0 * lp - c);
    const double tail = 0.5 * lp * r[0] * r[0] + b * r[0] * r[0] * r[0] / 3.0;
    LargeIteration out;
    std::vector<double> weighted_hist;
    const double stop = std::max(tol.quad, 64.0 * std::numeric_limits<double>::epsilon());
    for (int it = 0; it < max_iterations; ++it) {
        for (std::size_t j = 0; j < n; ++j) f[j] = r[j] * std::sqrt(std::max(h[j], 0.0));
        cum[0] = tail;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            double panel;
            if (j == 0)
                panel = 9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3];
            else if (j + 2 == n)
                panel = f[j - 2] - 5.0 * f[j - 1] + 19.0 * f[j] + 9.0 * f[j + 1];
            else
                panel = -f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2];
            cum[j + 1] = cum[j] + d / 24.0 * panel;
        }
        double sup = 0.0, rel = 0.0, worst_inc = 0.0, weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] = 2.0 * c * cum[j] - r[j] * r[j];
            const double inc = next[j] - h[j];
            sup = std::max(sup, std::abs(inc));
            rel = std::max(rel, std::abs(inc) / std::abs(next[j]));
            weighted = std::max(weighted, std::abs(inc) / std::abs(next[j]) *
                                              std::min(1.0, r[j] / bulk_radius));
            worst_inc = std::min(worst_inc, inc / std::abs(next[j]));
            out.max_bound_ratio = std::max(out.max_bound_ratio, next[j] / bound[j]);
            if (next[j] > bound[j] * (1.0 + tol.quad))
                throw ConsistencyError("iterate exceeds the supersolution c^2 log^2(1-r)");
        }
        out.min_increment = std::min(out.min_increment, worst_inc);
        out.sup_diffs.push_back(sup);
        out.rel_diffs.push_back(rel);
        h.swap(next);
        out.iterations = it + 1;
        out.weighted_diff = weighted;
        weighted_hist.push_back(weighted);
        if (weighted < stop) break;
    }
    out.converged = out.weighted_diff < stop;
    if (!out.converged) {
        // Accept a slow but geometric tail; report the distance it implies.
        const std::size_t k = weighted_hist.size();
        const std::size_t block = std::min<std::size_t>(k / 2, 500);
        const double ratio = block > 0 ? std::pow(weighted_hist[k - 1] / weighted_hist[k - 1 - block],
                                                  1.0 / double(block))
                                       : 1.0;
        if (!(ratio < 1.0) || out.weighted_diff > slow_tail_limit)
            throw ConvergenceError("monotone iteration did not converge", out.sup_diffs);
        out.error_estimate = out.weighted_diff * ratio / (1.0 - ratio);
    } else {
        out.error_estimate = out.weighted_diff;
    }

    std::vector<TracePoint> pts(n);
    for (std::size_t j = 0; j < n; ++j) pts[j] = {xi[j], r[j], x[j], h[j]};
    // Continue the saturated end to the front cutoff.
    auto ext = detail::sweep(c, xi[n - 1], h[n - 1], Direction::toward_one,
                             detail::xi_front_cutoff(tol), tol);
    pts.reserve(n + ext.points.size());
    for (std::size_t i = 1; i < ext.points.size(); ++i) pts.push_back(ext.points[i]);
    const std::size_t half = std::size_t(-j_lo);
    out.half_value = h[half];
    out.trace = HTrace(c, out.half_value, std::move(pts), tol);
    return out;
}

// ---------------------------------------------------------------------------
// Threshold searches

struct ThresholdSearch {
    double value = 0.0;
    /// Last probe where the predicate held and first probe where it failed.
    double last_in = 0.0;
    double first_out = 0.0;
    int iterations = 0;
};

namespace detail {

/// Outcome of a backward sweep from (1/2, alpha) to tol.deep_zero.
struct BackwardProbe {
    bool escaped = false;        // certified h(0) > 0
    bool touched_minus = false;  // h <= (lambda-)^2 r^2 (1-r)^2 somewhere
    bool touched_plus = false;   // h <= (lambda+)^2 r^2 (1-r)^2 somewhere
    bool stopped = false;
    double r_end = 0.0;
    double h_end = 0.0;
};

enum class ProbeTarget { plus_bell, minus_bell };

inline BackwardProbe probe_backward(double c, double alpha, const ToleranceSet& tol,
                                    ProbeTarget target, double r_stop) {
    const auto [lm, lp] = lambda_pm(c);
    BackwardProbe out;
    auto check = [&](const TracePoint& p) {
        if (p.h <= lambda_bell(lp, p.r)) out.touched_plus = true;
        if (p.h <= lambda_bell(lm, p.r)) out.touched_minus = true;
        if (p.h > 0.0 && std::sqrt(p.h) / p.r > escape_threshold(c, p.x)) out.escaped = true;
        out.r_end = p.r;
        out.h_end = p.h;
        const bool hit = target == ProbeTarget::plus_bell ? out.touched_plus : out.touched_minus;
        return hit || out.escaped;
    };
    if (check(make_point(0.0, alpha))) {
        out.stopped = true;
        return out;
    }
    auto s = sweep(c, 0.0, alpha, Direction::toward_zero, logit(r_stop), tol, check);
    out.stopped = s.stopped;
    return out;
}

/// h_alpha(0) = 0.
inline bool vanishes_at_zero(double c, double alpha, const ToleranceSet& tol) {
    const auto p = probe_backward(c, alpha, tol, ProbeTarget::plus_bell, tol.deep_zero);
    if (p.touched_plus) return true;
    if (p.escaped) return false;
    return p.h_end < std::max(10.0 * tol.ode_abs, std::pow(p.r_end, 1.5));
}

inline bool touches_plus_bell(double c, double alpha, const ToleranceSet& tol) {
    const auto p = probe_backward(c, alpha, tol, ProbeTarget::plus_bell, tol.deep_zero);
    return p.touched_plus;
}

/// Radius where the coefficient C of m - lambda- ~ k r + C r^a is read off. C r^a
/// must stay well above the integration error of m, which rules out deeper radii.
constexpr double switch_probe_radius = 1e-9;

/// The trace dips under the lambda- bell somewhere in (0, 1/2]. Unresolved
/// traces are decided by the sign of C.
inline bool touches_minus_bell(double c, double alpha, const ToleranceSet& tol) {
    const auto p =
        probe_backward(c, alpha, tol, ProbeTarget::minus_bell, switch_probe_radius);
    if (p.touched_minus) return true;
    if (p.escaped) return false;
    const auto [lm, lp] = lambda_pm(c);
    const double a = lp * lp - 1.0;
    // The bells coincide at c = 2.
    if (!(a > 1e-9)) return touches_plus_bell(c, alpha, tol);
    if (!(a < 1.0 - 1e-9)) return true;
    const double k = c / (1.0 - a);
    const double nu = std::sqrt(p.h_end) / p.r_end - lm;
    const double coeff = (nu - k * p.r_end) / std::pow(p.r_end, a);
    return coeff < 0.0;
}

template <class Pred>
ThresholdSearch bisect_threshold(Pred&& pred, double lo, double hi, const ToleranceSet& tol,
                                 const char* what) {
    if (!pred(lo)) throw SearchError(std::string(what) + ": predicate fails at the lower bracket");
    if (pred(hi)) throw SearchError(std::string(what) + ": predicate holds at the upper bracket");
    ThresholdSearch out;
    while (hi - lo > tol.bisect * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid))
            lo = mid;
        else
            hi = mid;
        ++out.iterations;
    }
    out.last_in = lo;
    out.first_out = hi;
    out.value = 0.5 * (lo + hi);
    return out;
}

inline double upper_shooting_bound(double c) {
    const double l = c * std::log(2.0);
    return l * l;
}

}  // namespace detail

/// sup{alpha : h_alpha(0) = 0}.
inline ThresholdSearch alpha_max_search(double c, const ToleranceSet& tol) {
    if (!(c >= 2.0)) throw DomainError("alpha_max requires c >= 2");
    tol.validate();
    const double lp = lambda_pm(c).second;
    return detail::bisect_threshold(
        [&](double a) { return detail::vanishes_at_zero(c, a, tol); }, lp * lp / 16.0,
        detail::upper_shooting_bound(c), tol, "alpha_max");
}

inline double alpha_max(double c, const ToleranceSet& tol) { return alpha_max_search(c, tol).value; }

struct SwitchPair {
    ThresholdSearch minus;
    ThresholdSearch plus;
};

/// Suprema of alpha whose trace touches the lambda-/lambda+ bell in (0, 1/2].
inline SwitchPair alpha_switch_search(double c, const ToleranceSet& tol) {
    if (!(c >= 2.0)) throw DomainError("alpha_switch requires c >= 2");
    tol.validate();
    const auto [lm, lp] = lambda_pm(c);
    const double top = detail::upper_shooting_bound(c);
    SwitchPair out;
    out.minus = detail::bisect_threshold(
        [&](double a) { return detail::touches_minus_bell(c, a, tol); }, lm * lm / 16.0, top, tol,
        "alpha_switch-");
    out.plus = detail::bisect_threshold(
        [&](double a) { return detail::touches_plus_bell(c, a, tol); }, lp * lp / 16.0, top, tol,
        "alpha_switch+");
    if (!(out.minus.value > lp * lp / 16.0))
        throw ConsistencyError("alpha_switch- must exceed (lambda+)^2/16");
    if (c > 2.0 && c < 1.5 * std::sqrt(2.0) &&
        !(out.plus.last_in - out.minus.first_out > 0.0))
        throw ConsistencyError("alpha_switch- < alpha_switch+ must hold strictly for this speed");
    return out;
}

inline std::pair<double, double> alpha_switch(double c, const ToleranceSet& tol) {
    const auto s = alpha_switch_search(c, tol);
    return {s.minus.value, s.plus.value};
}

struct ThresholdTable {
    double c = 0.0;
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;
    double h0_half = 0.0;
    double bell_top = 0.0;
    double H_half = 0.0;
    double alpha_switch_minus = 0.0;
    double alpha_switch_plus = 0.0;
    double alpha_max = 0.0;
    ToleranceSet tol;

    /// Checks the ordering h0(1/2) < 1/(16c^2) < (lambda+)^2/16 < alpha_switch- <=
    /// alpha_switch+ <= alpha_max and alpha_max >= H(1/2), each up to the bisect tolerance.
    bool chain_holds() const {
        const double slack = tol.bisect;
        const double lp2 = lambda_plus * lambda_plus / 16.0;
        return h0_half < bell_top && bell_top < lp2 && lp2 < alpha_switch_minus &&
               alpha_switch_minus <= alpha_switch_plus * (1.0 + slack) &&
               alpha_switch_plus <= alpha_max * (1.0 + slack) &&
               alpha_max >= H_half * (1.0 - 1e3 * slack);
    }
};

inline ThresholdTable threshold_table(double c, const ToleranceSet& tol) {
    ThresholdTable t;
    const Speed sp = Speed::make(c);
    t.c = c;
    t.lambda_minus = sp.lambda_minus;
    t.lambda_plus = sp.lambda_plus;
    t.bell_top = sp.bell_top;
    t.h0_half = solve_small(c, tol).half_value;
    t.H_half = solve_large_iteration(c, tol).half_value;
    const auto sw = alpha_switch_search(c, tol);
    t.alpha_switch_minus = sw.minus.value;
    t.alpha_switch_plus = sw.plus.value;
    t.alpha_max = alpha_max_search(c, tol).value;
    t.tol = tol;
    return t;
}

// ---------------------------------------------------------------------------
// Decay exponent at r = 0

enum class Approach { from_below, from_above, flat, mixed };

inline const char* to_string(Approach a) {
    switch (a) {
        case Approach::from_below: return "from_below";
        case Approach::from_above: return "from_above";
        case Approach::flat: return "flat";
        case Approach::mixed: return "mixed";
    }
    return "?";
}

/// m(r) = sqrt(h)/(r(1-r)) ~ mu + b r^gamma on the fit window.
struct DecayFit {
    double mu = 0.0;
    double gamma = 0.0;
    double b = 0.0;
    double eps_fit = 0.0;
    /// Direction in which m approaches mu as r decreases.
    Approach approach = Approach::flat;
    std::vector<double> r;
    std::vector<double> m;
    std::vector<double> residuals;
};

inline DecayFit decay_exponent(const HTrace& trace, const ToleranceSet& tol, int points = 25) {
    const double lo = tol.fit_window.first, hi = tol.fit_window.second;
    if (trace.xi_min() > logit(lo) * (1.0 - 1e-12))
        throw EstimationError("trace does not reach the fit window");
    DecayFit out;
    for (int i = 0; i < points; ++i) {
        const double r = hi * std::pow(lo / hi, double(i) / (points - 1));
        const double h = trace.h_at(r);
        if (!(h > 0.0)) throw EstimationError("trace is not positive on the fit window");
        out.r.push_back(r);
        out.m.push_back(std::sqrt(h) / (r * (1.0 - r)));
    }
    // Differences toward smaller r.
    std::vector<double> lx, ly;
    int up = 0, down = 0;
    const double noise = 1e-11 * out.m.back();
    for (int i = 0; i + 1 < points; ++i) {
        const double d = out.m[i + 1] - out.m[i];
        if (std::abs(d) <= noise) continue;
        (d > 0.0 ? up : down)++;
        lx.push_back(std::log(out.r[i]));
        ly.push_back(std::log(std::abs(d)));
    }
    if (up + down < 4) {
        double mean = 0.0;
        for (double v : out.m) mean += v;
        out.mu = mean / points;
        out.gamma = std::numeric_limits<double>::quiet_NaN();
        out.approach = Approach::flat;
        for (double v : out.m) out.eps_fit = std::max(out.eps_fit, std::abs(v - out.mu));
        return out;
    }
    out.approach = down == 0 ? Approach::from_below : (up == 0 ? Approach::from_above : Approach::mixed);
    const auto slope = numerics::fit_line(lx, ly);
    out.gamma = slope.slope;
    if (!(out.gamma > 0.0))
        throw EstimationError("m(r) does not settle as r -> 0", slope.residuals);
    std::vector<double> powers(points);
    for (int i = 0; i < points; ++i) powers[i] = std::pow(out.r[i], out.gamma);
    const auto lin = numerics::fit_line(powers, out.m);
    out.mu = lin.intercept;
    out.b = lin.slope;
    out.residuals = lin.residuals;
    out.eps_fit = 4.0 * lin.max_residual + 64.0 * std::numeric_limits<double>::epsilon() * out.mu;
    return out;
}

// ---------------------------------------------------------------------------
// Classification

enum class WaveTag { BelowSmall, NonSaturated, SaturatedA, SaturatedB, SaturatedC, AboveMax };

inline const char* to_string(WaveTag t) {
    switch (t) {
        case WaveTag::BelowSmall: return "BelowSmall";
        case WaveTag::NonSaturated: return "NonSaturated";
        case WaveTag::SaturatedA: return "SaturatedA";
        case WaveTag::SaturatedB: return "SaturatedB";
        case WaveTag::SaturatedC: return "SaturatedC";
        case WaveTag::AboveMax: return "AboveMax";
    }
    return "?";
}

inline bool produces_wave(WaveTag t) { return t != WaveTag::BelowSmall && t != WaveTag::AboveMax; }

inline bool saturated(WaveTag t) {
    return t == WaveTag::SaturatedA || t == WaveTag::SaturatedB || t == WaveTag::SaturatedC;
}

struct WaveClass {
    WaveTag tag = WaveTag::BelowSmall;
    double alpha = 0.0;
    /// Interior radii where h' = 0.
    std::vector<double> inflection_radii;
    /// Limit of sqrt(h)/(r(1-r)) at r = 0; NaN when no wave is produced.
    double tail_exponent_estimate = std::numeric_limits<double>::quiet_NaN();
    /// alpha lies within the bisect tolerance of a threshold.
    bool ambiguous = false;
    std::optional<HTrace> trace;
};

namespace detail {

inline WaveTag tag_from_table(double alpha, const ThresholdTable& t) {
    if (alpha < t.h0_half) return WaveTag::BelowSmall;
    if (alpha == t.h0_half) return WaveTag::NonSaturated;
    if (alpha < t.bell_top) return WaveTag::SaturatedA;
    if (alpha == t.bell_top) return WaveTag::SaturatedB;
    if (alpha <= t.alpha_max) return WaveTag::SaturatedC;
    return WaveTag::AboveMax;
}

}  // namespace detail

inline WaveClass classify(double c, double alpha, const ThresholdTable& table,
                          const ToleranceSet& tol) {
    if (!(c >= 2.0)) throw DomainError("classify requires c >= 2");
    if (!(alpha > 0.0)) throw DomainError("classify requires alpha > 0");
    tol.validate();
    WaveClass out;
    out.alpha = alpha;
    auto near = [&](double threshold) {
        return std::abs(alpha - threshold) <= tol.bisect * threshold;
    };
    out.ambiguous = near(table.h0_half) || near(table.bell_top) || near(table.alpha_max);

    if (near(table.h0_half)) {
        out.tag = WaveTag::NonSaturated;
        out.trace = solve_small(c, tol).trace;
    } else {
        out.trace = shoot(c, alpha, tol);
        const HTrace& tr = *out.trace;
        const bool crossed = !tr.events_of(EventKind::zero_crossing).empty();
        const auto bells = tr.events_of(EventKind::bell);
        const double slope_half = rhs(0.5, alpha, c);
        const bool tangent = std::abs(alpha - table.bell_top) < tol.bisect &&
                             std::abs(slope_half) < 10.0 * tol.ode_abs;
        if (tr.zero_end().kind == ZeroEnd::positive)
            out.tag = WaveTag::AboveMax;
        else if (crossed)
            out.tag = WaveTag::BelowSmall;
        else if (tangent)
            out.tag = WaveTag::SaturatedB;
        else if (bells.size() == 2)
            out.tag = WaveTag::SaturatedA;
        else if (bells.empty())
            out.tag = WaveTag::SaturatedC;
        else
            throw ConsistencyError("trace has " + std::to_string(bells.size()) +
                                   " bell crossings; no wave class matches");
        const WaveTag expected = detail::tag_from_table(alpha, table);
        if (out.tag != expected) {
            if (!out.ambiguous && out.tag != WaveTag::SaturatedB)
                throw ConsistencyError(std::string("trace features give ") + to_string(out.tag) +
                                       " but the threshold table gives " + to_string(expected));
            out.ambiguous = true;
        }
    }
    if (out.tag == WaveTag::SaturatedB) {
        out.inflection_radii = {0.5};
    } else {
        for (const auto& e : out.trace->events_of(EventKind::bell))
            out.inflection_radii.push_back(e.r);
    }
    if (produces_wave(out.tag)) {
        try {
            out.tail_exponent_estimate = decay_exponent(*out.trace, tol).mu;
        } catch (const EstimationError&) {
        }
    } else {
        out.trace.reset();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Speeds below 2

struct SmallSpeedEntry {
    double alpha = 0.0;
    ZeroEnd zero_end = ZeroEnd::undetermined;
    bool certified = false;
    /// h at the zero cutoff of the backward trace.
    double h_cutoff = 0.0;
    /// Radius of a downhill zero crossing, NaN if none.
    double crossing_r = std::numeric_limits<double>::quiet_NaN();
    /// The trace is nonnegative on (0, 1/2] and vanishes at 0: a wave candidate.
    bool anomalous = false;
};

struct SmallSpeedReport {
    double c = 0.0;
    std::vector<SmallSpeedEntry> entries;
    /// No grid value yields a nonnegative trace with h(0) = 0.
    bool no_wave_certified = true;
};

inline SmallSpeedReport small_speed_scan(double c, const std::vector<double>& alpha_grid,
                                         const ToleranceSet& tol) {
    if (!(c > 0.0 && c < 2.0)) throw DomainError("small_speed_scan requires 0 < c < 2");
    tol.validate();
    SmallSpeedReport rep;
    rep.c = c;
    for (double alpha : alpha_grid) {
        if (!(alpha >= 0.0)) throw DomainError("alpha grid values must be nonnegative");
        SmallSpeedEntry e;
        e.alpha = alpha;
        const HTrace tr = integrate(c, 0.5, alpha, Direction::toward_zero, tol);
        e.zero_end = tr.zero_end().kind;
        e.certified = tr.zero_end().certified;
        e.h_cutoff = tr.samples().front().h;
        if (alpha == 0.0) e.crossing_r = 0.5;
        for (const auto& ev : tr.events_of(EventKind::zero_crossing)) e.crossing_r = ev.r;
        bool nonnegative = true;
        for (const auto& s : tr.samples())
            if (s.h < 0.0) nonnegative = false;
        e.anomalous = nonnegative && e.zero_end == ZeroEnd::vanishes;
        if (e.anomalous) rep.no_wave_certified = false;
        rep.entries.push_back(e);
    }
    return rep;
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = n == 1 ? lo : lo * std::pow(hi / lo, double(i) / double(n - 1));
    return v;
}

}  // namespace degen_kpp
