#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics/dormand_prince.hpp"
#include "numerics/hermite.hpp"
#include "speed.hpp"
#include "tolerance.hpp"

// Traces are parametrised by xi = log(r/(1-r)). Both singular endpoints move to
// infinity, 1-r stays exact as r -> 1, and away from a zero of h the state is
// y = log h, which is smooth on the whole line.

namespace degen_kpp {

enum class Direction { toward_zero, toward_one };

inline double logistic(double xi) {
    if (xi >= 0.0) return 1.0 / (1.0 + std::exp(-xi));
    const double e = std::exp(xi);
    return e / (1.0 + e);
}

/// 1 - logistic(xi), without cancellation.
inline double logistic_complement(double xi) { return logistic(-xi); }

inline double logit(double r) { return std::log(r) - std::log1p(-r); }

/// xi of the point with 1-r = x.
inline double logit_from_complement(double x) { return std::log1p(-x) - std::log(x); }

struct TracePoint {
    double xi;
    double r;
    double x;  // 1 - r
    double h;
};

inline TracePoint make_point(double xi, double h) {
    return {xi, logistic(xi), logistic_complement(xi), h};
}

enum class EventKind { zero_crossing, bell, lambda_minus_bell, lambda_plus_bell };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::zero_crossing: return "zero_crossing";
        case EventKind::bell: return "bell";
        case EventKind::lambda_minus_bell: return "lambda_minus_bell";
        case EventKind::lambda_plus_bell: return "lambda_plus_bell";
    }
    return "?";
}

/// sign = +1 when h - curve changes from negative to positive as r increases.
struct TraceEvent {
    EventKind kind;
    double xi;
    double r;
    double h;
    int sign;
};

enum class ZeroEnd { vanishes, positive, crossed, undetermined };
enum class OneEnd { small, saturated, negative, undetermined };

inline const char* to_string(ZeroEnd z) {
    switch (z) {
        case ZeroEnd::vanishes: return "vanishes";
        case ZeroEnd::positive: return "positive";
        case ZeroEnd::crossed: return "crossed";
        case ZeroEnd::undetermined: return "undetermined";
    }
    return "?";
}

inline const char* to_string(OneEnd o) {
    switch (o) {
        case OneEnd::small: return "small";
        case OneEnd::saturated: return "saturated";
        case OneEnd::negative: return "negative";
        case OneEnd::undetermined: return "undetermined";
    }
    return "?";
}

/// Behaviour of a trace as r -> 0. `m` is sqrt(h)/(r(1-r)) at the first sample.
struct ZeroEndInfo {
    ZeroEnd kind = ZeroEnd::undetermined;
    bool certified = false;
    double r = std::numeric_limits<double>::quiet_NaN();
    double h = std::numeric_limits<double>::quiet_NaN();
    double m = std::numeric_limits<double>::quiet_NaN();
};

/// Behaviour as r -> 1. `model_ratio` compares the last sample with the local
/// model of its kind: c^2 log^2(1-r) (saturated), r^2(1-r)^2/c^2 (small); for a
/// negative end it holds the exact value h(1).
struct OneEndInfo {
    OneEnd kind = OneEnd::undetermined;
    double x = std::numeric_limits<double>::quiet_NaN();
    double h = std::numeric_limits<double>::quiet_NaN();
    double model_ratio = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// dh/dxi and d2h/dxi2 along a solution through (xi, h).
struct Jet {
    double g;
    double g2;
    /// Rounding bound on g2. Near r = 1 the terms of g cancel from O(1-r) to
    /// O((1-r)^2) and the error of g is amplified again in g2.
    double g2_err;
};

inline Jet jet(double c, double r, double x, double h) {
    constexpr double u = std::numeric_limits<double>::epsilon();
    const double p = r * x;
    const double s = h > 0.0 ? std::sqrt(h) : 0.0;
    const double a = 2.0 * c * r * s, b = 2.0 * r * r * x;
    const double g = a - b;
    const double g_err = 4.0 * u * (std::abs(a) + std::abs(b));
    const double t1 = 2.0 * c * p * s, t2 = 2.0 * (2.0 * r - 3.0 * r * r) * p;
    double g2 = t1 - t2;
    double g2_err = 4.0 * u * (std::abs(t1) + std::abs(t2));
    if (s > 0.0) {
        g2 += c * r / s * g;
        g2_err += c * r / s * (g_err + 4.0 * u * std::abs(g));
    }
    return {g, g2, g2_err};
}

inline double rhs_h(double c, double xi, double h) {
    const double r = logistic(xi), x = logistic_complement(xi);
    return 2.0 * c * r * std::sqrt(h > 0.0 ? h : 0.0) - 2.0 * r * r * x;
}

inline double rhs_log(double c, double xi, double y) {
    const double r = logistic(xi), x = logistic_complement(xi);
    const double e = std::exp(-0.5 * y);
    return 2.0 * c * r * e - 2.0 * r * r * x * e * e;
}

inline double max_step(double xi) { return 0.04 * std::max(1.0, std::abs(xi) / 5.0); }

}  // namespace detail

/// Solution of the first-order h-equation sampled on an increasing r grid.
class HTrace {
public:
    HTrace() = default;

    HTrace(double c, std::optional<double> alpha, std::vector<TracePoint> samples,
           const ToleranceSet& tol, std::vector<TraceEvent> zero_crossings = {})
        : c_(c), alpha_(alpha), samples_(std::move(samples)), tol_(tol) {
        if (samples_.size() < 2) throw DomainError("a trace needs at least two samples");
        for (std::size_t i = 1; i < samples_.size(); ++i)
            if (!(samples_[i].xi > samples_[i - 1].xi))
                throw ConsistencyError("trace samples must be strictly increasing in r");
        build_jets();
        events_ = std::move(zero_crossings);
        detect_bell_events();
        std::sort(events_.begin(), events_.end(),
                  [](const TraceEvent& a, const TraceEvent& b) { return a.xi < b.xi; });
        classify_zero_end();
        classify_one_end();
        estimate_interp_error();
    }

    double c() const { return c_; }
    std::optional<double> alpha() const { return alpha_; }
    const std::vector<TracePoint>& samples() const { return samples_; }
    const std::vector<TraceEvent>& events() const { return events_; }
    const ToleranceSet& tolerance() const { return tol_; }
    /// Estimated interpolation error of h between samples.
    double interp_error() const { return interp_error_; }
    const ZeroEndInfo& zero_end() const { return zero_end_; }
    const OneEndInfo& one_end() const { return one_end_; }

    double xi_min() const { return samples_.front().xi; }
    double xi_max() const { return samples_.back().xi; }

    /// True when h > 0 at every sample and h(0) = 0: the trace defines a wave.
    bool wave_producing() const {
        if (zero_end_.kind != ZeroEnd::vanishes) return false;
        for (const auto& s : samples_)
            if (!(s.h > 0.0)) return false;
        return true;
    }

    std::vector<TraceEvent> events_of(EventKind k) const {
        std::vector<TraceEvent> out;
        for (const auto& e : events_)
            if (e.kind == k) out.push_back(e);
        return out;
    }

    double h_at(double r) const {
        if (!(r > 0.0 && r < 1.0)) throw DomainError("h_at: r must lie in (0,1)");
        return h_at_xi(logit(r));
    }

    /// h at the point with 1-r = x; accurate for x far below machine epsilon.
    double h_at_complement(double x) const { return h_at_xi(logit_from_complement(x)); }

    double h_at_xi(double xi) const {
        const auto& f = samples_.front();
        const auto& b = samples_.back();
        if (xi <= f.xi) return extrapolate_left(xi);
        if (xi >= b.xi) return extrapolate_right(xi);
        const std::size_t i = locate(xi);
        return interpolate(i, xi);
    }

    /// dh/dr from the equation itself.
    double slope_at(double r) const { return rhs(r, h_at(r), c_); }

    /// Index i with samples[i].xi <= xi < samples[i+1].xi (clamped).
    std::size_t locate(double xi) const {
        auto it = std::upper_bound(samples_.begin(), samples_.end(), xi,
                                   [](double v, const TracePoint& p) { return v < p.xi; });
        std::size_t i = std::size_t(it - samples_.begin());
        if (i == 0) return 0;
        return std::min(i - 1, samples_.size() - 2);
    }

    double interpolate(std::size_t i, double xi) const {
        const auto& a = samples_[i];
        const auto& b = samples_[i + 1];
        const double dt = b.xi - a.xi;
        const double s = (xi - a.xi) / dt;
        const auto& ja = jets_[i];
        const auto& jb = jets_[i + 1];
        if (a.h <= 0.0 && b.h <= 0.0) {
            // Exact negative branch h = h_a - (r^2 - r_a^2).
            const double r = logistic(xi);
            return a.h - (r - a.r) * (r + a.r);
        }
        if (a.h > 0.0 && b.h > 0.0) {
            const double ya1 = ja.g / a.h, yb1 = jb.g / b.h;
            if (std::max(std::abs(ya1), std::abs(yb1)) * dt <= 1.0) {
                // The second jet enters with weight dt^2; drop it where rounding dominates.
                const double jet2_err = std::max(ja.g2_err / a.h, jb.g2_err / b.h) * dt * dt;
                if (jet2_err > jet2_limit)
                    return std::exp(numerics::cubic_hermite(s, dt, std::log(a.h), ya1, std::log(b.h), yb1));
                const double ya2 = ja.g2 / a.h - ya1 * ya1;
                const double yb2 = jb.g2 / b.h - yb1 * yb1;
                return std::exp(numerics::quintic_hermite(s, dt, std::log(a.h), ya1, ya2,
                                                          std::log(b.h), yb1, yb2));
            }
        }
        return numerics::cubic_hermite(s, dt, a.h, ja.g, b.h, jb.g);
    }

private:
    static constexpr double jet2_limit = 1e-12;

    double extrapolate_left(double xi) const {
        const auto& f = samples_.front();
        const double r = logistic(xi), x = logistic_complement(xi);
        if (f.h <= 0.0) return f.h - (r - f.r) * (r + f.r);
        const double q = (r * x) / (f.r * f.x);
        return f.h * q * q;
    }

    double extrapolate_right(double xi) const {
        const auto& b = samples_.back();
        const double r = logistic(xi), x = logistic_complement(xi);
        if (b.h <= 0.0) return b.h - (r - b.r) * (r + b.r);
        if (b.h > bell(c_, b.r)) {
            const double root = std::sqrt(b.h) + c_ * (std::log(b.x) - std::log(x));
            return root * root;
        }
        const double q = (r * x) / (b.r * b.x);
        return b.h * q * q;
    }

    void build_jets() {
        jets_.reserve(samples_.size());
        for (const auto& s : samples_) jets_.push_back(detail::jet(c_, s.r, s.x, s.h));
    }

    double curve(EventKind k, const TracePoint& p) const {
        const double rx = p.r * p.x;
        switch (k) {
            case EventKind::bell: return rx * rx / (c_ * c_);
            case EventKind::lambda_minus_bell: {
                const double l = lambda_pm(c_).first * rx;
                return l * l;
            }
            case EventKind::lambda_plus_bell: {
                const double l = lambda_pm(c_).second * rx;
                return l * l;
            }
            default: return 0.0;
        }
    }

    double curve_at(EventKind k, double xi) const {
        return curve(k, make_point(xi, 0.0));
    }

    void detect_bell_events() {
        std::vector<EventKind> kinds{EventKind::bell};
        if (c_ >= 2.0) {
            kinds.push_back(EventKind::lambda_minus_bell);
            if (c_ > 2.0) kinds.push_back(EventKind::lambda_plus_bell);
        }
        // Contact closer than this relative gap counts as touching, not crossing.
        const double touch = 1e-12;
        for (EventKind k : kinds) {
            int prev_sign = 0;
            std::size_t prev_index = 0;
            for (std::size_t i = 0; i < samples_.size(); ++i) {
                const auto& p = samples_[i];
                if (!(p.h > 0.0)) {
                    prev_sign = 0;
                    continue;
                }
                const double g = curve(k, p);
                const double d = p.h - g;
                const int sign = std::abs(d) <= touch * g ? 0 : (d > 0.0 ? 1 : -1);
                if (sign == 0) continue;
                if (prev_sign != 0 && sign != prev_sign) {
                    events_.push_back(locate_crossing(k, prev_index, i, sign));
                }
                prev_sign = sign;
                prev_index = i;
            }
        }
    }

    TraceEvent locate_crossing(EventKind k, std::size_t i0, std::size_t i1, int sign) const {
        double lo = samples_[i0].xi, hi = samples_[i1].xi;
        const int lo_sign = -sign;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double d = h_at_xi(mid) - curve_at(k, mid);
            const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
            if (s == lo_sign)
                lo = mid;
            else
                hi = mid;
        }
        const double xi = 0.5 * (lo + hi);
        return {k, xi, logistic(xi), h_at_xi(xi), sign};
    }

    void classify_zero_end() {
        ZeroEndInfo z;
        const auto& f = samples_.front();
        z.r = f.r;
        z.h = f.h;
        if (f.h > 0.0) z.m = std::sqrt(f.h) / (f.r * f.x);
        // The positive part connected to r -> 0 ends at the first non-positive sample.
        std::size_t end = 0;
        while (end < samples_.size() && samples_[end].h > 0.0) ++end;
        if (end == 0) {
            z.kind = ZeroEnd::crossed;
            z.certified = true;
            zero_end_ = z;
            return;
        }
        const double lp = c_ >= 2.0 ? lambda_pm(c_).second : 0.0;
        for (std::size_t i = 0; i < end; ++i) {
            const auto& p = samples_[i];
            const double m = std::sqrt(p.h) / p.r;
            if (c_ >= 2.0 && p.h <= lambda_bell(lp, p.r)) {
                z.kind = ZeroEnd::vanishes;
                z.certified = true;
                zero_end_ = z;
                return;
            }
            if (m > escape_threshold(c_, p.x)) {
                z.kind = ZeroEnd::positive;
                z.certified = true;
                zero_end_ = z;
                return;
            }
        }
        const double delta = f.r;
        const double floor = std::max(10.0 * tol_.ode_abs, std::pow(delta, 1.5));
        z.kind = f.h < floor ? ZeroEnd::vanishes : ZeroEnd::positive;
        z.certified = false;
        zero_end_ = z;
    }

    void classify_one_end() {
        OneEndInfo o;
        const auto& b = samples_.back();
        o.x = b.x;
        o.h = b.h;
        if (b.h <= 0.0) {
            o.kind = OneEnd::negative;
            o.model_ratio = b.h - (1.0 - b.r) * (1.0 + b.r);
        } else if (b.h > bell(c_, b.r)) {
            o.kind = OneEnd::saturated;
            const double l = c_ * std::log(b.x);
            o.model_ratio = b.h / (l * l);
        } else {
            o.kind = OneEnd::small;
            const double rx = b.r * b.x / c_;
            o.model_ratio = b.h / (rx * rx);
        }
        one_end_ = o;
    }

    // Relative gap at interval midpoints between the interpolant and a direct
    // Runge-Kutta half step from the left sample.
    /// Midpoint interpolant against a reference integrated from the right end.
    /// df/dh = c r / sqrt(h) > 0, so backward integration damps perturbations;
    /// substeps keep (df/dh) step <= 1/4 and intervals needing more than 256
    /// are skipped (stiff, where h sits on its slow manifold).
    void estimate_interp_error() {
        constexpr int max_substeps = 256;
        double worst = 0.0;
        const double c = c_;
        auto f_lin = [c](double s, double h) {
            const double r = logistic(s), x = logistic_complement(s);
            return 2.0 * c * r * std::sqrt(h > 0.0 ? h : 0.0) - 2.0 * r * r * x;
        };
        for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
            const auto& a = samples_[i];
            const auto& b = samples_[i + 1];
            if (a.h <= 0.0 || b.h <= 0.0) continue;
            const double half = 0.5 * (b.xi - a.xi);
            const double rate = c * b.r / std::sqrt(std::min(a.h, b.h));
            const int k = std::max(4, int(std::ceil(4.0 * half * rate)));
            if (k > max_substeps) continue;
            const double hq = interpolate(i, a.xi + half);
            double ref = b.h;
            for (int j = 0; j < k; ++j) {
                const double t = b.xi - j * half / k;
                ref = numerics::dp5_step(f_lin, t, ref, -half / k, f_lin(t, ref)).y;
            }
            worst = std::max(worst, std::abs(hq - ref) / std::max(hq, 1e-300));
        }
        interp_error_ = worst;
    }

    double c_ = 2.0;
    std::optional<double> alpha_;
    std::vector<TracePoint> samples_;
    std::vector<detail::Jet> jets_;
    std::vector<TraceEvent> events_;
    ToleranceSet tol_;
    double interp_error_ = 0.0;
    ZeroEndInfo zero_end_;
    OneEndInfo one_end_;
};

namespace detail {

/// Called on every accepted sample; returning true stops the sweep.
using Observer = std::function<bool(const TracePoint&)>;

struct Sweep {
    std::vector<TracePoint> points;  // in sweep order, starting with the initial point
    std::optional<TracePoint> crossing;
    bool stopped = false;
};

/// Samples of the exact negative branch through (xi0, h0) up to xi_end.
inline void append_negative_branch(std::vector<TracePoint>& out, double xi0, double h0,
                                   double xi_end) {
    const double sgn = xi_end > xi0 ? 1.0 : -1.0;
    const double r0 = logistic(xi0);
    double t = xi0;
    while (sgn * (xi_end - t) > 0.0) {
        double dt = sgn * max_step(t) * 2.0;
        if (sgn * (t + dt - xi_end) > 0.0) dt = xi_end - t;
        t += dt;
        const double r = logistic(t);
        // A negative branch that reaches r=0 is the exact solution -r^2 (h0 = -r0^2).
        out.push_back(make_point(t, h0 - (r - r0) * (r + r0)));
    }
}

/// Adaptive Dormand-Prince sweep from (xi0, h0 > 0 or h0 == 0 going toward zero)
/// until xi_end, a downhill zero crossing, or the observer stops it.
inline Sweep sweep(double c, double xi0, double h0, Direction dir, double xi_end,
                   const ToleranceSet& tol, const Observer& observer = nullptr,
                   const std::vector<double>& landmarks = {}) {
    const double sgn = dir == Direction::toward_one ? 1.0 : -1.0;
    // Log mode is left when h drops below theta_down r^2(1-r)^2 and re-entered above theta_up.
    constexpr double theta_down = 1e-3;
    constexpr double theta_up = 1e-2;
    Sweep out;
    TracePoint start = make_point(xi0, h0);
    out.points.push_back(start);
    bool log_mode = h0 > theta_down * (start.r * start.x) * (start.r * start.x);
    double t = xi0;
    double state = log_mode ? std::log(h0) : h0;
    auto f_log = [c](double s, double y) { return rhs_log(c, s, y); };
    auto f_lin = [c](double s, double h) { return rhs_h(c, s, h); };
    double f = log_mode ? f_log(t, state) : f_lin(t, state);
    double dt = sgn * (log_mode ? 1e-3 : 1e-6);
    const std::size_t max_steps = 4000000;
    for (std::size_t step = 0; step < max_steps; ++step) {
        if (sgn * (xi_end - t) <= 0.0) return out;
        const double cap = max_step(t);
        if (std::abs(dt) > cap) dt = sgn * cap;
        if (sgn * (t + dt - xi_end) > 0.0) dt = xi_end - t;
        for (double mark : landmarks)
            if (sgn * (mark - t) > 0.0 && sgn * (t + dt - mark) > 0.0) dt = mark - t;
        const auto res = log_mode ? numerics::dp5_step(f_log, t, state, dt, f)
                                  : numerics::dp5_step(f_lin, t, state, dt, f);
        const double scale =
            log_mode ? tol.ode_rel
                     : tol.ode_abs + tol.ode_rel * std::max(std::abs(state), std::abs(res.y));
        double err = std::abs(res.err) / scale;
        if (!std::isfinite(res.y) || !std::isfinite(err)) err = 1e10;
        if (err <= 1.0) {
            const double t_new = t + dt;
            const double h_new = log_mode ? std::exp(res.y) : res.y;
            if (!log_mode && sgn > 0.0 && h_new <= 0.0) {
                // Downhill crossing inside this step: bisect on the step length.
                double lo = 0.0, hi = dt;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid == lo || mid == hi) break;
                    const double hm = numerics::dp5_step(f_lin, t, state, mid, f).y;
                    if (hm > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                }
                const double xc = h_new == 0.0 ? t_new : t + hi;
                out.crossing = make_point(xc, 0.0);
                out.points.push_back(*out.crossing);
                return out;
            }
            t = t_new;
            state = res.y;
            f = res.f_end;
            const TracePoint p = make_point(t, h_new);
            out.points.push_back(p);
            if (observer && observer(p)) {
                out.stopped = true;
                return out;
            }
            const double rx2 = (p.r * p.x) * (p.r * p.x);
            if (log_mode && sgn * f < 0.0 && h_new < theta_down * rx2) {
                log_mode = false;
                state = h_new;
                f = f_lin(t, state);
            } else if (!log_mode && h_new > theta_up * rx2) {
                log_mode = true;
                state = std::log(h_new);
                f = f_log(t, state);
            }
            const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            dt *= std::clamp(grow, 0.2, 5.0);
        } else {
            dt *= std::max(0.1, 0.9 * std::pow(err, -0.2));
        }
        if (std::abs(dt) < 1e-14 * std::max(1.0, std::abs(t))) {
            const TracePoint last = out.points.back();
            throw IntegrationError("step size underflow", last.r, last.h);
        }
    }
    const TracePoint last = out.points.back();
    throw IntegrationError("step budget exhausted", last.r, last.h);
}

inline TraceEvent crossing_event(const TracePoint& p) {
    return {EventKind::zero_crossing, p.xi, p.r, 0.0, -1};
}

/// One directional pass from (xi0, h0), including the analytic negative branch.
/// Points are returned in sweep order; the crossing, if any, is reported separately.
struct Pass {
    std::vector<TracePoint> points;
    std::optional<TracePoint> crossing;
    bool stopped = false;
};

inline Pass directional_pass(double c, double xi0, double h0, Direction dir,
                             const ToleranceSet& tol, double xi_end_positive,
                             double xi_end_negative, const Observer& observer = nullptr,
                             const std::vector<double>& landmarks = {}) {
    Pass out;
    const TracePoint start = make_point(xi0, h0);
    if (dir == Direction::toward_one) {
        if (h0 <= 0.0) {
            out.points.push_back(start);
            if (h0 == 0.0) out.crossing = start;
            append_negative_branch(out.points, xi0, h0, xi_end_negative);
            return out;
        }
        Sweep s = sweep(c, xi0, h0, dir, xi_end_positive, tol, observer, landmarks);
        out.points = std::move(s.points);
        out.stopped = s.stopped;
        if (s.crossing) {
            out.crossing = s.crossing;
            append_negative_branch(out.points, s.crossing->xi, 0.0,
                                   std::max(xi_end_negative, s.crossing->xi));
        }
        return out;
    }
    // Toward zero.
    if (h0 < 0.0) {
        const double rc2 = h0 + start.r * start.r;
        out.points.push_back(start);
        if (!(rc2 > 0.0)) {
            // On (or numerically at) the exact branch -r^2 all the way down.
            append_negative_branch(out.points, xi0, h0, xi_end_negative);
            return out;
        }
        const double rc = std::sqrt(rc2);
        const double xic = logit(rc);
        if (xic <= xi_end_negative) {
            append_negative_branch(out.points, xi0, h0, xi_end_negative);
            return out;
        }
        append_negative_branch(out.points, xi0, h0, xic);
        out.points.back() = make_point(xic, 0.0);
        out.crossing = out.points.back();
        Sweep s = sweep(c, xic, 0.0, dir, xi_end_positive, tol, observer, landmarks);
        out.points.insert(out.points.end(), s.points.begin() + 1, s.points.end());
        out.stopped = s.stopped;
        return out;
    }
    if (h0 == 0.0) out.crossing = start;
    Sweep s = sweep(c, xi0, h0, dir, xi_end_positive, tol, observer, landmarks);
    out.points = std::move(s.points);
    out.stopped = s.stopped;
    return out;
}

inline double xi_zero_cutoff(const ToleranceSet& tol) { return logit(tol.cutoff_zero); }
inline double xi_one_cutoff(const ToleranceSet& tol) {
    return logit_from_complement(tol.cutoff_one);
}
inline double xi_front_cutoff(const ToleranceSet& tol) {
    return logit_from_complement(tol.front_cutoff);
}

inline void check_start(double r0, double h0) {
    if (!(r0 > 0.0 && r0 < 1.0)) throw DomainError("start r0 must lie in (0,1)");
    if (!std::isfinite(h0)) throw DomainError("start h0 must be finite");
    if (h0 < -r0 * r0 * (1.0 + 1e-15)) throw DomainError("start lies below the exact branch -r^2");
}

}  // namespace detail

/// Integrates from (r0, h0) toward r = 0 or r = 1 up to the cutoffs of `tol`.
/// Positive traces heading to r = 1 that saturate continue to tol.front_cutoff.
inline HTrace integrate(double c, double r0, double h0, Direction dir, const ToleranceSet& tol) {
    if (!(c > 0.0)) throw DomainError("c must be positive");
    tol.validate();
    detail::check_start(r0, h0);
    h0 = std::max(h0, -r0 * r0);
    const double xi0 = logit(r0);
    detail::Pass pass;
    if (dir == Direction::toward_zero) {
        pass = detail::directional_pass(c, xi0, h0, dir, tol, detail::xi_zero_cutoff(tol),
                                        detail::xi_zero_cutoff(tol));
        std::reverse(pass.points.begin(), pass.points.end());
    } else {
        pass = detail::directional_pass(c, xi0, h0, dir, tol, detail::xi_front_cutoff(tol),
                                        detail::xi_one_cutoff(tol));
    }
    std::vector<TraceEvent> crossings;
    if (pass.crossing) crossings.push_back(detail::crossing_event(*pass.crossing));
    std::optional<double> alpha;
    if (r0 == 0.5) alpha = h0;
    return HTrace(c, alpha, std::move(pass.points), tol, std::move(crossings));
}

inline HTrace integrate(double c, std::pair<double, double> start, Direction dir,
                        const ToleranceSet& tol) {
    return integrate(c, start.first, start.second, dir, tol);
}

/// Full trace through (1/2, alpha): backward to the zero cutoff, forward to r = 1.
inline HTrace shoot(double c, double alpha, const ToleranceSet& tol) {
    if (!(c > 0.0)) throw DomainError("c must be positive");
    tol.validate();
    detail::check_start(0.5, alpha);
    auto back = detail::directional_pass(c, 0.0, alpha, Direction::toward_zero, tol,
                                         detail::xi_zero_cutoff(tol),
                                         detail::xi_zero_cutoff(tol));
    auto fwd = detail::directional_pass(c, 0.0, alpha, Direction::toward_one, tol,
                                        detail::xi_front_cutoff(tol),
                                        detail::xi_one_cutoff(tol));
    std::vector<TracePoint> pts(back.points.rbegin(), back.points.rend());
    pts.insert(pts.end(), fwd.points.begin() + 1, fwd.points.end());
    std::vector<TraceEvent> crossings;
    if (back.crossing) crossings.push_back(detail::crossing_event(*back.crossing));
    if (fwd.crossing && !(back.crossing && back.crossing->xi == fwd.crossing->xi))
        crossings.push_back(detail::crossing_event(*fwd.crossing));
    return HTrace(c, alpha, std::move(pts), tol, std::move(crossings));
}

}  // namespace degen_kpp
