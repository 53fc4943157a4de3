#pragma once

#include <limits>
#include <string>
#include <utility>

#include "errors.hpp"

namespace degen_kpp {

struct ToleranceSet {
    double ode_rel = 1e-11;
    double ode_abs = 1e-13;
    /// Relative resolution of every threshold bisection.
    double bisect = 1e-10;
    double quad = 1e-12;
    std::pair<double, double> fit_window{1e-6, 1e-3};
    /// Trace cutoffs: r >= cutoff_zero and 1-r >= cutoff_one.
    double cutoff_zero = 1e-8;
    double cutoff_one = 1e-8;
    /// Saturated traces continue toward r=1 down to this value of 1-r.
    double front_cutoff = 1e-300;
    /// Backward cutoff for threshold predicates.
    double deep_zero = 1e-14;

    void validate() const {
        const double eps = std::numeric_limits<double>::epsilon();
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw DomainError(std::string("tolerance ") + name + " must be positive");
        };
        positive(ode_rel, "ode_rel");
        positive(ode_abs, "ode_abs");
        positive(bisect, "bisect");
        positive(quad, "quad");
        positive(cutoff_zero, "cutoff_zero");
        positive(cutoff_one, "cutoff_one");
        positive(front_cutoff, "front_cutoff");
        positive(deep_zero, "deep_zero");
        if (bisect < 1e3 * eps) throw DomainError("tolerance bisect must be at least 1e3 machine epsilon");
        if (!(fit_window.first > 0.0 && fit_window.first < fit_window.second && fit_window.second < 0.5))
            throw DomainError("fit_window must satisfy 0 < lo < hi < 1/2");
        if (cutoff_zero >= 0.01 || cutoff_one >= 0.01) throw DomainError("cutoffs must be below 0.01");
        if (front_cutoff > cutoff_one) throw DomainError("front_cutoff must not exceed cutoff_one");
        if (deep_zero > cutoff_zero) throw DomainError("deep_zero must not exceed cutoff_zero");
    }

    ToleranceSet refined(double factor) const {
        ToleranceSet t = *this;
        t.ode_rel *= factor;
        t.ode_abs *= factor;
        return t;
    }
};

}  // namespace degen_kpp
