#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics/fit.hpp"
#include "numerics/gauss_kronrod.hpp"
#include "tolerance.hpp"

// For an even probability density J with second moment J2 and J_eps(z) =
// J(z/eps)/eps, (J_eps * f - f)(x) = eps^2 (J2/2) f''(x) + O(eps^4) in one
// dimension when J has a finite fourth moment.

namespace degen_kpp {

struct Kernel {
    std::string name;
    std::function<double(double)> density;
    double second_moment = 0.0;
    /// +infinity when the fourth moment diverges.
    double fourth_moment = 0.0;
    /// Standard deviation sqrt(J2).
    double scale = 0.0;
    /// Half-width of the support, +infinity for unbounded support.
    double support = std::numeric_limits<double>::infinity();
    /// Mass of J outside [-t, t].
    std::function<double(double)> tail_mass;

    bool finite_fourth_moment() const { return std::isfinite(fourth_moment); }

    /// Quadrature cutoff: the support, or 12 standard deviations.
    double truncation() const { return std::isfinite(support) ? support : 12.0 * scale; }

    static Kernel gaussian(double sigma = 1.0) {
        Kernel k;
        k.name = "gaussian";
        k.density = [sigma](double z) {
            const double t = z / sigma;
            return std::exp(-0.5 * t * t) / (sigma * std::sqrt(2.0 * std::numbers::pi));
        };
        k.second_moment = sigma * sigma;
        k.fourth_moment = 3.0 * sigma * sigma * sigma * sigma;
        k.scale = sigma;
        k.tail_mass = [sigma](double t) { return std::erfc(t / (sigma * std::numbers::sqrt2)); };
        return k;
    }

    /// Uniform density on [-a, a].
    static Kernel uniform(double a = 1.0) {
        Kernel k;
        k.name = "uniform";
        k.density = [a](double z) { return std::abs(z) <= a ? 0.5 / a : 0.0; };
        k.second_moment = a * a / 3.0;
        k.fourth_moment = a * a * a * a / 5.0;
        k.scale = std::sqrt(k.second_moment);
        k.support = a;
        k.tail_mass = [a](double t) { return t >= a ? 0.0 : 1.0 - t / a; };
        return k;
    }

    /// Student t with 3 degrees of freedom: J2 = 3, infinite fourth moment.
    static Kernel student_t3() {
        Kernel k;
        k.name = "student-t3";
        const double norm = 2.0 / (std::numbers::pi * std::sqrt(3.0));
        k.density = [norm](double z) {
            const double q = 1.0 + z * z / 3.0;
            return norm / (q * q);
        };
        k.second_moment = 3.0;
        k.fourth_moment = std::numeric_limits<double>::infinity();
        k.scale = std::sqrt(3.0);
        // Two-sided tail of the t3 distribution.
        k.tail_mass = [](double t) {
            const double s = t / std::sqrt(3.0);
            const double cdf_upper =
                0.5 - (std::atan(s) + s / (1.0 + s * s)) / std::numbers::pi;
            return 2.0 * cdf_upper;
        };
        return k;
    }
};

struct KernelCheck {
    double mass = 0.0;
    double second_moment = 0.0;
    double max_asymmetry = 0.0;
    bool ok = false;
};

/// Unit mass, J2 and evenness checked by quadrature on the truncated support.
inline KernelCheck check_kernel(const Kernel& k, const ToleranceSet& tol) {
    const double t = k.truncation();
    KernelCheck out;
    const double tail = k.tail_mass(t);
    out.mass = numerics::integrate_gk(k.density, -t, t, 0.1 * tol.quad).value + tail;
    const double m2 =
        numerics::integrate_gk([&](double z) { return z * z * k.density(z); }, -t, t, 0.1 * tol.quad)
            .value;
    out.second_moment = m2;
    for (int i = 0; i <= 100; ++i) {
        const double z = t * i / 100.0;
        out.max_asymmetry = std::max(out.max_asymmetry, std::abs(k.density(z) - k.density(-z)));
    }
    // Past the cutoff only unbounded kernels lose second moment; allow for it.
    const double m2_tail = std::isfinite(k.support) ? 0.0 : k.second_moment - m2;
    out.ok = std::abs(out.mass - 1.0) <= tol.quad && out.max_asymmetry == 0.0 &&
             (std::isfinite(k.support) ? std::abs(m2 - k.second_moment) <= tol.quad
                                       : m2_tail >= -tol.quad);
    return out;
}

/// A function with its second derivative.
struct SmoothFunction {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> second_derivative;
    /// sup |f| over the real line.
    double sup = 1.0;

    static SmoothFunction gaussian() {
        return {"exp(-x^2)", [](double x) { return std::exp(-x * x); },
                [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); }, 1.0};
    }
    static SmoothFunction quadratic() {
        return {"x^2", [](double x) { return x * x; }, [](double) { return 2.0; },
                std::numeric_limits<double>::infinity()};
    }
    static SmoothFunction constant(double v) {
        return {"const", [v](double) { return v; }, [](double) { return 0.0; }, std::abs(v)};
    }
};

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
    return v;
}

/// (J_eps * f - f)(x) at each grid point, integrated in the scaled variable z over
/// the truncated kernel support.
inline std::vector<double> convolve_focused(const Kernel& k, double eps, const SmoothFunction& f,
                                            const std::vector<double>& x_grid,
                                            const ToleranceSet& tol) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    const double t = k.truncation();
    const double tail = k.tail_mass(t);
    // Dropping |z| > t costs at most 2 sup|f| tail_mass(t) for bounded f.
    if (tail > 0.0 && std::isfinite(f.sup) && 2.0 * f.sup * tail > tol.quad)
        throw DomainError("kernel truncation error " + std::to_string(2.0 * f.sup * tail) +
                          " exceeds the quadrature tolerance");
    std::vector<double> out;
    out.reserve(x_grid.size());
    for (double x : x_grid) {
        const double fx = f.value(x);
        // Even kernel: fold onto z > 0.
        auto g = [&](double z) {
            return k.density(z) * (f.value(x + eps * z) + f.value(x - eps * z) - 2.0 * fx);
        };
        if (tail > 0.0 && !std::isfinite(f.sup)) {
            // Unbounded f: estimate the dropped part on [t, 4t].
            const auto q = numerics::integrate_gk(g, t, 4.0 * t, 1e-3 * tol.quad, 1e-300, 4000);
            if (std::abs(q.value) > tol.quad)
                throw DomainError("kernel truncation error " + std::to_string(q.value) +
                                  " exceeds the quadrature tolerance");
        }
        const auto q = numerics::integrate_gk(g, 0.0, t, 1e-3 * tol.quad, 0.0, 4000);
        if (!q.converged) throw IntegrationError("focused convolution did not converge", x, 0.0);
        out.push_back(q.value);
    }
    return out;
}

struct FocusingReport {
    std::vector<double> eps;
    /// sup_x |(J_eps * f - f)/eps^2 - (J2/2) f''|.
    std::vector<double> errors;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double max_fit_residual = 0.0;
    /// All errors are below the quadrature floor: the expansion is exact for f.
    bool exact = false;
};

inline FocusingReport focusing_order(const Kernel& k, const SmoothFunction& f,
                                     const std::vector<double>& eps_list, const ToleranceSet& tol,
                                     const std::vector<double>& x_grid = linspace(-4.0, 4.0, 161)) {
    if (!k.finite_fourth_moment())
        throw DomainError("kernel " + k.name +
                          " has an infinite fourth moment; the eps^2 remainder is not controlled");
    if (eps_list.size() < 4) throw DomainError("focusing_order needs at least 4 values of eps");
    const double ratio = eps_list[1] / eps_list[0];
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] > 0.0) ||
            std::abs(eps_list[i] / eps_list[i - 1] - ratio) > 1e-9 * ratio)
            throw DomainError("eps values must form a geometric sequence");
    FocusingReport out;
    out.eps = eps_list;
    for (double e : eps_list) {
        const auto d = convolve_focused(k, e, f, x_grid, tol);
        double worst = 0.0;
        for (std::size_t i = 0; i < x_grid.size(); ++i)
            worst = std::max(worst, std::abs(d[i] / (e * e) -
                                             0.5 * k.second_moment * f.second_derivative(x_grid[i])));
        out.errors.push_back(worst);
    }
    // Quadrature noise divided by eps^2.
    const double floor = 1e3 * tol.quad;
    out.exact = true;
    for (double e : out.errors)
        if (e > floor) out.exact = false;
    if (out.exact) return out;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        lx.push_back(std::log(eps_list[i]));
        ly.push_back(std::log(out.errors[i]));
    }
    const auto fit = numerics::fit_line(lx, ly);
    out.slope = fit.slope;
    out.max_fit_residual = fit.max_residual;
    if (fit.max_residual > 0.1)
        throw EstimationError("focusing error is not a power of eps", fit.residuals);
    return out;
}

}  // namespace degen_kpp
