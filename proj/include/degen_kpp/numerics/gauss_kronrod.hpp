#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace degen_kpp::numerics {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
    bool converged = true;
};

namespace detail {

struct Gk15 {
    double value;
    double error;
};

template <class F>
Gk15 gk15(F& f, double a, double b) {
    static constexpr double xgk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr double wgk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double fsum = f(center - dx) + f(center + dx);
        kronrod += wgk[j] * fsum;
        if (j % 2 == 1) gauss += wg[j / 2] * fsum;
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive 7-15 Gauss-Kronrod quadrature; bisects the interval with the
/// largest error estimate until the total error is within max(abs_tol, rel_tol*|I|).
template <class F>
QuadResult integrate_gk(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                        int max_intervals = 2000) {
    QuadResult out;
    if (a == b) return out;
    struct Piece {
        double a, b, value, error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    std::priority_queue<Piece> heap;
    auto first = detail::gk15(f, a, b);
    heap.push({a, b, first.value, first.error});
    double total = first.value;
    double total_err = first.error;
    int count = 1;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (count >= max_intervals) {
            out.converged = false;
            break;
        }
        Piece p = heap.top();
        // Intervals below the resolution of double cannot be split further.
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > std::min(p.a, p.b) && mid < std::max(p.a, p.b))) {
            out.converged = false;
            break;
        }
        heap.pop();
        auto left = detail::gk15(f, p.a, mid);
        auto right = detail::gk15(f, mid, p.b);
        total += left.value + right.value - p.value;
        total_err += left.error + right.error - p.error;
        heap.push({p.a, mid, left.value, left.error});
        heap.push({mid, p.b, right.value, right.error});
        ++count;
    }
    // Re-sum to remove drift from the incremental updates.
    double value = 0.0, err = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.value = value;
    out.error = err;
    out.intervals = count;
    return out;
}

}  // namespace degen_kpp::numerics
