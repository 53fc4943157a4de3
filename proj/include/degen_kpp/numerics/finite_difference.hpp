#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace degen_kpp::numerics {

/// Fornberg weights: w[k][j] approximates the k-th derivative at x0 from the
/// values at nodes[j], for k = 0..order. Nodes may be unevenly spaced.
inline std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& nodes,
                                                         int order) {
    const std::size_t n = nodes.size();
    std::vector<std::vector<double>> w(order + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    w[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(int(i), order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    w[k][i] = c1 * (k * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) w[k][j] = (c4 * w[k][j] - k * w[k - 1][j]) / c3;
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    return w;
}

/// First and second derivative of sampled data at index i from a five-point
/// stencil, shifted inward at the ends.
struct Derivatives {
    double d1;
    double d2;
};

inline Derivatives stencil_derivatives(const std::vector<double>& x, const std::vector<double>& f,
                                       std::size_t i) {
    const std::size_t n = x.size();
    const std::size_t width = std::min<std::size_t>(5, n);
    std::size_t lo = i >= 2 ? i - 2 : 0;
    if (lo + width > n) lo = n - width;
    std::vector<double> nodes(x.begin() + lo, x.begin() + lo + width);
    const auto w = fornberg_weights(x[i], nodes, 2);
    Derivatives d{0.0, 0.0};
    for (std::size_t j = 0; j < width; ++j) {
        d.d1 += w[1][j] * f[lo + j];
        d.d2 += w[2][j] * f[lo + j];
    }
    return d;
}

}  // namespace degen_kpp::numerics
