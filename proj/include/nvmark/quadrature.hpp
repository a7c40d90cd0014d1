#pragma once

// Small one-dimensional quadrature toolkit shared by the rate and phase-space code.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace nvm::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
inline Rule gauss_legendre(int n)
{
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        // recompute derivative at the converged node
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        dp = n * (z * p1 - p2) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.nodes[i] = -z;
        r.nodes[n - 1 - i] = z;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

/// Composite Simpson weights for n (even) uniform intervals of width h.
template <class T>
T simpson(std::span<const T> y, double h)
{
    const std::size_t n = y.size() - 1;
    if (y.size() < 3 || n % 2 != 0) throw std::invalid_argument("simpson: need an even number of intervals");
    T odd{}, even{};
    for (std::size_t k = 1; k < n; k += 2) odd += y[k];
    for (std::size_t k = 2; k < n; k += 2) even += y[k];
    return (h / 3.0) * (y[0] + y[n] + 4.0 * odd + 2.0 * even);
}

/// Running integral of uniformly sampled data, fourth order at every node.
/// Interior intervals use the cubic through the four surrounding samples,
/// the first and last interval a one-sided cubic. Needs at least 4 samples.
template <class T>
std::vector<T> cumulative(std::span<const T> g, double h)
{
    const std::size_t n = g.size() - 1;
    if (g.size() < 4) throw std::invalid_argument("cumulative: need at least 4 samples");
    std::vector<T> out(n + 1);
    out[0] = T{};
    const double c = h / 24.0;
    for (std::size_t k = 0; k < n; ++k) {
        T inc;
        if (k == 0)
            inc = c * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]);
        else if (k == n - 1)
            inc = c * (9.0 * g[n] + 19.0 * g[n - 1] - 5.0 * g[n - 2] + g[n - 3]);
        else
            inc = c * (-g[k - 1] + 13.0 * g[k] + 13.0 * g[k + 1] - g[k + 2]);
        out[k + 1] = out[k] + inc;
    }
    return out;
}

} // namespace nvm::quad
