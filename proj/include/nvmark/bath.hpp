#pragma once

// Bath spectral densities, their correlation functions, and second/fourth order
// time-convolutionless damping rates.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <span>
#include <variant>
#include <vector>

#include "nvmark/error.hpp"
#include "nvmark/hilbert.hpp"
#include "nvmark/quadrature.hpp"

namespace nvm {

/// J(w) = delta0 lambda^2 / (pi ((w0 - detuning - w)^2 + lambda^2)).
struct Lorentzian {
    double delta0;
    double lambda;
    double detuning;
    double omega0;
    bool operator==(const Lorentzian&) const = default;
};

/// J(w) = 2 pi eta w (w / omega_c)^(s-1) exp(-w / omega_c).
struct Ohmic {
    double eta;
    double s;
    double omega_c;
    double omega0;
    bool operator==(const Ohmic&) const = default;
};

/// Test stub: f(tau) = value for every tau.
struct ConstantCorrelation {
    Complex value;
    bool operator==(const ConstantCorrelation&) const = default;
};

using SpectralDensity = std::variant<Lorentzian, Ohmic, ConstantCorrelation>;

inline void validate(const SpectralDensity& j)
{
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("spectral density: ") + what);
    };
    std::visit(
        [&](const auto& b) {
            using B = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<B, Lorentzian>) {
                require(b.delta0 > 0, "delta0 must be > 0");
                require(b.lambda > 0, "lambda must be > 0");
                require(b.omega0 > 0, "omega0 must be > 0");
                require(std::isfinite(b.detuning), "detuning must be finite");
            } else if constexpr (std::is_same_v<B, Ohmic>) {
                require(b.eta > 0, "eta must be > 0");
                require(b.s > 0, "s must be > 0");
                require(b.omega_c > 0, "omega_c must be > 0");
                require(b.omega0 > 0, "omega0 must be > 0");
            } else {
                require(std::isfinite(b.value.real()) && std::isfinite(b.value.imag()), "value must be finite");
            }
        },
        j);
}

/// Spectral density J(omega) itself (zero for the constant stub).
inline double spectral_value(const SpectralDensity& j, double omega)
{
    return std::visit(
        [&](const auto& b) -> double {
            using B = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<B, Lorentzian>) {
                const double d = b.omega0 - b.detuning - omega;
                return b.delta0 * b.lambda * b.lambda / (std::numbers::pi * (d * d + b.lambda * b.lambda));
            } else if constexpr (std::is_same_v<B, Ohmic>) {
                if (omega <= 0) return 0.0;
                return 2.0 * std::numbers::pi * b.eta * omega * std::pow(omega / b.omega_c, b.s - 1.0) *
                       std::exp(-omega / b.omega_c);
            } else {
                return 0.0;
            }
        },
        j);
}

/// Bath correlation function f(tau).
inline Complex correlation(const SpectralDensity& j, double tau)
{
    return std::visit(
        [&](const auto& b) -> Complex {
            using B = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<B, Lorentzian>) {
                return b.delta0 * std::exp(Complex(-b.lambda * std::abs(tau), -tau * b.detuning));
            } else if constexpr (std::is_same_v<B, Ohmic>) {
                // principal branch; Re of the base is 1/omega_c > 0
                const Complex base(1.0 / b.omega_c, tau);
                const double pref = 2.0 * b.eta * std::numbers::pi * std::tgamma(b.s + 1.0) / std::pow(b.omega_c, b.s - 1.0);
                return pref * std::exp(Complex(0.0, tau * b.omega0)) * std::pow(base, -(1.0 + b.s));
            } else {
                return b.value;
            }
        },
        j);
}

struct TclCoefficients {
    double c2 = 1.0;
    double c4 = 1.0;
    bool operator==(const TclCoefficients&) const = default;
};

/// Refinement policy for the rate integrals. Intervals double from
/// `initial_intervals` until the change is within `rel_tol` of the integrand's
/// L1 mass, or `max_intervals` is reached.
struct QuadratureConfig {
    int initial_intervals = 64;
    int max_intervals = 16384;
    double rel_tol = 1e-8;
    /// Schedules: fine sub-steps per schedule interval start at 2 and double up to this.
    int max_substeps = 64;
};

struct RateEstimate {
    double value = 0.0;
    double error = 0.0; ///< Richardson estimate |I_h - I_{h/2}| / 15
    int intervals = 0;
};

namespace detail {

struct RateTable {
    std::vector<double> g2, g4;       // rates at output nodes
    std::vector<double> mass2, mass4; // matching integrals of |integrand|
};

// Rates on a uniform fine grid of step h with n_fine intervals, reported at
// every `stride`-th node (stride even). Uses
//   gamma2(t) = 2 Re F(t),
//   gamma4(t) = 2 Re[ int_0^t f(t-s)(G(t)-G(s)-G(t-s)) ds + int_0^t f(v)G(v) dv ],
// with F' = f, G' = F, which is the ordered triple integral after the
// innermost integrations are done in closed form.
inline RateTable tcl_rates(const SpectralDensity& j, double h, int n_fine, int stride, bool want2, bool want4)
{
    if (n_fine < 4 || stride < 2 || stride % 2 != 0 || n_fine % stride != 0)
        throw QuadratureError("tcl_rates: invalid sub-grid");
    const std::size_t n = static_cast<std::size_t>(n_fine);
    std::vector<Complex> f(n + 1);
    std::vector<double> fabs(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        f[k] = correlation(j, static_cast<double>(k) * h);
        fabs[k] = std::abs(f[k]);
    }
    const auto F = quad::cumulative<Complex>(f, h);
    const auto Fabs = quad::cumulative<double>(fabs, h);

    const std::size_t n_out = n / stride + 1;
    RateTable out;
    out.g2.assign(n_out, 0.0);
    out.g4.assign(n_out, 0.0);
    out.mass2.assign(n_out, 0.0);
    out.mass4.assign(n_out, 0.0);
    if (want2)
        for (std::size_t k = 0; k < n_out; ++k) {
            out.g2[k] = 2.0 * F[k * stride].real();
            out.mass2[k] = 2.0 * Fabs[k * stride];
        }
    if (!want4) return out;

    const auto G = quad::cumulative<Complex>(F, h);
    std::vector<Complex> fg(n + 1);
    for (std::size_t k = 0; k <= n; ++k) fg[k] = f[k] * G[k];

    Complex b_run = 0.0;
    double b_abs = 0.0;
    std::size_t m_prev = 0;
    for (std::size_t k = 1; k < n_out; ++k) {
        const std::size_t m = k * stride;
        for (std::size_t q = m_prev; q < m; q += 2) {
            b_run += (h / 3.0) * (fg[q] + 4.0 * fg[q + 1] + fg[q + 2]);
            b_abs += (h / 3.0) * (std::abs(fg[q]) + 4.0 * std::abs(fg[q + 1]) + std::abs(fg[q + 2]));
        }
        m_prev = m;
        Complex a_sum = 0.0;
        double a_abs = 0.0;
        const Complex gm = G[m];
        for (std::size_t q = 0; q <= m; ++q) {
            const double w = (q == 0 || q == m) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
            const Complex term = f[m - q] * (gm - G[q] - G[m - q]);
            a_sum += w * term;
            a_abs += w * std::abs(term);
        }
        a_sum *= h / 3.0;
        a_abs *= h / 3.0;
        out.g4[k] = 2.0 * (a_sum + b_run).real();
        out.mass4[k] = 2.0 * (a_abs + b_abs);
    }
    return out;
}

inline RateEstimate point_rate(const SpectralDensity& j, double t, const QuadratureConfig& q, bool fourth)
{
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("rate: t must be finite and >= 0");
    if (t == 0.0) return {0.0, 0.0, 0};
    int n = std::max(4, q.initial_intervals + q.initial_intervals % 2);
    auto eval = [&](int intervals) {
        const auto tab = tcl_rates(j, t / intervals, intervals, intervals, !fourth, fourth);
        return fourth ? std::pair{tab.g4[1], tab.mass4[1]} : std::pair{tab.g2[1], tab.mass2[1]};
    };
    auto [prev, mass_prev] = eval(n);
    (void)mass_prev;
    while (2 * n <= q.max_intervals) {
        n *= 2;
        const auto [cur, mass] = eval(n);
        const double diff = std::abs(cur - prev);
        if (diff <= q.rel_tol * mass) return {cur, diff / 15.0, n};
        prev = cur;
    }
    std::ostringstream msg;
    msg << (fourth ? "gamma4" : "gamma2") << ": no convergence at t=" << t << " with " << n << " intervals";
    throw QuadratureError(msg.str());
}

} // namespace detail

/// gamma2(t) = Re[2 int_0^t f(t - t1) dt1], with error estimate.
inline RateEstimate gamma2_estimate(const SpectralDensity& j, double t, const QuadratureConfig& q = {})
{
    return detail::point_rate(j, t, q, false);
}

/// Fourth-order rate: Re of twice the ordered triple integral of
/// f(t-t2) f(t1-t3) + f(t-t3) f(t1-t2) over 0 <= t3 <= t2 <= t1 <= t.
inline RateEstimate gamma4_estimate(const SpectralDensity& j, double t, const QuadratureConfig& q = {})
{
    return detail::point_rate(j, t, q, true);
}

inline double gamma2(const SpectralDensity& j, double t, const QuadratureConfig& q = {})
{
    return gamma2_estimate(j, t, q).value;
}

inline double gamma4(const SpectralDensity& j, double t, const QuadratureConfig& q = {})
{
    return gamma4_estimate(j, t, q).value;
}

/// Sampled damping rate gamma(t) on a uniform grid starting at 0.
struct DampingSchedule {
    std::vector<double> times;
    std::vector<double> gamma;
    std::vector<double> quad_error;
    std::optional<SpectralDensity> source; ///< empty for stub schedules
    TclCoefficients coeffs{0.0, 0.0};

    std::size_t size() const { return times.size(); }
    double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    double t_max() const { return times.empty() ? 0.0 : times.back(); }

    /// Linear interpolation between nodes.
    double at(double t) const
    {
        if (times.empty()) throw std::out_of_range("DampingSchedule::at: empty schedule");
        const double tm = t_max();
        const double slack = 1e-9 * std::max(1.0, tm);
        if (t < -slack || t > tm + slack) {
            std::ostringstream msg;
            msg << "DampingSchedule::at: t=" << t << " outside [0, " << tm << "]";
            throw std::out_of_range(msg.str());
        }
        if (times.size() == 1) return gamma[0];
        const double h = step();
        const double x = std::clamp(t, 0.0, tm) / h;
        auto k = static_cast<std::size_t>(x);
        if (k >= times.size() - 1) k = times.size() - 2;
        const double frac = x - static_cast<double>(k);
        if (frac == 0.0) return gamma[k];
        return gamma[k] + frac * (gamma[k + 1] - gamma[k]);
    }

    double min_value() const { return *std::min_element(gamma.begin(), gamma.end()); }
    double max_value() const { return *std::max_element(gamma.begin(), gamma.end()); }
    bool changes_sign() const { return min_value() < 0.0 && max_value() > 0.0; }
};

/// Uniform grid 0, step, ..., n*step with n = round(t_max / step).
inline std::vector<double> uniform_grid(double t_max, double step)
{
    if (!(step > 0) || !(t_max >= 0)) throw std::invalid_argument("uniform_grid: need step > 0 and t_max >= 0");
    const auto n = static_cast<long>(std::llround(t_max / step));
    if (std::abs(n * step - t_max) > 1e-9 * std::max(1.0, t_max))
        throw std::invalid_argument("uniform_grid: t_max must be a multiple of step");
    std::vector<double> g(static_cast<std::size_t>(n) + 1);
    for (long k = 0; k <= n; ++k) g[static_cast<std::size_t>(k)] = static_cast<double>(k) * step;
    return g;
}

/// Constant-rate stub schedule (testing and closed-form comparisons).
inline DampingSchedule constant_schedule(double rate, double t_max, double step)
{
    DampingSchedule s;
    s.times = uniform_grid(t_max, step);
    s.gamma.assign(s.times.size(), rate);
    s.quad_error.assign(s.times.size(), 0.0);
    return s;
}

/// gamma(t_k) = c2 gamma2(t_k) + c4 gamma4(t_k) at every node of a uniform grid.
/// The correlation function is tabulated once per refinement level on a sub-grid
/// shared by all nodes.
inline DampingSchedule build_schedule(const SpectralDensity& j, TclCoefficients coeffs, std::span<const double> t_grid,
                                      const QuadratureConfig& q = {})
{
    validate(j);
    if (coeffs.c2 < 0 || coeffs.c4 < 0) throw ConfigError("TCL coefficients must be non-negative");
    if (t_grid.empty() || t_grid[0] != 0.0) throw ConfigError("build_schedule: time grid must start at 0");
    DampingSchedule s;
    s.times.assign(t_grid.begin(), t_grid.end());
    s.source = j;
    s.coeffs = coeffs;
    const std::size_t n_nodes = t_grid.size();
    s.gamma.assign(n_nodes, 0.0);
    s.quad_error.assign(n_nodes, 0.0);
    if (n_nodes == 1) return s;
    const double step = t_grid[1] - t_grid[0];
    if (!(step > 0)) throw ConfigError("build_schedule: time grid must be increasing");
    for (std::size_t k = 1; k < n_nodes; ++k)
        if (std::abs(t_grid[k] - static_cast<double>(k) * step) > 1e-9 * std::max(1.0, t_grid[k]))
            throw ConfigError("build_schedule: time grid must be uniform");
    const bool want2 = coeffs.c2 != 0.0;
    const bool want4 = coeffs.c4 != 0.0;
    if (!want2 && !want4) return s;

    const int intervals = static_cast<int>(n_nodes - 1);
    auto level = [&](int sub) {
        const auto tab = detail::tcl_rates(j, step / sub, intervals * sub, sub, want2, want4);
        std::vector<double> val(n_nodes), mass(n_nodes);
        for (std::size_t k = 0; k < n_nodes; ++k) {
            val[k] = coeffs.c2 * tab.g2[k] + coeffs.c4 * tab.g4[k];
            mass[k] = coeffs.c2 * tab.mass2[k] + coeffs.c4 * tab.mass4[k];
        }
        return std::pair{val, mass};
    };
    int sub = 2;
    while (intervals * sub < 4) sub *= 2;
    auto [prev, mass_prev] = level(sub);
    (void)mass_prev;
    while (2 * sub <= q.max_substeps) {
        sub *= 2;
        auto [cur, mass] = level(sub);
        bool ok = true;
        for (std::size_t k = 0; k < n_nodes; ++k) {
            const double diff = std::abs(cur[k] - prev[k]);
            s.quad_error[k] = diff / 15.0;
            if (diff > q.rel_tol * mass[k]) ok = false;
        }
        s.gamma = cur;
        if (ok) {
            s.gamma[0] = 0.0;
            s.quad_error[0] = 0.0;
            return s;
        }
        prev = std::move(cur);
    }
    throw QuadratureError("build_schedule: rates did not converge with " + std::to_string(sub) +
                          " sub-steps per interval");
}

} // namespace nvm
