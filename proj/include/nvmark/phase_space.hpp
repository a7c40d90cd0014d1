#pragma once

// Generalized Wigner function on hybrid qubit / bosonic-mode phase spaces.
//
// Kernels:
//   qubit  D_q(theta, phi) = U (I - sqrt(3) sigma_z) U^dag / 2,  U = e^{i sigma_z phi} e^{i sigma_y theta}
//   mode   D_p(beta)       = D(beta) Pi D(beta)^dag = D(2 beta) Pi
// Measures:
//   qubit  |sin 2theta| dtheta dphi / (2 pi) on [0, pi] x [0, 2 pi)  (total 2)
//   mode   (2 / pi) d^2 beta                                           (total: Gaussian tails)
// Both resolve the identity, int D dOmega = I, which is what makes int W dOmega = 1.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <sstream>
#include <variant>
#include <vector>

#include "nvmark/error.hpp"
#include "nvmark/hilbert.hpp"
#include "nvmark/quadrature.hpp"

namespace nvm {

/// Angular axes of one qubit. theta nodes are Gauss-Legendre in cos(2 theta),
/// phi nodes are periodic trapezoid.
struct QubitAxes {
    int n_theta = 32;
    int n_phi = 16;
    bool operator==(const QubitAxes&) const = default;
};

/// Square Cartesian grid Re beta, Im beta in [-radius, radius], n_beta points per axis.
struct ModeAxes {
    int n_beta = 151;
    double radius = 7.5;
    bool operator==(const ModeAxes&) const = default;
};

using AxisSpec = std::variant<QubitAxes, ModeAxes>;

class PhaseSpaceGrid {
public:
    struct Factor {
        AxisSpec spec;
        std::vector<std::array<double, 2>> coords; ///< (theta, phi) or (Re beta, Im beta)
        std::vector<double> weights;
        bool is_qubit() const { return std::holds_alternative<QubitAxes>(spec); }
    };

    PhaseSpaceGrid() = default;

    explicit PhaseSpaceGrid(const std::vector<AxisSpec>& specs)
    {
        if (specs.empty()) throw ConfigError("PhaseSpaceGrid: at least one factor required");
        for (const auto& s : specs) factors_.push_back(make_factor(s));
    }

    const std::vector<Factor>& factors() const { return factors_; }
    const Factor& factor(std::size_t i) const { return factors_.at(i); }
    std::size_t factor_count() const { return factors_.size(); }

    std::size_t size() const
    {
        std::size_t n = 1;
        for (const auto& f : factors_) n *= f.weights.size();
        return n;
    }

    /// Composite index -> per-factor indices (row-major, first factor slowest).
    std::vector<std::size_t> split(std::size_t k) const
    {
        std::vector<std::size_t> idx(factors_.size());
        for (std::size_t i = factors_.size(); i-- > 0;) {
            const std::size_t n = factors_[i].weights.size();
            idx[i] = k % n;
            k /= n;
        }
        return idx;
    }

    double weight(std::size_t k) const
    {
        const auto idx = split(k);
        double w = 1.0;
        for (std::size_t i = 0; i < factors_.size(); ++i) w *= factors_[i].weights[idx[i]];
        return w;
    }

    /// Calls fn(k, w_k) for every node in composite order.
    template <class Fn>
    void for_each_weight(Fn&& fn) const
    {
        if (factors_.size() == 1) {
            const auto& w = factors_[0].weights;
            for (std::size_t k = 0; k < w.size(); ++k) fn(k, w[k]);
            return;
        }
        std::vector<double> partial{1.0};
        for (const auto& f : factors_) {
            std::vector<double> next;
            next.reserve(partial.size() * f.weights.size());
            if (&f == &factors_.back()) {
                std::size_t k = 0;
                for (double p : partial)
                    for (double w : f.weights) fn(k++, p * w);
                return;
            }
            for (double p : partial)
                for (double w : f.weights) next.push_back(p * w);
            partial = std::move(next);
        }
    }

    double total_weight() const
    {
        double w = 1.0;
        for (const auto& f : factors_) {
            double s = 0.0;
            for (double x : f.weights) s += x;
            w *= s;
        }
        return w;
    }

    /// Checks that the factors line up with the subsystems of `spec`.
    void check_matches(const HilbertSpec& spec) const
    {
        if (spec.size() != factors_.size()) throw ConfigError("phase-space grid does not match Hilbert space layout");
        for (std::size_t i = 0; i < factors_.size(); ++i)
            if ((spec[i].kind == SubsystemKind::qubit) != factors_[i].is_qubit())
                throw ConfigError("phase-space grid factor " + std::to_string(i) + " does not match subsystem kind");
    }

private:
    static Factor make_factor(const AxisSpec& s)
    {
        Factor f{s, {}, {}};
        if (const auto* q = std::get_if<QubitAxes>(&s)) {
            if (q->n_theta < 1 || q->n_phi < 1) throw ConfigError("qubit axes need n_theta >= 1 and n_phi >= 1");
            // z = cos(2 theta) with theta in [0, pi/2]; the [pi/2, pi] half of the
            // |sin 2theta| measure repeats it under phi -> phi + pi/2 and is folded in.
            const auto gl = quad::gauss_legendre(q->n_theta);
            for (int i = 0; i < q->n_theta; ++i) {
                const double theta = 0.5 * std::acos(gl.nodes[i]);
                for (int j = 0; j < q->n_phi; ++j) {
                    const double phi = 2.0 * std::numbers::pi * j / q->n_phi;
                    f.coords.push_back({theta, phi});
                    f.weights.push_back(gl.weights[i] / q->n_phi);
                }
            }
        } else {
            const auto& m = std::get<ModeAxes>(s);
            if (m.n_beta < 2 || !(m.radius > 0)) throw ConfigError("mode axes need n_beta >= 2 and radius > 0");
            const double h = 2.0 * m.radius / (m.n_beta - 1);
            auto edge = [&](int i) { return (i == 0 || i == m.n_beta - 1) ? 0.5 : 1.0; };
            for (int i = 0; i < m.n_beta; ++i)
                for (int j = 0; j < m.n_beta; ++j) {
                    f.coords.push_back({-m.radius + i * h, -m.radius + j * h});
                    f.weights.push_back(2.0 / std::numbers::pi * h * h * edge(i) * edge(j));
                }
        }
        return f;
    }

    std::vector<Factor> factors_;
};

inline Operator qubit_kernel(double theta, double phi)
{
    Operator rz(2, 2), ry(2, 2);
    rz << std::exp(Complex(0, phi)), 0.0, 0.0, std::exp(Complex(0, -phi));
    ry << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    const Operator u = rz * ry;
    const Operator parity_q = identity(2) - std::sqrt(3.0) * pauli(Axis::z);
    return 0.5 * u * parity_q * u.adjoint();
}

/// Exact matrix elements <m|D(alpha)|n>, m, n < n_c, of the untruncated
/// displacement operator (Laguerre form).
inline Operator displacement_elements(Complex alpha, int n_c)
{
    if (n_c < 1) throw std::invalid_argument("displacement_elements: n_c must be >= 1");
    Operator d = Operator::Zero(n_c, n_c);
    const double x = std::norm(alpha);
    if (x == 0.0) return Operator::Identity(n_c, n_c);
    const double log_abs = 0.5 * std::log(x);
    const double arg = std::arg(alpha);
    std::vector<double> lag(n_c);
    for (int k = 0; k < n_c; ++k) {
        // L_n^{(k)}(x) for n = 0 .. n_c-1-k
        const int n_max = n_c - 1 - k;
        lag[0] = 1.0;
        if (n_max >= 1) lag[1] = 1.0 + k - x;
        for (int j = 1; j < n_max; ++j)
            lag[j + 1] = ((2.0 * j + 1.0 + k - x) * lag[j] - (j + k) * lag[j - 1]) / (j + 1.0);
        for (int n = 0; n <= n_max; ++n) {
            const int m = n + k;
            const double log_mag = 0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)) + k * log_abs - 0.5 * x;
            const Complex lower = std::exp(Complex(log_mag, k * arg)) * lag[n];
            d(m, n) = lower;
            // <n|D(alpha)|m> = (-1)^k conj(<m|D(alpha)|n>)
            if (k > 0) d(n, m) = ((k % 2 == 0) ? 1.0 : -1.0) * std::conj(lower);
        }
    }
    return d;
}

/// D(beta) Pi D(beta)^dag projected on the first n_c Fock levels.
inline Operator photonic_kernel(Complex beta, int n_c)
{
    if (n_c < 2) throw std::invalid_argument("photonic_kernel: n_c must be >= 2");
    const Operator d = displacement_elements(2.0 * beta, n_c);
    Operator k(n_c, n_c);
    for (int n = 0; n < n_c; ++n) k.col(n) = ((n % 2 == 0) ? 1.0 : -1.0) * d.col(n);
    // exact Hermitian form: keep the lower triangle, mirror it
    for (int m = 0; m < n_c; ++m) {
        k(m, m) = k(m, m).real();
        for (int n = m + 1; n < n_c; ++n) k(m, n) = std::conj(k(n, m));
    }
    return k;
}

/// Per-factor kernel tables for a grid. Composite kernels are tensor products
/// of the factor kernels and are formed on demand.
class KernelCache {
public:
    KernelCache(HilbertSpec spec, PhaseSpaceGrid grid, std::size_t memory_budget)
        : spec_(std::move(spec)), grid_(std::move(grid))
    {
        grid_.check_matches(spec_);
        const std::size_t need = required_bytes(spec_, grid_);
        if (need > memory_budget) {
            std::ostringstream msg;
            msg << "kernel cache needs " << need << " bytes, budget is " << memory_budget;
            throw BudgetError(msg.str());
        }
        for (std::size_t i = 0; i < grid_.factor_count(); ++i) {
            const auto& f = grid_.factor(i);
            std::vector<Operator> ks;
            ks.reserve(f.coords.size());
            for (const auto& c : f.coords)
                ks.push_back(f.is_qubit() ? qubit_kernel(c[0], c[1]) : photonic_kernel({c[0], c[1]}, spec_[i].dim));
            tables_.push_back(std::move(ks));
        }
    }

    static std::size_t required_bytes(const HilbertSpec& spec, const PhaseSpaceGrid& grid)
    {
        std::size_t b = 0;
        for (std::size_t i = 0; i < grid.factor_count(); ++i) {
            const auto d = static_cast<std::size_t>(spec[i].dim);
            b += grid.factor(i).weights.size() * d * d * sizeof(Complex);
        }
        return b;
    }

    const HilbertSpec& spec() const { return spec_; }
    const PhaseSpaceGrid& grid() const { return grid_; }
    std::size_t size() const { return grid_.size(); }
    double weight(std::size_t k) const { return grid_.weight(k); }
    const std::vector<Operator>& factor_kernels(std::size_t i) const { return tables_.at(i); }

    /// Composite kernel at node k.
    Operator kernel(std::size_t k) const
    {
        const auto idx = grid_.split(k);
        Operator out = Operator::Identity(1, 1);
        for (std::size_t i = 0; i < tables_.size(); ++i) out = tensor(out, tables_[i][idx[i]]);
        return out;
    }

private:
    HilbertSpec spec_;
    PhaseSpaceGrid grid_;
    std::vector<std::vector<Operator>> tables_;
};

inline constexpr std::size_t DEFAULT_CACHE_BUDGET = std::size_t{2} << 30;

inline KernelCache build_cache(const HilbertSpec& spec, const PhaseSpaceGrid& grid,
                               std::size_t memory_budget = DEFAULT_CACHE_BUDGET)
{
    return KernelCache(spec, grid, memory_budget);
}

struct WignerField {
    PhaseSpaceGrid grid;
    std::vector<double> values;
    double max_imag = 0.0; ///< largest discarded imaginary part

    /// sum_k w_k W_k
    double normalization() const
    {
        double s = 0.0;
        grid.for_each_weight([&](std::size_t k, double w) { s += w * values[k]; });
        return s;
    }
};

inline constexpr double WIGNER_IMAG_LIMIT = 1e-8;

/// W_k = Re Tr(rho D(Omega_k)) at every grid node.
inline WignerField wigner_evaluate(const DensityMatrix& rho, const KernelCache& cache)
{
    const auto& spec = cache.spec();
    if (rho.dim() != spec.total_dim()) throw ConfigError("wigner_evaluate: state dimension does not match kernel cache");
    const Operator& r = rho.op();
    WignerField field{cache.grid(), {}, 0.0};
    field.values.resize(cache.size());

    // Tr(X K) for X, K of equal shape
    auto trace_prod = [](const auto& x, const Operator& k) { return (x.cwiseProduct(k.transpose())).sum(); };

    if (spec.size() == 1) {
        const auto& ks = cache.factor_kernels(0);
        for (std::size_t a = 0; a < ks.size(); ++a) {
            const Complex w = trace_prod(r, ks[a]);
            field.values[a] = w.real();
            field.max_imag = std::max(field.max_imag, std::abs(w.imag()));
        }
    } else if (spec.size() == 2) {
        const int da = spec[0].dim, db = spec[1].dim;
        const auto& ka = cache.factor_kernels(0);
        const auto& kb = cache.factor_kernels(1);
        const std::size_t nb = kb.size();
        // contract the second factor first: R_b = Tr_B[rho (I x K_b)]
        Operator reduced(da, da);
        for (std::size_t b = 0; b < nb; ++b) {
            for (int i = 0; i < da; ++i)
                for (int j = 0; j < da; ++j) reduced(i, j) = trace_prod(r.block(i * db, j * db, db, db), kb[b]);
            for (std::size_t a = 0; a < ka.size(); ++a) {
                const Complex w = trace_prod(reduced, ka[a]);
                field.values[a * nb + b] = w.real();
                field.max_imag = std::max(field.max_imag, std::abs(w.imag()));
            }
        }
    } else {
        throw ConfigError("wigner_evaluate: at most two subsystems are supported");
    }
    if (!(field.max_imag < WIGNER_IMAG_LIMIT)) {
        std::ostringstream msg;
        msg << "wigner_evaluate: imaginary residue " << field.max_imag << " exceeds " << WIGNER_IMAG_LIMIT;
        throw Error(msg.str());
    }
    return field;
}

/// Marginal over the qubit: W_p(beta) = sum_a w_a W(a, beta).
inline WignerField reduce_photonic(const WignerField& field)
{
    const auto& g = field.grid;
    if (g.factor_count() != 2 || !g.factor(0).is_qubit() || g.factor(1).is_qubit())
        throw ConfigError("reduce_photonic: field must have one qubit factor followed by one mode factor");
    const auto& qa = g.factor(0);
    const std::size_t nb = g.factor(1).weights.size();
    WignerField out{PhaseSpaceGrid({g.factor(1).spec}), std::vector<double>(nb, 0.0), field.max_imag};
    for (std::size_t a = 0; a < qa.weights.size(); ++a)
        for (std::size_t b = 0; b < nb; ++b) out.values[b] += qa.weights[a] * field.values[a * nb + b];
    return out;
}

} // namespace nvm
