#pragma once

// Dense operator algebra on truncated composite Hilbert spaces.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "nvmark/error.hpp"

namespace nvm {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr Complex I_UNIT{0.0, 1.0};

/// Population allowed in the highest retained Fock level of any constructed state.
inline constexpr double FOCK_LEAKAGE_LIMIT = 1e-8;

enum class Axis { x, y, z };

enum class SubsystemKind { qubit, mode };

struct Subsystem {
    SubsystemKind kind;
    int dim;

    static Subsystem qubit() { return {SubsystemKind::qubit, 2}; }
    static Subsystem mode(int n_c) { return {SubsystemKind::mode, n_c}; }

    bool operator==(const Subsystem&) const = default;
};

inline Operator identity(int dim) { return Operator::Identity(dim, dim); }

inline Operator pauli(Axis axis)
{
    Operator s(2, 2);
    switch (axis) {
    case Axis::x: s << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::y: s << 0.0, -I_UNIT, I_UNIT, 0.0; break;
    case Axis::z: s << 1.0, 0.0, 0.0, -1.0; break;
    }
    return s;
}

inline Operator annihilation(int n_c)
{
    if (n_c < 2) throw std::invalid_argument("annihilation: truncation dimension must be >= 2, got " + std::to_string(n_c));
    Operator a = Operator::Zero(n_c, n_c);
    for (int k = 1; k < n_c; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return a;
}

inline Operator creation(int n_c) { return annihilation(n_c).adjoint(); }

inline Operator number(int n_c)
{
    if (n_c < 2) throw std::invalid_argument("number: truncation dimension must be >= 2, got " + std::to_string(n_c));
    Operator n = Operator::Zero(n_c, n_c);
    for (int k = 0; k < n_c; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

/// Bosonic parity diag((-1)^n).
inline Operator parity(int n_c)
{
    Operator p = Operator::Zero(n_c, n_c);
    for (int k = 0; k < n_c; ++k) p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
    return p;
}

inline Operator expm(const Operator& m) { return m.exp(); }

namespace detail {

inline void check_vacuum_leakage(const Operator& u, const char* what)
{
    // two levels, since squeezing only populates every other one
    const auto n_c = u.rows();
    double top = std::norm(u(n_c - 1, 0));
    if (n_c > 2) top += std::norm(u(n_c - 2, 0));
    if (!(top <= FOCK_LEAKAGE_LIMIT)) {
        std::ostringstream msg;
        msg << what << ": population " << top << " in Fock levels " << n_c - 2 << ".." << n_c - 1
            << " exceeds " << FOCK_LEAKAGE_LIMIT << "; increase the truncation dimension";
        throw TruncationError(msg.str());
    }
}

} // namespace detail

/// exp(beta a^dag - beta^* a) on an n_c-level truncation.
inline Operator displacement(Complex beta, int n_c)
{
    const Operator a = annihilation(n_c);
    const Operator gen = beta * a.adjoint() - std::conj(beta) * a;
    Operator d = expm(gen);
    detail::check_vacuum_leakage(d, "displacement");
    return d;
}

/// exp((xi a^dag^2 - xi^* a^2) / 2) on an n_c-level truncation.
inline Operator squeeze(Complex xi, int n_c)
{
    const Operator a = annihilation(n_c);
    const Operator a2 = a * a;
    const Operator gen = 0.5 * (xi * a2.adjoint() - std::conj(xi) * a2);
    Operator s = expm(gen);
    detail::check_vacuum_leakage(s, "squeeze");
    return s;
}

inline Operator tensor(const Operator& a, const Operator& b)
{
    const auto ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
    Operator out(ra * rb, ca * cb);
    for (Eigen::Index i = 0; i < ra; ++i)
        for (Eigen::Index j = 0; j < ca; ++j) out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
    return out;
}

/// Ordered list of subsystems making up a composite space.
class HilbertSpec {
public:
    HilbertSpec() = default;

    explicit HilbertSpec(std::vector<Subsystem> subsystems) : subsystems_(std::move(subsystems))
    {
        if (subsystems_.empty()) throw ConfigError("HilbertSpec: at least one subsystem required");
        for (const auto& s : subsystems_) {
            if (s.dim < 2) throw ConfigError("HilbertSpec: every subsystem dimension must be >= 2");
            if (s.kind == SubsystemKind::qubit && s.dim != 2) throw ConfigError("HilbertSpec: qubit dimension must be 2");
        }
    }

    const std::vector<Subsystem>& subsystems() const { return subsystems_; }
    std::size_t size() const { return subsystems_.size(); }
    const Subsystem& operator[](std::size_t i) const { return subsystems_.at(i); }

    std::vector<int> dims() const
    {
        std::vector<int> d;
        for (const auto& s : subsystems_) d.push_back(s.dim);
        return d;
    }

    int total_dim() const
    {
        int n = 1;
        for (const auto& s : subsystems_) n *= s.dim;
        return n;
    }

    /// Lifts `op` acting on subsystem `target` to the full space (identity elsewhere).
    Operator embed(const Operator& op, std::size_t target) const
    {
        if (target >= subsystems_.size()) throw ConfigError("HilbertSpec::embed: target out of range");
        if (op.rows() != subsystems_[target].dim)
            throw ConfigError("HilbertSpec::embed: operator dimension does not match target subsystem");
        Operator out = Operator::Identity(1, 1);
        for (std::size_t i = 0; i < subsystems_.size(); ++i)
            out = tensor(out, i == target ? op : identity(subsystems_[i].dim));
        return out;
    }

    bool operator==(const HilbertSpec&) const = default;

private:
    std::vector<Subsystem> subsystems_;
};

/// Traces out subsystem `traced` of an operator on the space with the given dims.
inline Operator partial_trace(const Operator& op, const std::vector<int>& dims, std::size_t traced)
{
    const int total = std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
    if (op.rows() != total || op.cols() != total) throw ConfigError("partial_trace: dimension mismatch");
    const int dt = dims.at(traced);
    int inner = 1;
    for (std::size_t i = traced + 1; i < dims.size(); ++i) inner *= dims[i];
    const int outer = total / (dt * inner);
    const int kept = outer * inner;
    Operator out = Operator::Zero(kept, kept);
    for (int o1 = 0; o1 < outer; ++o1)
        for (int i1 = 0; i1 < inner; ++i1)
            for (int o2 = 0; o2 < outer; ++o2)
                for (int i2 = 0; i2 < inner; ++i2) {
                    Complex acc = 0.0;
                    for (int k = 0; k < dt; ++k)
                        acc += op((o1 * dt + k) * inner + i1, (o2 * dt + k) * inner + i2);
                    out(o1 * inner + i1, o2 * inner + i2) = acc;
                }
    return out;
}

struct DensityTolerances {
    double herm = 1e-8;
    double trace = 1e-8;
    double psd = 1e-6;
};

struct DensityDiagnostics {
    double herm_deviation;  ///< max |rho - rho^dag|
    double trace_deviation; ///< |Tr rho - 1|
    double min_eigenvalue;  ///< of the Hermitian part
};

inline DensityDiagnostics inspect_density(const Operator& op)
{
    const double herm = (op - op.adjoint()).cwiseAbs().maxCoeff();
    const double trace = std::abs(op.trace() - 1.0);
    const Operator h = 0.5 * (op + op.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> es(h, Eigen::EigenvaluesOnly);
    return {herm, trace, es.eigenvalues().minCoeff()};
}

/// Validated state: Hermitian, unit trace and positive semidefinite within tolerances.
class DensityMatrix {
public:
    const Operator& op() const { return op_; }
    int dim() const { return static_cast<int>(op_.rows()); }
    const DensityTolerances& tolerances() const { return tol_; }

    double purity() const { return (op_ * op_).trace().real(); }
    Complex expectation(const Operator& o) const { return (op_ * o).trace(); }
    Complex operator()(Eigen::Index i, Eigen::Index j) const { return op_(i, j); }

private:
    DensityMatrix(Operator op, DensityTolerances tol) : op_(std::move(op)), tol_(tol) {}
    friend DensityMatrix validate_density(const Operator&, DensityTolerances);

    Operator op_;
    DensityTolerances tol_;
};

/// Checks every density invariant and reports all violations at once.
inline DensityMatrix validate_density(const Operator& op, DensityTolerances tol = {})
{
    if (op.rows() != op.cols() || op.rows() == 0) throw InvalidDensity("density matrix must be square and non-empty");
    if (!op.allFinite()) throw InvalidDensity("density matrix has non-finite entries");
    const auto d = inspect_density(op);
    std::ostringstream msg;
    bool bad = false;
    if (d.herm_deviation > tol.herm) {
        msg << "hermiticity deviation " << d.herm_deviation << " > " << tol.herm << "; ";
        bad = true;
    }
    if (d.trace_deviation > tol.trace) {
        msg << "trace deviation " << d.trace_deviation << " > " << tol.trace << "; ";
        bad = true;
    }
    if (d.min_eigenvalue < -tol.psd) {
        msg << "min eigenvalue " << d.min_eigenvalue << " < " << -tol.psd << "; ";
        bad = true;
    }
    if (bad) {
        std::string s = msg.str();
        s.resize(s.size() - 2);
        throw InvalidDensity("invalid density matrix: " + s);
    }
    return DensityMatrix(op, tol);
}

inline Operator projector(const StateVector& v) { return v * v.adjoint(); }

} // namespace nvm
