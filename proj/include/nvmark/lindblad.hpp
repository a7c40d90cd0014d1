#pragma once

// Time-dependent Lindblad master equation with signed TCL rates, integrated by
// fixed-step classical Runge-Kutta.

#include <Eigen/Sparse>

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "nvmark/bath.hpp"
#include "nvmark/hilbert.hpp"

namespace nvm {

enum class ChannelKind { qubit_dephasing, photon_amplitude, photon_dephasing };

inline std::string_view to_string(ChannelKind k)
{
    switch (k) {
    case ChannelKind::qubit_dephasing: return "qubit_dephasing";
    case ChannelKind::photon_amplitude: return "photon_amplitude";
    case ChannelKind::photon_dephasing: return "photon_dephasing";
    }
    return "?";
}

inline ChannelKind channel_kind_from_string(std::string_view s)
{
    if (s == "qubit_dephasing") return ChannelKind::qubit_dephasing;
    if (s == "photon_amplitude") return ChannelKind::photon_amplitude;
    if (s == "photon_dephasing") return ChannelKind::photon_dephasing;
    throw ConfigError("unknown channel kind '" + std::string(s) + "'");
}

/// One dissipative channel: unit-coefficient Lindblad operator embedded in the
/// full space, scaled by a signed rate gamma(t).
struct Channel {
    ChannelKind kind;
    std::size_t target;
    Operator base_op;
    DampingSchedule schedule;

    static Channel make(ChannelKind kind, const HilbertSpec& spec, std::size_t target, DampingSchedule schedule)
    {
        if (target >= spec.size()) throw ConfigError("channel target out of range");
        const Subsystem& sub = spec[target];
        Operator local;
        switch (kind) {
        case ChannelKind::qubit_dephasing:
            if (sub.kind != SubsystemKind::qubit) throw ConfigError("qubit_dephasing must target a qubit");
            local = pauli(Axis::z);
            break;
        case ChannelKind::photon_amplitude:
            if (sub.kind != SubsystemKind::mode) throw ConfigError("photon_amplitude must target a mode");
            local = annihilation(sub.dim);
            break;
        case ChannelKind::photon_dephasing:
            if (sub.kind != SubsystemKind::mode) throw ConfigError("photon_dephasing must target a mode");
            local = number(sub.dim);
            break;
        }
        return Channel{kind, target, spec.embed(local, target), std::move(schedule)};
    }
};

/// L rho L^dag - (L^dag L rho + rho L^dag L) / 2. No rate included.
inline Operator dissipator(const Operator& l, const Operator& rho)
{
    if (l.rows() != rho.rows() || l.cols() != rho.cols() || l.rows() != l.cols())
        throw std::invalid_argument("dissipator: dimension mismatch");
    const Operator ldl = l.adjoint() * l;
    return l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
}

/// Generator d rho/dt = -i[H, rho] + sum_ch gamma_ch(t) D[L_ch] rho, with
/// sparse copies of the channel operators.
class Liouvillian {
public:
    Liouvillian(Operator hamiltonian, const std::vector<Channel>& channels) : h_(std::move(hamiltonian))
    {
        has_h_ = h_.size() > 0 && !h_.isZero(0.0);
        for (const auto& ch : channels) {
            Term t;
            t.l = ch.base_op.sparseView();
            t.ldag = Operator(ch.base_op.adjoint()).sparseView();
            t.ldl = Operator(ch.base_op.adjoint() * ch.base_op).sparseView();
            t.schedule = &ch.schedule;
            terms_.push_back(std::move(t));
        }
    }

    Operator apply(const Operator& rho, double t) const
    {
        Operator out = Operator::Zero(rho.rows(), rho.cols());
        if (has_h_) {
            if (h_.rows() != rho.rows()) throw std::invalid_argument("Liouvillian: Hamiltonian dimension mismatch");
            out.noalias() += -I_UNIT * (h_ * rho - rho * h_);
        }
        for (const auto& term : terms_) {
            if (term.l.rows() != rho.rows()) throw std::invalid_argument("Liouvillian: channel dimension mismatch");
            // a negative rate is an ordinary signed multiplier of the dissipator
            const double g = term.schedule->at(t);
            if (g == 0.0) continue;
            const Operator lr = term.l * rho;
            Operator d = lr * term.ldag;
            // rho * ldl, not (ldl * rho)^dag: rounding noise in the anti-Hermitian part would grow
            d -= 0.5 * (term.ldl * rho + rho * term.ldl);
            out += g * d;
        }
        return out;
    }

private:
    using Sparse = Eigen::SparseMatrix<Complex>;
    struct Term {
        Sparse l, ldag, ldl;
        const DampingSchedule* schedule;
    };
    Operator h_;
    bool has_h_ = false;
    std::vector<Term> terms_;
};

inline Operator rhs(const Operator& rho, double t, const Operator& hamiltonian, const std::vector<Channel>& channels)
{
    return Liouvillian(hamiltonian, channels).apply(rho, t);
}

struct EvolutionConfig {
    double dt = 1e-3;
    double t_max = 1.0;
    int sample_stride = 1;
    Operator hamiltonian; ///< empty means zero
    /// Abort threshold for trace and Hermiticity drift.
    double drift_tol = 1e-6;
};

struct SnapshotDiagnostics {
    double trace_deviation;
    double herm_deviation; ///< before symmetrization
    double min_eigenvalue;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    std::vector<SnapshotDiagnostics> diagnostics;

    std::size_t size() const { return times.size(); }
};

/// Classical RK4 with fixed step; rates are sampled at t, t + dt/2 and t + dt.
/// Snapshots every `sample_stride` steps (and at t_max) are re-Hermitized.
inline Trajectory evolve(const DensityMatrix& rho0, const std::vector<Channel>& channels, const EvolutionConfig& cfg)
{
    if (!(cfg.dt > 0) || !(cfg.t_max >= 0) || cfg.sample_stride < 1)
        throw ConfigError("evolve: need dt > 0, t_max >= 0, sample_stride >= 1");
    const double ratio = cfg.t_max / cfg.dt;
    const long n_steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(n_steps)) > 1e-6)
        throw ConfigError("evolve: t_max must be a multiple of dt");
    for (const auto& ch : channels) {
        if (ch.base_op.rows() != rho0.dim()) throw ConfigError("evolve: channel dimension does not match state");
        if (ch.schedule.t_max() < cfg.t_max * (1 - 1e-12) || ch.schedule.step() > cfg.dt * (1 + 1e-9))
            throw ConfigError("evolve: channel schedule must cover [0, t_max] with step <= dt");
    }
    if (cfg.hamiltonian.size() > 0 && cfg.hamiltonian.rows() != rho0.dim())
        throw ConfigError("evolve: Hamiltonian dimension does not match state");

    const Liouvillian gen(cfg.hamiltonian, channels);
    DensityTolerances snap_tol{cfg.drift_tol, cfg.drift_tol, std::numeric_limits<double>::infinity()};

    Trajectory traj;
    Operator rho = rho0.op();
    auto record = [&](long step) {
        const double t = static_cast<double>(step) * cfg.dt;
        const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        const double tr = std::abs(rho.trace() - 1.0);
        if (!(herm <= cfg.drift_tol) || !(tr <= cfg.drift_tol) || !rho.allFinite()) {
            std::ostringstream msg;
            msg << "evolve: drift at t=" << t << " (trace deviation " << tr << ", hermiticity deviation " << herm
                << ", limit " << cfg.drift_tol << ")";
            throw EvolutionError(msg.str());
        }
        rho = 0.5 * (rho + rho.adjoint()).eval();
        const auto diag = inspect_density(rho);
        traj.times.push_back(t);
        traj.states.push_back(validate_density(rho, snap_tol));
        traj.diagnostics.push_back({tr, herm, diag.min_eigenvalue});
    };

    record(0);
    const double dt = cfg.dt;
    for (long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Operator k1 = gen.apply(rho, t);
        const Operator k2 = gen.apply(rho + 0.5 * dt * k1, t + 0.5 * dt);
        const Operator k3 = gen.apply(rho + 0.5 * dt * k2, t + 0.5 * dt);
        const Operator k4 = gen.apply(rho + dt * k3, t + dt);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const long step = k + 1;
        if (step % cfg.sample_stride == 0 || step == n_steps) record(step);
    }
    return traj;
}

} // namespace nvm
