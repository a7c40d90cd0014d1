#pragma once

// Negativity volume of a Wigner field and the non-Markovianity degree of a
// negativity time series.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "nvmark/lindblad.hpp"
#include "nvmark/phase_space.hpp"

namespace nvm {

inline constexpr double NORMALIZATION_TOL = 1e-3;

/// Relative round-off floor of a negativity sample.
inline constexpr double ROUNDOFF_FLOOR = 1e-12;

/// Per-field tolerance: normalization defect |sum w W - 1| plus a round-off
/// floor proportional to sum w |W|.
inline double quadrature_tolerance(const WignerField& field)
{
    double s = 0.0, s_abs = 0.0;
    field.grid.for_each_weight([&](std::size_t k, double w) {
        s += w * field.values[k];
        s_abs += w * std::abs(field.values[k]);
    });
    return std::abs(s - 1.0) + ROUNDOFF_FLOOR * s_abs;
}

/// N = (sum_k w_k |W_k| - 1) / 2.
inline double negativity_volume(const WignerField& field, double norm_tol = NORMALIZATION_TOL)
{
    double s = 0.0, s_abs = 0.0;
    field.grid.for_each_weight([&](std::size_t k, double w) {
        s += w * field.values[k];
        s_abs += w * std::abs(field.values[k]);
    });
    if (!(std::abs(s - 1.0) <= norm_tol)) {
        std::ostringstream msg;
        msg << "negativity_volume: field normalization " << s << " is off by more than " << norm_tol;
        throw Error(msg.str());
    }
    const double nv = 0.5 * (s_abs - 1.0);
    const double tol = std::abs(s - 1.0) + ROUNDOFF_FLOOR * s_abs;
    return (nv < 0.0 && nv >= -tol) ? 0.0 : nv;
}

struct NegativityTrace {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> quad_tol;

    std::size_t size() const { return values.size(); }
};

inline NegativityTrace nv_trace(const Trajectory& traj, const KernelCache& cache, double norm_tol = NORMALIZATION_TOL)
{
    NegativityTrace out;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const WignerField field = wigner_evaluate(traj.states[i], cache);
        out.times.push_back(traj.times[i]);
        out.values.push_back(negativity_volume(field, norm_tol));
        out.quad_tol.push_back(quadrature_tolerance(field));
    }
    return out;
}

/// D = 1 - |N(T) - N(0)| / sum_k |N(t_{k+1}) - N(t_k)|.
///
/// Steps with |dN| below twice the larger adjacent tolerance are left out of
/// the total variation; a trace whose total variation is at most ten times the
/// largest tolerance counts as constant and gives 0. Result is clamped to [0, 1].
inline double nonmarkovianity_degree(std::span<const double> values, std::span<const double> quad_tol)
{
    if (values.size() < 2) throw std::invalid_argument("nonmarkovianity_degree: need at least 2 samples");
    if (!quad_tol.empty() && quad_tol.size() != values.size())
        throw std::invalid_argument("nonmarkovianity_degree: tolerance vector size mismatch");
    auto tol_at = [&](std::size_t k) { return quad_tol.empty() ? 0.0 : quad_tol[k]; };
    double tv = 0.0, max_tol = 0.0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        const double step = std::abs(values[k + 1] - values[k]);
        const double floor = 2.0 * std::max(tol_at(k), tol_at(k + 1));
        if (step >= floor) tv += step;
    }
    for (std::size_t k = 0; k < values.size(); ++k) max_tol = std::max(max_tol, tol_at(k));
    if (tv <= 10.0 * max_tol || tv == 0.0) return 0.0;
    const double net = std::abs(values.back() - values.front());
    return std::clamp(1.0 - net / tv, 0.0, 1.0);
}

inline double nonmarkovianity_degree(std::span<const double> values)
{
    return nonmarkovianity_degree(values, std::span<const double>{});
}

inline double nonmarkovianity_degree(const NegativityTrace& trace)
{
    return nonmarkovianity_degree(trace.values, trace.quad_tol);
}

} // namespace nvm
