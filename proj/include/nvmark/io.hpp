#pragma once

// CSV writers. Every number is printed with 17 significant digits.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "nvmark/bath.hpp"
#include "nvmark/lindblad.hpp"
#include "nvmark/measure.hpp"
#include "nvmark/phase_space.hpp"

namespace nvm::io {

inline std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x); // no "-0"
    return buf;
}

inline void write_schedule_csv(std::ostream& os, const DampingSchedule& s)
{
    os << "t,gamma,quad_error\n";
    for (std::size_t k = 0; k < s.size(); ++k)
        os << fmt(s.times[k]) << ',' << fmt(s.gamma[k]) << ',' << fmt(s.quad_error[k]) << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    if (traj.size() == 0) return;
    const int d = traj.states.front().dim();
    os << 't';
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) os << ",re_" << i << '_' << j << ",im_" << i << '_' << j;
    os << '\n';
    for (std::size_t s = 0; s < traj.size(); ++s) {
        os << fmt(traj.times[s]);
        const auto& r = traj.states[s].op();
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) os << ',' << fmt(r(i, j).real()) << ',' << fmt(r(i, j).imag());
        os << '\n';
    }
}

inline void write_negativity_csv(std::ostream& os, const NegativityTrace& tr)
{
    os << "t,negativity,quad_tol\n";
    for (std::size_t k = 0; k < tr.size(); ++k)
        os << fmt(tr.times[k]) << ',' << fmt(tr.values[k]) << ',' << fmt(tr.quad_tol[k]) << '\n';
}

/// Columns per factor: theta<i>,phi<i> for qubits, re_beta,im_beta for the
/// mode, then W. Single-factor qubit fields use theta,phi.
inline void write_wigner_csv(std::ostream& os, const WignerField& field)
{
    const auto& g = field.grid;
    const std::size_t nf = g.factor_count();
    std::size_t qubit_no = 0;
    for (std::size_t i = 0; i < nf; ++i) {
        if (g.factor(i).is_qubit()) {
            ++qubit_no;
            const std::string suffix = nf == 1 ? "" : std::to_string(qubit_no);
            os << "theta" << suffix << ",phi" << suffix << ',';
        } else {
            os << "re_beta,im_beta,";
        }
    }
    os << "W\n";
    for (std::size_t k = 0; k < field.values.size(); ++k) {
        const auto idx = g.split(k);
        for (std::size_t i = 0; i < nf; ++i) {
            const auto& c = g.factor(i).coords[idx[i]];
            os << fmt(c[0]) << ',' << fmt(c[1]) << ',';
        }
        os << fmt(field.values[k]) << '\n';
    }
}

template <class Writer, class T>
void write_file(const std::filesystem::path& path, Writer&& writer, const T& value)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    writer(os, value);
    if (!os) throw Error("failed writing " + path.string());
}

} // namespace nvm::io
