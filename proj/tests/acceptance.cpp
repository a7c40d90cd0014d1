// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Runs every bundled scenario at its file resolution once, then checks the
// criteria against those runs and against independent reference computations.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nvmark/cli.hpp"
#include "nvmark/nvmark.hpp"
#include "oracles.hpp"

using namespace nvm;
using namespace nvm::oracle;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const HilbertSpec TWO_QUBITS({Subsystem::qubit(), Subsystem::qubit()});
const double CRITICAL = 1.0 / std::sqrt(3.0) - 0.5;

struct Sweep {
    std::map<std::string, Scenario> scenarios;
    std::map<std::string, ScenarioResult> results;
    std::map<std::string, std::string> errors;
    double runtime = 0.0;

    const ScenarioResult& result(const std::string& name) const
    {
        if (const auto e = errors.find(name); e != errors.end())
            throw std::runtime_error(name + " failed: " + e->second);
        return results.at(name);
    }
};

Sweep run_all(const fs::path& out)
{
    Sweep sw;
    const auto t0 = Clock::now();
    for (const auto& fig : figure_ids())
        for (const auto& file : figure_scenarios(NVMARK_SCENARIO_DIR, fig)) {
            const Scenario s = load_scenario(file);
            const auto t1 = Clock::now();
            try {
                sw.results.emplace(s.name, run_scenario(s, out));
                std::fprintf(stderr, "  ran %-28s %7.1f s\n", s.name.c_str(), seconds_since(t1));
            } catch (const std::exception& e) {
                sw.errors.emplace(s.name, e.what());
                std::fprintf(stderr, "  FAILED %-25s %7.1f s: %s\n", s.name.c_str(), seconds_since(t1), e.what());
            }
            sw.scenarios.emplace(s.name, s);
        }
    sw.runtime = seconds_since(t0);
    return sw;
}

double noise_floor(const NegativityTrace& tr, std::size_t a, std::size_t b)
{
    return 2.0 * std::max(tr.quad_tol[a], tr.quad_tol[b]);
}

Operator dephased_bell_op()
{
    Operator m = Operator::Zero(4, 4);
    m(0, 0) = m(3, 3) = 0.5;
    return m;
}

// ---------------------------------------------------------------------------

Verdict critical_value()
{
    const auto t0 = Clock::now();
    const KernelCache cache = build_cache(TWO_QUBITS, PhaseSpaceGrid({QubitAxes{}, QubitAxes{}}));
    const double nv = negativity_volume(wigner_evaluate(validate_density(dephased_bell_op()), cache));
    const double dt = seconds_since(t0);
    const bool ok = std::abs(nv - CRITICAL) <= 5e-3 && dt < 10.0;
    return {ok, fmt("NV=%.6f target %.6f |diff|=%.2e tol 5e-3 (ln3/12=%.6f) runtime %.2f s", nv, CRITICAL,
                    std::abs(nv - CRITICAL), std::log(3.0) / 12.0, dt)};
}

Verdict long_time_limit()
{
    const auto t0 = Clock::now();
    const double t_max = 3.0, dt = 1e-3;
    const auto sched = build_schedule(Lorentzian{4.0, 1.0, 0.0, 5.0}, {1.0, 0.0}, uniform_grid(t_max, dt / 2));
    EvolutionConfig cfg;
    cfg.dt = dt;
    cfg.t_max = t_max;
    cfg.sample_stride = 50;
    const auto traj = evolve(bell_state(), {Channel::make(ChannelKind::qubit_dephasing, TWO_QUBITS, 0, sched)}, cfg);
    std::size_t first = traj.size();
    for (std::size_t i = 0; i < traj.size(); ++i)
        if (std::abs(traj.states[i](0, 3)) < 1e-4) {
            first = i;
            break;
        }
    if (first == traj.size()) return {false, "coherence never fell below 1e-4"};
    const KernelCache cache = build_cache(TWO_QUBITS, PhaseSpaceGrid({QubitAxes{}, QubitAxes{}}));
    const auto tr = nv_trace(traj, cache);
    double worst = 0.0;
    for (std::size_t i = first; i < tr.size(); ++i) worst = std::max(worst, std::abs(tr.values[i] - CRITICAL));
    const double run = seconds_since(t0);
    const bool ok = sched.min_value() >= 0.0 && worst <= 1e-2 && run < 300.0;
    return {ok, fmt("coherence < 1e-4 from t=%.2f, NV(T)=%.6f, max |NV-%.4f| after that %.2e tol 1e-2, runtime %.1f s",
                    traj.times[first], tr.values.back(), CRITICAL, worst, run)};
}

double markovian_max_dn = 0.0;

Verdict markovian_contract(const Sweep& sw)
{
    bool ok = true;
    std::string detail;
    for (const char* name : {"fig1a_blue", "fig1b_blue", "fig1b_orange"}) {
        const auto& r = sw.result(name);
        const auto& tr = *r.negativity;
        bool monotone = true;
        for (std::size_t k = 1; k < tr.size(); ++k)
            if (tr.values[k] > tr.values[k - 1] + noise_floor(tr, k, k - 1)) monotone = false;
        const bool nonneg = r.schedule.min_value() >= 0.0;
        ok = ok && nonneg && monotone && *r.dn < 0.02;
        markovian_max_dn = std::max(markovian_max_dn, *r.dn);
        detail += fmt("%s gamma_min=%.3g monotone=%s D_N=%.3g; ", name, r.schedule.min_value(), monotone ? "yes" : "no",
                      *r.dn);
    }
    return {ok, detail + "D_N tol 0.02"};
}

Verdict non_markovian_detection(const Sweep& sw)
{
    bool ok = true;
    std::string detail;
    for (const char* name : {"fig1a_green", "fig1b_green"}) {
        const auto& r = sw.result(name);
        const auto& tr = *r.negativity;
        double best = 0.0, best_floor = 0.0;
        for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
            if (!(tr.values[k] <= tr.values[k - 1] && tr.values[k] < tr.values[k + 1])) continue;
            for (std::size_t m = k + 1; m < tr.size(); ++m) {
                const double rise = tr.values[m] - tr.values[k];
                const double floor = noise_floor(tr, k, m);
                if (rise - 5.0 * floor > best - 5.0 * best_floor) best = rise, best_floor = floor;
            }
        }
        const bool revival = best > 0.0 && best >= 5.0 * best_floor;
        const bool stronger = *r.dn > 0.0 && *r.dn >= 10.0 * markovian_max_dn;
        ok = ok && r.schedule.changes_sign() && revival && stronger;
        detail += fmt("%s sign change=%s revival=%.3g (floor %.2g) D_N=%.3f; ", name,
                      r.schedule.changes_sign() ? "yes" : "no", best, best_floor, *r.dn);
    }
    return {ok, detail + fmt("Markovian max D_N=%.3g", markovian_max_dn)};
}

Verdict integrator_oracle()
{
    const auto dephase = [](const DampingSchedule& s) {
        return std::vector<Channel>{Channel::make(ChannelKind::qubit_dephasing, TWO_QUBITS, 0, s)};
    };
    EvolutionConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    cfg.sample_stride = 10;
    const double g = 0.5;
    const double e_const = bell_coherence_error(evolve(bell_state(), dephase(constant_schedule(g, 1.0, 5e-4)), cfg),
                                                [&](double t) { return g * t; });
    cfg.t_max = 2.0;
    const auto lor = build_schedule(Lorentzian{4.0, 1.0, 1.0, 5.0}, {1.0, 0.0}, uniform_grid(2.0, 5e-4));
    const double e_lor = bell_coherence_error(evolve(bell_state(), dephase(lor), cfg), [](double t) {
        return lorentzian_gamma2_integral(4.0, 1.0, 1.0, t);
    });

    auto coarse = [&](double step) {
        const auto sched = build_schedule(Lorentzian{4.0, 1.0, 1.0, 5.0}, {1.0, 0.0}, uniform_grid(2.0, step / 2));
        EvolutionConfig c;
        c.dt = step;
        c.t_max = 2.0;
        c.sample_stride = static_cast<int>(std::lround(2.0 / step));
        return bell_coherence_error(evolve(bell_state(), dephase(sched), c),
                                    [](double t) { return lorentzian_gamma2_integral(4.0, 1.0, 1.0, t); });
    };
    const double e1 = coarse(0.1), e2 = coarse(0.05), e3 = coarse(0.025);
    const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));
    const bool ok = e_const <= 1e-8 && e_lor <= 1e-6 && order >= 3.5;
    return {ok, fmt("constant-rate err %.2e (tol 1e-8), Lorentzian gamma2 err %.2e (tol 1e-6), order %.2f (min 3.5)",
                    e_const, e_lor, order)};
}

Verdict amplitude_damping_oracle()
{
    const double f = coherent_damping_min_fidelity({1.0, 1.0}, 1.0, 40, 1.0, 1e-3);
    return {f > 1.0 - 1e-6, fmt("min fidelity 1-%.2e over t in [0,1] (need 1-F < 1e-6)", 1.0 - f)};
}

Verdict tcl_oracles()
{
    double e2 = 0.0;
    for (auto [d0, l] : {std::pair{4.0, 1.0}, std::pair{10.0, 2.0}, std::pair{20.0, 2.0}})
        for (double t : {0.25, 0.5, 1.0, 2.0}) {
            const double want = 2.0 * d0 * (1.0 - std::exp(-l * t)) / l;
            e2 = std::max(e2, std::abs(gamma2(Lorentzian{d0, l, 0.0, 5.0}, t) - want) / want);
        }
    double e4 = 0.0;
    const double c = 0.7;
    for (double t : {0.5, 1.0, 2.0, 3.0}) {
        const double want = 2.0 / 3.0 * c * c * t * t * t;
        e4 = std::max(e4, std::abs(gamma4(ConstantCorrelation{Complex(c, 0.0)}, t) - want) / want);
    }
    double worst_sigma = 0.0;
    unsigned seed = 1234;
    for (const auto& b : figure_baths()) {
        const auto mc = monte_carlo_gamma4(b.j, 1.0, 1'000'000, seed++);
        worst_sigma = std::max(worst_sigma, std::abs(gamma4(b.j, 1.0) - mc.mean) / mc.stderr_);
    }
    const bool ok = e2 <= 1e-6 && e4 <= 1e-8 && worst_sigma <= 3.0;
    return {ok, fmt("gamma2 rel err %.2e (tol 1e-6), gamma4 constant rel err %.2e (tol 1e-8), "
                    "gamma4 vs Monte Carlo worst %.2f sigma over 6 sets (tol 3)",
                    e2, e4, worst_sigma)};
}

Verdict gwf_invariants(const Sweep& sw)
{
    double worst_norm = 0.0;
    std::size_t snapshots = 0;
    for (const auto& [name, r] : sw.results) {
        if (!r.negativity) continue;
        for (double t : r.negativity->quad_tol) worst_norm = std::max(worst_norm, t);
        snapshots += r.negativity->size();
    }

    const auto qubit = PhaseSpaceGrid({QubitAxes{}});
    Operator sq = Operator::Zero(2, 2);
    for (std::size_t k = 0; k < qubit.size(); ++k) {
        const auto& c = qubit.factor(0).coords[k];
        sq += qubit.factor(0).weights[k] * qubit_kernel(c[0], c[1]);
    }
    const double e_qubit = (sq - identity(2)).cwiseAbs().maxCoeff();

    const int n_c = 40;
    const HilbertSpec mode({Subsystem::mode(n_c)});
    const KernelCache cache = build_cache(mode, PhaseSpaceGrid({ModeAxes{}}));
    Operator sm = Operator::Zero(n_c, n_c);
    for (std::size_t k = 0; k < cache.size(); ++k) sm += cache.weight(k) * cache.factor_kernels(0)[k];
    const double e_mode = (sm - identity(n_c)).cwiseAbs().maxCoeff();

    Operator vac = Operator::Zero(n_c, n_c);
    vac(0, 0) = 1.0;
    const auto field = wigner_evaluate(validate_density(vac), cache);
    double e_vac = 0.0;
    const auto& coords = cache.grid().factor(0).coords;
    for (std::size_t k = 0; k < coords.size(); ++k)
        e_vac = std::max(e_vac, std::abs(field.values[k] - std::exp(-2.0 * (coords[k][0] * coords[k][0] +
                                                                              coords[k][1] * coords[k][1]))));
    if (!sw.errors.empty()) return {false, sw.errors.begin()->first + " failed: " + sw.errors.begin()->second};
    const bool ok = worst_norm < 1e-3 && e_qubit < 1e-3 && e_mode < 1e-3 && e_vac < 1e-8;
    return {ok, fmt("normalization defect <= %.2e over %zu snapshots of %zu scenarios (tol 1e-3); completeness qubit "
                    "%.2e, mode N_c=40 %.2e (tol 1e-3); vacuum max err %.2e (tol 1e-8); sweep %.0f s",
                    worst_norm, snapshots, sw.results.size(), e_qubit, e_mode, e_vac, sw.runtime)};
}

Verdict dn_unit_checks()
{
    const std::vector<double> mono{1.0, 0.9, 0.4, 0.4, 0.1}, ex{1.0, 0.5, 0.8}, flat(20, 0.25);
    const double d_mono = nonmarkovianity_degree(mono), d_ex = nonmarkovianity_degree(ex),
                 d_flat = nonmarkovianity_degree(flat);
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> len(2, 50);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int outside = 0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> v(len(rng));
        for (double& x : v) x = u(rng);
        const double d = nonmarkovianity_degree(v);
        if (!(d >= 0.0 && d <= 1.0)) ++outside;
    }
    const bool ok = d_mono == 0.0 && d_ex == 0.75 && d_flat == 0.0 && outside == 0;
    return {ok, fmt("monotone %.3g, [1,0.5,0.8] %.17g, constant %.3g, %d of 10000 random traces outside [0,1]", d_mono,
                    d_ex, d_flat, outside)};
}

Verdict qubit_scs(const Sweep& sw)
{
    const std::vector<std::pair<std::string, std::string>> pairs{
        {"fig3_phase", "fig3_amplitude"},
        {"fig4_phase_blue", "fig4_amplitude_blue"},
        {"fig4_phase_orange_d5", "fig4_amplitude_orange_d5"},
        {"fig4_phase_orange_d8", "fig4_amplitude_orange_d8"},
        {"fig4_phase_green", "fig4_amplitude_green"},
        {"fig5_phase_blue", "fig5_amplitude_blue"},
        {"fig5_phase_orange", "fig5_amplitude_orange"},
        {"fig5_phase_green", "fig5_amplitude_green"},
    };
    bool ok = true;
    int ordered = 0;
    double min_gap = 1e300;
    for (const auto& [ph, am] : pairs) {
        const auto& a = *sw.result(ph).negativity;
        const auto& b = *sw.result(am).negativity;
        const bool horizon = std::abs(a.times.back() - b.times.back()) < 1e-12;
        const double gap = a.values.back() - b.values.back();
        min_gap = std::min(min_gap, gap);
        if (horizon && gap > 0.0) ++ordered;
        else ok = false;
    }

    // amplitude-damped reduced photonic field at the last snapshot of the Markovian run
    const auto& s = sw.scenarios.at("fig3_amplitude");
    const auto& r = sw.result("fig3_amplitude");
    const KernelCache cache(hilbert_spec(s), phase_space_grid(s), DEFAULT_CACHE_BUDGET);
    const auto red = reduce_photonic(wigner_evaluate(r.trajectory->states.back(), cache));
    double l2 = 0.0;
    const auto& f = red.grid.factor(0);
    for (std::size_t k = 0; k < f.coords.size(); ++k) {
        const double vac = std::exp(-2.0 * (f.coords[k][0] * f.coords[k][0] + f.coords[k][1] * f.coords[k][1]));
        l2 += f.weights[k] * (red.values[k] - vac) * (red.values[k] - vac);
    }
    l2 = std::sqrt(l2);
    ok = ok && l2 < 1e-2 && r.schedule.min_value() >= 0.0;
    return {ok, fmt("phase > amplitude final NV in %d of %zu matched pairs (min gap %.3g); fig3 amplitude final "
                    "L2 distance to vacuum %.2e at t=%.1f (tol 1e-2)",
                    ordered, pairs.size(), min_gap, l2, r.trajectory->times.back())};
}

bool same_csvs(const fs::path& a, const fs::path& b, std::size_t& count, std::string& first_diff)
{
    bool same = true;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.path().extension() != ".csv") continue;
        const auto rel = fs::relative(e.path(), a);
        ++count;
        if (!fs::exists(b / rel) || read_text(e.path()) != read_text(b / rel)) {
            if (same) first_diff = rel.string();
            same = false;
        }
    }
    return same && count > 0;
}

Verdict desk_budget(const fs::path& out)
{
    std::ostringstream sink;
    double t[2];
    for (int i = 0; i < 2; ++i) {
        const auto dir = out / (i ? "b" : "a");
        fs::remove_all(dir);
        const auto t0 = Clock::now();
        const int code = cli_main({"reproduce", "fig2a", "--out", dir.string(), "--resolution", "ref"}, sink, sink);
        t[i] = seconds_since(t0);
        if (code != 0) return {false, "reproduce fig2a exited with " + std::to_string(code) + ": " + sink.str()};
    }
    std::size_t n = 0;
    std::string diff;
    const bool same = same_csvs(out / "a", out / "b", n, diff);
    const bool ok = same && t[0] < 900.0 && t[1] < 900.0;
    return {ok, fmt("reproduce fig2a %.1f s and %.1f s (limit 900 s); %zu CSV files %s%s", t[0], t[1], n,
                    same ? "byte-identical" : "differ, first ", same ? "" : diff.c_str())};
}

} // namespace

int main()
{
    const fs::path out = fs::temp_directory_path() / "nvmark_acceptance";
    fs::remove_all(out);
    std::fprintf(stderr, "running bundled scenarios into %s\n", out.c_str());
    const Sweep sw = run_all(out / "sweep");

    struct Criterion {
        const char* name;
        std::function<Verdict()> check;
    };
    const std::vector<Criterion> criteria{
        {"Critical-value reproduction", critical_value},
        {"Long-time limit", long_time_limit},
        {"Markovian contract", [&] { return markovian_contract(sw); }},
        {"Non-Markovian detection", [&] { return non_markovian_detection(sw); }},
        {"Integrator oracle", integrator_oracle},
        {"Amplitude-damping oracle", amplitude_damping_oracle},
        {"TCL oracles", tcl_oracles},
        {"GWF invariants", [&] { return gwf_invariants(sw); }},
        {"D_N formula unit tests", dn_unit_checks},
        {"Qubit-SCS scenarios", [&] { return qubit_scs(sw); }},
        {"End-to-end desk budget", [&] { return desk_budget(out / "reproduce"); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failed;
        std::printf("%s  %-28s %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed ? 1 : 0;
}
