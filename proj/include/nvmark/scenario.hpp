#pragma once

// Declarative scenarios and the rates -> evolve -> wigner -> negativity pipeline.
//
// File grammar (one scenario per file):
//
//   # comment             ; comment
//   [section]
//   key = value
//
// Sections and keys, in canonical order:
//
//   [scenario] name, note (optional)
//   [state]    kind = bell | qubit_scs
//              qubit_scs: n_c, alpha1_re, alpha1_im, r1, phi1, alpha2_re, alpha2_im, r2, phi2
//   [bath]     kind = lorentzian | ohmic
//              lorentzian: delta0, lambda, detuning, omega0
//              ohmic:      eta, s, omega_c, omega0
//              c2, c4
//   [channel]  kind = qubit_dephasing | photon_amplitude | photon_dephasing, target
//   [time]     dt, t_max, sample_stride
//   [grid]     n_theta, n_phi, n_beta, radius
//   [outputs]  dir, wigner_times (comma separated, may be empty)
//
// Squeezing is xi = r e^{i phi}. Units: bath time units, hbar = 1.

#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nvmark/bath.hpp"
#include "nvmark/error.hpp"
#include "nvmark/hilbert.hpp"
#include "nvmark/io.hpp"
#include "nvmark/lindblad.hpp"
#include "nvmark/measure.hpp"
#include "nvmark/phase_space.hpp"
#include "nvmark/states.hpp"

#ifndef NVMARK_VERSION
#define NVMARK_VERSION "0.0.0"
#endif

namespace nvm {

inline constexpr const char* VERSION = NVMARK_VERSION;

struct BellState {
    bool operator==(const BellState&) const = default;
};

struct QubitScsState {
    int n_c = 40;
    Complex alpha1{1.0, 1.0};
    double r1 = 0.15;
    double phi1 = 1.5;
    Complex alpha2{-1.0, -1.0};
    double r2 = 0.15;
    double phi2 = -1.5;

    Complex xi1() const { return std::polar(r1, phi1); }
    Complex xi2() const { return std::polar(r2, phi2); }
    bool operator==(const QubitScsState&) const = default;
};

using StateSpec = std::variant<BellState, QubitScsState>;

struct TimeSpec {
    double dt = 1e-3;
    double t_max = 1.0;
    int sample_stride = 10;
    bool operator==(const TimeSpec&) const = default;
};

struct GridSpec {
    int n_theta = 32;
    int n_phi = 16;
    int n_beta = 151;
    double radius = 7.5;
    bool operator==(const GridSpec&) const = default;
};

struct Scenario {
    std::string name;
    std::string note;
    StateSpec state = BellState{};
    SpectralDensity bath = Lorentzian{4.0, 1.0, 1.0, 1.0};
    TclCoefficients coeffs{};
    ChannelKind channel = ChannelKind::qubit_dephasing;
    std::size_t target = 0;
    TimeSpec time{};
    GridSpec grid{};
    std::string output_dir;
    std::vector<double> wigner_times;

    bool operator==(const Scenario&) const = default;
};

// ---------------------------------------------------------------------------
// Key/value table

/// section -> key -> raw value, plus the line each key came from.
struct ConfigTable {
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, int> lines; ///< "section.key" -> line (0 for overrides)

    void set(const std::string& section, const std::string& key, std::string value, int line)
    {
        values[section][key] = std::move(value);
        lines[section + "." + key] = line;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool valid_ident(std::string_view s)
{
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

/// Shortest representation that parses back to the same double.
inline std::string num(double x)
{
    if (x == 0.0) return "0";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

} // namespace detail

inline ConfigTable parse_table(std::string_view text)
{
    ConfigTable t;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::string_view line = detail::trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        auto fail = [&](const std::string& what) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + what);
        };
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!detail::valid_ident(section)) fail("bad section name '" + section + "'");
            if (t.values.count(section)) fail("duplicate section [" + section + "]");
            t.values[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail("expected 'key = value'");
        if (section.empty()) fail("key outside of a section");
        const std::string key(detail::trim(line.substr(0, eq)));
        if (!detail::valid_ident(key)) fail("bad key '" + key + "'");
        if (t.values[section].count(key)) fail("duplicate key " + section + "." + key);
        t.set(section, key, std::string(detail::trim(line.substr(eq + 1))), line_no);
    }
    return t;
}

/// Applies "section.key=value".
inline void apply_override(ConfigTable& t, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
    const std::string section(detail::trim(assignment.substr(0, dot)));
    const std::string key(detail::trim(assignment.substr(dot + 1, eq - dot - 1)));
    if (!detail::valid_ident(section) || !detail::valid_ident(key))
        throw ConfigError("override '" + std::string(assignment) + "' has a malformed key");
    t.set(section, key, std::string(detail::trim(assignment.substr(eq + 1))), 0);
}

enum class Resolution { low, ref, high };

inline Resolution resolution_from_string(std::string_view s)
{
    if (s == "low") return Resolution::low;
    if (s == "ref") return Resolution::ref;
    if (s == "high") return Resolution::high;
    throw ConfigError("unknown resolution '" + std::string(s) + "' (expected low, ref or high)");
}

/// Grid presets (qubit n_theta x n_phi / mode n_beta; radius unchanged):
/// low 16x8 / 76, ref 32x16 / 151, high 64x32 / 241.
inline void apply_resolution(ConfigTable& t, Resolution r)
{
    int nt = 32, np = 16, nb = 151;
    if (r == Resolution::low) nt = 16, np = 8, nb = 76;
    if (r == Resolution::high) nt = 64, np = 32, nb = 241;
    t.set("grid", "n_theta", std::to_string(nt), 0);
    t.set("grid", "n_phi", std::to_string(np), 0);
    t.set("grid", "n_beta", std::to_string(nb), 0);
}

// ---------------------------------------------------------------------------
// Table <-> Scenario

namespace detail {

class Reader {
public:
    explicit Reader(const ConfigTable& t) : t_(t) {}

    const std::string& raw(const std::string& section, const std::string& key)
    {
        used_[section].insert(key);
        const auto s = t_.values.find(section);
        if (s == t_.values.end()) throw ConfigError("missing section [" + section + "]");
        const auto k = s->second.find(key);
        if (k == s->second.end()) throw ConfigError("missing key " + section + "." + key);
        return k->second;
    }

    std::optional<std::string> optional(const std::string& section, const std::string& key)
    {
        used_[section].insert(key);
        const auto s = t_.values.find(section);
        if (s == t_.values.end()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    double real(const std::string& section, const std::string& key)
    {
        return parse_real(raw(section, key), section + "." + key);
    }

    long integer(const std::string& section, const std::string& key)
    {
        const std::string& v = raw(section, key);
        long out = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
        if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad(section + "." + key, v, "an integer");
        return out;
    }

    static double parse_real(const std::string& v, const std::string& what)
    {
        double out = 0.0;
        const char* b = v.data();
        if (!v.empty() && v[0] == '+') ++b;
        const auto r = std::from_chars(b, v.data() + v.size(), out);
        if (v.empty() || r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(out))
            bad(what, v, "a finite number");
        return out;
    }

    /// Every key present in the table must have been consumed.
    void finish() const
    {
        for (const auto& [section, keys] : t_.values) {
            const auto u = used_.find(section);
            if (u == used_.end()) throw ConfigError("unknown section [" + section + "]");
            for (const auto& [key, value] : keys)
                if (!u->second.count(key)) {
                    const auto l = t_.lines.find(section + "." + key);
                    const std::string where =
                        (l != t_.lines.end() && l->second > 0) ? " (line " + std::to_string(l->second) + ")" : "";
                    throw ConfigError("unknown key " + section + "." + key + where);
                }
        }
    }

private:
    [[noreturn]] static void bad(const std::string& what, const std::string& v, const char* expect)
    {
        throw ConfigError(what + " = '" + v + "' is not " + expect);
    }

    const ConfigTable& t_;
    std::map<std::string, std::set<std::string>> used_;
};

} // namespace detail

inline void validate(const Scenario& s);

inline Scenario scenario_from_table(const ConfigTable& t)
{
    detail::Reader r(t);
    Scenario s;
    s.name = r.raw("scenario", "name");
    s.note = r.optional("scenario", "note").value_or("");

    const std::string& state = r.raw("state", "kind");
    if (state == "bell") {
        s.state = BellState{};
    } else if (state == "qubit_scs") {
        QubitScsState q;
        q.n_c = static_cast<int>(r.integer("state", "n_c"));
        q.alpha1 = {r.real("state", "alpha1_re"), r.real("state", "alpha1_im")};
        q.r1 = r.real("state", "r1");
        q.phi1 = r.real("state", "phi1");
        q.alpha2 = {r.real("state", "alpha2_re"), r.real("state", "alpha2_im")};
        q.r2 = r.real("state", "r2");
        q.phi2 = r.real("state", "phi2");
        s.state = q;
    } else {
        throw ConfigError("state.kind = '" + state + "' (expected bell or qubit_scs)");
    }

    const std::string& bath = r.raw("bath", "kind");
    if (bath == "lorentzian") {
        s.bath = Lorentzian{r.real("bath", "delta0"), r.real("bath", "lambda"), r.real("bath", "detuning"),
                            r.real("bath", "omega0")};
    } else if (bath == "ohmic") {
        s.bath = Ohmic{r.real("bath", "eta"), r.real("bath", "s"), r.real("bath", "omega_c"), r.real("bath", "omega0")};
    } else {
        throw ConfigError("bath.kind = '" + bath + "' (expected lorentzian or ohmic)");
    }
    s.coeffs = {r.real("bath", "c2"), r.real("bath", "c4")};

    s.channel = channel_kind_from_string(r.raw("channel", "kind"));
    const long target = r.integer("channel", "target");
    if (target < 0) throw ConfigError("channel.target must be >= 0");
    s.target = static_cast<std::size_t>(target);

    s.time.dt = r.real("time", "dt");
    s.time.t_max = r.real("time", "t_max");
    s.time.sample_stride = static_cast<int>(r.integer("time", "sample_stride"));

    s.grid.n_theta = static_cast<int>(r.integer("grid", "n_theta"));
    s.grid.n_phi = static_cast<int>(r.integer("grid", "n_phi"));
    s.grid.n_beta = static_cast<int>(r.integer("grid", "n_beta"));
    s.grid.radius = r.real("grid", "radius");

    s.output_dir = r.raw("outputs", "dir");
    const std::string& times = r.raw("outputs", "wigner_times");
    std::size_t pos = 0;
    while (pos < times.size()) {
        auto comma = times.find(',', pos);
        if (comma == std::string::npos) comma = times.size();
        const std::string item(detail::trim(std::string_view(times).substr(pos, comma - pos)));
        s.wigner_times.push_back(detail::Reader::parse_real(item, "outputs.wigner_times"));
        pos = comma + 1;
    }
    r.finish();
    validate(s);
    return s;
}

inline Scenario parse_scenario(std::string_view text) { return scenario_from_table(parse_table(text)); }

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// Reads a scenario file, then applies the resolution preset (if any) and the
/// overrides in order.
inline Scenario load_scenario(const std::filesystem::path& path, std::optional<Resolution> res = std::nullopt,
                              const std::vector<std::string>& overrides = {})
{
    try {
        ConfigTable t = parse_table(read_text(path));
        if (res) apply_resolution(t, *res);
        for (const auto& o : overrides) apply_override(t, o);
        return scenario_from_table(t);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Canonical text form; parse_scenario(serialize(s)) == s.
inline std::string serialize(const Scenario& s)
{
    using detail::num;
    std::ostringstream os;
    auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
    os << "[scenario]\n";
    kv("name", s.name);
    if (!s.note.empty()) kv("note", s.note);

    os << "\n[state]\n";
    if (const auto* q = std::get_if<QubitScsState>(&s.state)) {
        kv("kind", "qubit_scs");
        kv("n_c", std::to_string(q->n_c));
        kv("alpha1_re", num(q->alpha1.real()));
        kv("alpha1_im", num(q->alpha1.imag()));
        kv("r1", num(q->r1));
        kv("phi1", num(q->phi1));
        kv("alpha2_re", num(q->alpha2.real()));
        kv("alpha2_im", num(q->alpha2.imag()));
        kv("r2", num(q->r2));
        kv("phi2", num(q->phi2));
    } else {
        kv("kind", "bell");
    }

    os << "\n[bath]\n";
    if (const auto* l = std::get_if<Lorentzian>(&s.bath)) {
        kv("kind", "lorentzian");
        kv("delta0", num(l->delta0));
        kv("lambda", num(l->lambda));
        kv("detuning", num(l->detuning));
        kv("omega0", num(l->omega0));
    } else if (const auto* o = std::get_if<Ohmic>(&s.bath)) {
        kv("kind", "ohmic");
        kv("eta", num(o->eta));
        kv("s", num(o->s));
        kv("omega_c", num(o->omega_c));
        kv("omega0", num(o->omega0));
    } else {
        throw ConfigError("serialize: the constant correlation stub has no file form");
    }
    kv("c2", num(s.coeffs.c2));
    kv("c4", num(s.coeffs.c4));

    os << "\n[channel]\n";
    kv("kind", std::string(to_string(s.channel)));
    kv("target", std::to_string(s.target));

    os << "\n[time]\n";
    kv("dt", num(s.time.dt));
    kv("t_max", num(s.time.t_max));
    kv("sample_stride", std::to_string(s.time.sample_stride));

    os << "\n[grid]\n";
    kv("n_theta", std::to_string(s.grid.n_theta));
    kv("n_phi", std::to_string(s.grid.n_phi));
    kv("n_beta", std::to_string(s.grid.n_beta));
    kv("radius", num(s.grid.radius));

    os << "\n[outputs]\n";
    kv("dir", s.output_dir);
    std::string times;
    for (std::size_t i = 0; i < s.wigner_times.size(); ++i) times += (i ? ", " : "") + num(s.wigner_times[i]);
    os << "wigner_times =" << (times.empty() ? "" : " " + times) << '\n';
    return os.str();
}

/// FNV-1a 64-bit hash, hex.
inline std::string config_hash(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Building blocks

inline HilbertSpec hilbert_spec(const Scenario& s)
{
    if (const auto* q = std::get_if<QubitScsState>(&s.state))
        return HilbertSpec({Subsystem::qubit(), Subsystem::mode(q->n_c)});
    return HilbertSpec({Subsystem::qubit(), Subsystem::qubit()});
}

inline PhaseSpaceGrid phase_space_grid(const Scenario& s)
{
    const QubitAxes qa{s.grid.n_theta, s.grid.n_phi};
    if (std::holds_alternative<QubitScsState>(s.state))
        return PhaseSpaceGrid({qa, ModeAxes{s.grid.n_beta, s.grid.radius}});
    return PhaseSpaceGrid({qa, qa});
}

inline DensityMatrix initial_state(const Scenario& s)
{
    if (const auto* q = std::get_if<QubitScsState>(&s.state))
        return qubit_scs_state(q->alpha1, q->xi1(), q->alpha2, q->xi2(), q->n_c);
    return bell_state();
}

inline EvolutionConfig evolution_config(const Scenario& s)
{
    EvolutionConfig cfg;
    cfg.dt = s.time.dt;
    cfg.t_max = s.time.t_max;
    cfg.sample_stride = s.time.sample_stride;
    return cfg;
}

/// Schedule grid at dt/2 so every RK4 stage lands on a node.
inline DampingSchedule scenario_schedule(const Scenario& s, const QuadratureConfig& q = {})
{
    const std::vector<double> grid = uniform_grid(s.time.t_max, 0.5 * s.time.dt);
    return build_schedule(s.bath, s.coeffs, grid, q);
}

inline void validate(const Scenario& s)
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(!s.name.empty(), "scenario.name must not be empty");
    for (char c : s.name)
        require(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.',
                "scenario.name may only contain letters, digits, '_', '-' and '.'");
    require(s.note.find('\n') == std::string::npos, "scenario.note must be a single line");
    nvm::validate(s.bath);
    require(s.coeffs.c2 >= 0 && s.coeffs.c4 >= 0, "bath.c2 and bath.c4 must be >= 0");

    require(s.time.dt > 0, "time.dt must be > 0");
    require(s.time.t_max >= 0, "time.t_max must be >= 0");
    require(s.time.sample_stride >= 1, "time.sample_stride must be >= 1");
    const double steps = s.time.t_max / s.time.dt;
    require(std::abs(steps - std::round(steps)) <= 1e-6, "time.t_max must be a multiple of time.dt");

    // fewer than 3 phi nodes cannot integrate the e^{2i phi} kernel terms
    require(s.grid.n_theta >= 1 && s.grid.n_phi >= 3, "grid needs n_theta >= 1 and n_phi >= 3");

    if (const auto* q = std::get_if<QubitScsState>(&s.state)) {
        require(q->n_c >= 2, "state.n_c must be >= 2");
        require(q->r1 >= 0 && q->r2 >= 0, "state.r1 and state.r2 must be >= 0");
        require(s.grid.n_beta >= 3 && s.grid.radius > 0, "grid needs n_beta >= 3 and radius > 0");
        const double amax = std::max(std::abs(q->alpha1), std::abs(q->alpha2));
        require(s.grid.radius >= amax + 3.0, "grid.radius must be at least max|alpha| + 3");
        require(s.target <= 1, "channel.target must be 0 (qubit) or 1 (mode)");
        if (s.channel == ChannelKind::qubit_dephasing)
            require(s.target == 0, "qubit_dephasing on the qubit-mode state must target subsystem 0");
        else
            require(s.target == 1, "photon channels on the qubit-mode state must target subsystem 1");
    } else {
        require(s.channel == ChannelKind::qubit_dephasing, "the Bell state only supports qubit_dephasing");
        require(s.target <= 1, "channel.target must be 0 or 1 for the Bell state");
    }

    std::string out = s.output_dir;
    require(!out.empty(), "outputs.dir must not be empty");
    const std::filesystem::path p(out);
    require(p.is_relative(), "outputs.dir must be a relative path");
    for (const auto& part : p) require(part != "..", "outputs.dir must not contain '..'");

    const double sample = s.time.dt * s.time.sample_stride;
    for (double t : s.wigner_times) {
        require(t >= 0 && t <= s.time.t_max * (1 + 1e-12), "outputs.wigner_times must lie in [0, t_max]");
        const double k = t / sample;
        const bool on_grid = std::abs(k - std::round(k)) <= 1e-6;
        const bool at_end = std::abs(t - s.time.t_max) <= 1e-9 * std::max(1.0, s.time.t_max);
        require(on_grid || at_end, "outputs.wigner_times must be multiples of dt * sample_stride or t_max");
    }
}

// ---------------------------------------------------------------------------
// Pipeline

enum class Stage { rates, evolve, wigner, measure };

inline std::string_view to_string(Stage s)
{
    switch (s) {
    case Stage::rates: return "rates";
    case Stage::evolve: return "evolve";
    case Stage::wigner: return "wigner";
    case Stage::measure: return "measure";
    }
    return "?";
}

struct RunOptions {
    Stage until = Stage::measure;
    std::vector<std::string> overrides; ///< echoed into result.json
    std::string resolution = "ref";
    QuadratureConfig quadrature{};
    std::size_t cache_budget = DEFAULT_CACHE_BUDGET;
};

struct ScenarioResult {
    std::filesystem::path dir;
    DampingSchedule schedule;
    std::optional<Trajectory> trajectory;
    std::optional<NegativityTrace> negativity;
    std::optional<double> dn;
    std::optional<Complex> branch_overlap;
    std::vector<std::filesystem::path> files;
    std::string config_hash;
    double runtime_s = 0.0;
};

namespace detail {

/// Requested snapshot time in shortest round-trip form, e.g. 0.1 -> "0.1".
inline std::string time_tag(double t) { return num(t); }

inline WignerField dump_field(const WignerField& f, const Scenario& s)
{
    return std::holds_alternative<QubitScsState>(s.state) ? reduce_photonic(f) : f;
}

template <class Fn>
auto stage(std::string_view name, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(std::string(name), e.what());
    }
}

} // namespace detail

/// Runs the pipeline up to `opt.until` and writes into out_root / s.output_dir:
///   scenario.ini     canonical echo of the scenario
///   schedule.csv     t,gamma,quad_error
///   trajectory.csv   (evolve only)
///   wigner_t<t>.csv  at outputs.wigner_times (wigner, measure); reduced photonic field for qubit-mode states
///   negativity.csv   t,negativity,quad_tol (measure)
///   result.json      summary
inline ScenarioResult run_scenario(const Scenario& s, const std::filesystem::path& out_root, const RunOptions& opt = {})
{
    validate(s);
    const auto start = std::chrono::steady_clock::now();
    ScenarioResult res;
    res.dir = out_root / s.output_dir;
    const std::string echo = serialize(s);
    res.config_hash = config_hash(echo);

    auto write = [&](const std::string& name, auto&& writer, const auto& value) {
        const auto path = res.dir / name;
        io::write_file(path, writer, value);
        res.files.push_back(path);
    };
    detail::stage("output", [&] {
        write("scenario.ini", [](std::ostream& os, const std::string& t) { os << t; }, echo);
    });

    res.schedule = detail::stage("rates", [&] { return scenario_schedule(s, opt.quadrature); });
    detail::stage("rates", [&] { write("schedule.csv", io::write_schedule_csv, res.schedule); });

    std::optional<DensityMatrix> rho0;
    if (opt.until != Stage::rates) {
        rho0 = detail::stage("state", [&] { return initial_state(s); });
        if (const auto* q = std::get_if<QubitScsState>(&s.state))
            res.branch_overlap = detail::stage(
                "state", [&] { return scs_branch_overlap(q->alpha1, q->xi1(), q->alpha2, q->xi2(), q->n_c); });
        res.trajectory = detail::stage("evolve", [&] {
            const HilbertSpec spec = hilbert_spec(s);
            std::vector<Channel> channels{Channel::make(s.channel, spec, s.target, res.schedule)};
            return evolve(*rho0, channels, evolution_config(s));
        });
        if (opt.until == Stage::evolve)
            detail::stage("evolve", [&] { write("trajectory.csv", io::write_trajectory_csv, *res.trajectory); });
    }

    if (opt.until == Stage::wigner || opt.until == Stage::measure) {
        detail::stage("wigner", [&] {
            const Trajectory& traj = *res.trajectory;
            const KernelCache cache(hilbert_spec(s), phase_space_grid(s), opt.cache_budget);
            const bool measure = opt.until == Stage::measure;
            NegativityTrace tr;
            for (std::size_t i = 0; i < traj.size(); ++i) {
                const double t = traj.times[i];
                std::optional<double> dump;
                for (double tw : s.wigner_times) {
                    const bool last = i + 1 == traj.size();
                    if (std::abs(t - tw) <= 1e-9 * std::max(1.0, s.time.t_max) ||
                        (last && std::abs(tw - s.time.t_max) <= 1e-9 * std::max(1.0, s.time.t_max)))
                        dump = tw;
                }
                if (!measure && !dump) continue;
                const WignerField field = wigner_evaluate(traj.states[i], cache);
                if (dump) write("wigner_t" + detail::time_tag(*dump) + ".csv", io::write_wigner_csv, detail::dump_field(field, s));
                if (measure) {
                    tr.times.push_back(t);
                    tr.values.push_back(detail::stage("measure", [&] { return negativity_volume(field); }));
                    tr.quad_tol.push_back(quadrature_tolerance(field));
                }
            }
            if (measure) res.negativity = std::move(tr);
        });
    }

    if (res.negativity) {
        detail::stage("measure", [&] {
            res.dn = nonmarkovianity_degree(*res.negativity);
            write("negativity.csv", io::write_negativity_csv, *res.negativity);
        });
    }

    res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    detail::stage("output", [&] {
        using nlohmann::json;
        json j;
        j["name"] = s.name;
        j["version"] = VERSION;
        j["config_hash"] = res.config_hash;
        j["stage"] = std::string(to_string(opt.until));
        j["resolution"] = opt.resolution;
        j["overrides"] = opt.overrides;
        j["dn"] = res.dn ? json(*res.dn) : json(nullptr);
        j["runtime_s"] = res.runtime_s;
        if (!s.note.empty()) j["note"] = s.note;
        double max_err = 0.0;
        for (double e : res.schedule.quad_error) max_err = std::max(max_err, e);
        j["schedule"] = {{"gamma_min", res.schedule.min_value()},
                         {"gamma_max", res.schedule.max_value()},
                         {"changes_sign", res.schedule.changes_sign()},
                         {"max_quad_error", max_err}};
        if (res.branch_overlap) j["branch_overlap"] = {{"re", res.branch_overlap->real()}, {"im", res.branch_overlap->imag()}};
        if (res.trajectory) {
            double min_eig = std::numeric_limits<double>::infinity(), max_tr = 0.0;
            for (const auto& d : res.trajectory->diagnostics) {
                min_eig = std::min(min_eig, d.min_eigenvalue);
                max_tr = std::max(max_tr, d.trace_deviation);
            }
            j["trajectory"] = {{"snapshots", res.trajectory->size()},
                               {"min_eigenvalue", min_eig},
                               {"max_trace_deviation", max_tr}};
        }
        if (res.negativity) {
            const auto& v = res.negativity->values;
            j["negativity"] = {{"initial", v.front()},
                               {"final", v.back()},
                               {"min", *std::min_element(v.begin(), v.end())},
                               {"max", *std::max_element(v.begin(), v.end())}};
        }
        std::vector<std::string> names;
        for (const auto& f : res.files) names.push_back(f.filename().string());
        names.push_back("result.json");
        j["files"] = names;
        write("result.json", [](std::ostream& os, const json& v) { os << v.dump(2) << '\n'; }, j);
    });
    return res;
}

} // namespace nvm
