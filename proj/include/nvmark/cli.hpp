#pragma once

// Command-line front end: nvmark <rates|evolve|wigner|measure|reproduce> [options]
//
// Exit codes: 0 success, 1 pipeline stage failure, 2 usage or configuration error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nvmark/scenario.hpp"

#ifndef NVMARK_SCENARIO_DIR
#define NVMARK_SCENARIO_DIR "scenarios"
#endif

namespace nvm {

inline const std::vector<std::string>& figure_ids()
{
    static const std::vector<std::string> ids{"fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4", "fig5"};
    return ids;
}

/// Output root: --out, else $NVMARK_OUT_DIR, else "nvmark-out".
inline std::filesystem::path output_root(const std::string& flag)
{
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("NVMARK_OUT_DIR"); env && *env) return env;
    return "nvmark-out";
}

/// Bundled scenario directory: $NVMARK_SCENARIO_DIR, else the source tree.
inline std::filesystem::path scenario_root(const std::string& flag)
{
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("NVMARK_SCENARIO_DIR"); env && *env) return env;
    return NVMARK_SCENARIO_DIR;
}

/// Scenario files of one figure, sorted by file name.
inline std::vector<std::filesystem::path> figure_scenarios(const std::filesystem::path& root, const std::string& fig)
{
    const auto dir = root / fig;
    if (!std::filesystem::is_directory(dir)) throw ConfigError("no scenario directory " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".ini") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .ini files in " + dir.string());
    return files;
}

inline Stage figure_stage(const std::string& fig)
{
    return (fig == "fig1a" || fig == "fig1b") ? Stage::rates : Stage::measure;
}

namespace detail {

inline void print_result(std::ostream& os, const Scenario& s, const ScenarioResult& r)
{
    os << s.name << ": ";
    if (r.dn) os << "D_N=" << io::fmt(*r.dn) << ' ';
    os << "gamma in [" << io::fmt(r.schedule.min_value()) << ", " << io::fmt(r.schedule.max_value()) << "] ";
    os << "-> " << r.dir.string() << " (" << r.runtime_s << " s)\n";
}

} // namespace detail

inline int cli_main(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Non-Markovian negativity-volume simulator", "nvmark"};
    app.set_version_flag("--version", std::string(VERSION));
    app.require_subcommand(1, 1);

    std::string config, out_dir, resolution, scenarios;
    std::vector<std::string> sets;
    app.add_option("--config", config, "Scenario file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output root directory (default $NVMARK_OUT_DIR or ./nvmark-out)");
    app.add_option("--set", sets, "Override a scenario value, section.key=value (repeatable)")
        ->allow_extra_args(false)
        ->take_all();
    app.add_option("--resolution", resolution, "Phase-space grid preset")
        ->check(CLI::IsMember({"low", "ref", "high"}));
    app.add_option("--scenarios", scenarios, "Bundled scenario directory (reproduce)");

    auto* rates = app.add_subcommand("rates", "Tabulate the damping rate gamma(t) to schedule.csv");
    auto* evolve_cmd = app.add_subcommand("evolve", "Integrate the master equation, write trajectory.csv");
    auto* wigner = app.add_subcommand("wigner", "Dump Wigner fields at selected times");
    auto* measure = app.add_subcommand("measure", "Negativity trace and non-Markovianity degree");
    auto* reproduce = app.add_subcommand("reproduce", "Run the bundled scenarios of one figure");
    std::vector<double> times;
    wigner->add_option("--times", times, "Snapshot times (default: outputs.wigner_times)")->delimiter(',');
    std::string figure;
    reproduce->add_option("figure", figure, "Figure id")->required()->check(CLI::IsMember(figure_ids()));
    for (auto* sub : {rates, evolve_cmd, wigner, measure, reproduce}) sub->fallthrough();

    std::vector<const char*> argv;
    argv.push_back("nvmark");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << VERSION << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    std::optional<Resolution> res;
    if (!resolution.empty()) res = resolution_from_string(resolution);
    RunOptions opt;
    opt.overrides = sets;
    opt.resolution = resolution.empty() ? "file" : resolution;
    const auto root = output_root(out_dir);

    try {
        if (reproduce->parsed()) {
            if (!config.empty()) {
                err << "error: reproduce takes a figure id, not --config\n";
                return 2;
            }
            std::vector<std::pair<Scenario, std::filesystem::path>> list;
            for (const auto& f : figure_scenarios(scenario_root(scenarios), figure))
                list.emplace_back(load_scenario(f, res, sets), f);
            opt.until = figure_stage(figure);
            nlohmann::json summary;
            summary["figure"] = figure;
            summary["version"] = VERSION;
            summary["scenarios"] = nlohmann::json::array();
            std::string csv = "name,dn\n";
            for (const auto& [s, file] : list) {
                const ScenarioResult r = run_scenario(s, root, opt);
                detail::print_result(out, s, r);
                summary["scenarios"].push_back({{"name", s.name},
                                                {"dir", s.output_dir},
                                                {"dn", r.dn ? nlohmann::json(*r.dn) : nlohmann::json(nullptr)},
                                                {"config_hash", r.config_hash},
                                                {"runtime_s", r.runtime_s}});
                csv += s.name + "," + (r.dn ? io::fmt(*r.dn) : std::string()) + "\n";
            }
            auto text = [](std::ostream& os, const std::string& t) { os << t; };
            io::write_file(root / figure / "summary.csv", text, csv);
            io::write_file(root / figure / "summary.json", text, summary.dump(2) + "\n");
            return 0;
        }

        if (config.empty()) {
            err << "error: --config is required\n\n" << app.help();
            return 2;
        }
        if (wigner->parsed() && !times.empty()) {
            std::string list;
            for (std::size_t i = 0; i < times.size(); ++i) list += (i ? ", " : "") + detail::num(times[i]);
            opt.overrides.push_back("outputs.wigner_times=" + list);
        }
        const Scenario s = load_scenario(config, res, opt.overrides);
        if (wigner->parsed() && s.wigner_times.empty()) {
            err << "error: no snapshot times; pass --times or set outputs.wigner_times\n";
            return 2;
        }
        opt.until = rates->parsed()        ? Stage::rates
                    : evolve_cmd->parsed() ? Stage::evolve
                    : wigner->parsed()     ? Stage::wigner
                                           : Stage::measure;
        const ScenarioResult r = run_scenario(s, root, opt);
        detail::print_result(out, s, r);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

inline int cli_main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_main(std::move(args));
}

} // namespace nvm
