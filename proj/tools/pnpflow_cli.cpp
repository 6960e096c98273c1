#include "pnpflow/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pnpflow;

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    Config cfg = Config::parse_file(path);
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + ov + "'");
        cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    return cfg;
}

std::vector<std::string> split_values(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const std::string& group : raw) {
        std::istringstream ss(group);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

int do_run(const std::string& config_path, const std::vector<std::string>& overrides,
           bool strict) {
    Config cfg;
    ScenarioConfig sc;
    try {
        cfg = load_config(config_path, overrides);
        sc = build_scenario(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    const RunResult res = run_scenario(sc);
    std::cout << "run " << sc.name << " config_hash=" << sc.stamp.config_hash << "\n";
    std::cout << "  steps=" << res.trajectory.reports.size() << "/" << sc.n_steps
              << " output=" << sc.output_dir << "\n";
    if (!res.trajectory.reports.empty())
        std::cout << "  e_total " << format_double(res.trajectory.initial_energy.total) << " -> "
                  << format_double(res.trajectory.reports.back().energy.total) << "\n";
    if (res.oracle_ran)
        std::cout << "  oracle gap_u=" << format_double(res.oracle_gap.gap_u)
                  << " gap_v=" << format_double(res.oracle_gap.gap_v) << "\n";
    if (res.diagnostics_ran)
        std::cout << "  diagnostics " << (res.diagnostics.all_passed ? "passed" : "FAILED")
                  << "\n";
    if (!res.error.empty()) std::cerr << "error: " << res.error << "\n";
    if (res.exit_code != 0) return res.exit_code;
    if (strict && res.diagnostics_ran && !res.diagnostics.all_passed) return 3;
    return 0;
}

int do_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& axis, const std::vector<std::string>& raw_values,
             const std::string& out_dir, bool strict) {
    Config cfg;
    try {
        cfg = load_config(config_path, overrides);
        build_scenario(cfg);  // template must itself be valid
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    const std::vector<std::string> values = split_values(raw_values);
    const std::string root =
        resolve_output_dir(out_dir.empty() ? cfg.get_string("output.dir", "out") + "_sweep"
                                           : out_dir);
    const auto rows = run_sweep(cfg, axis, values, root);
    const FileStamp stamp{cfg.hash_hex(), cfg.get_string("name", "run")};
    const std::string summary_path =
        (std::filesystem::path(root) / "summary.csv").string();
    write_text_atomic(summary_path, sweep_summary_csv(axis, rows, stamp));
    std::cout << "sweep " << axis << " over " << values.size() << " values -> " << summary_path
              << "\n";
    int worst = 0;
    for (const auto& r : rows) {
        std::cout << "  " << axis << "=" << r.value << " exit=" << r.exit_code
                  << " e_final=" << format_double(r.e_final);
        if (r.oracle_ran)
            std::cout << " gap_u=" << format_double(r.gap_u)
                      << " gap_v=" << format_double(r.gap_v);
        if (!r.error.empty()) std::cout << " error=\"" << r.error << "\"";
        std::cout << "\n";
        worst = std::max(worst, r.exit_code);
        if (strict && !r.all_passed) worst = std::max(worst, 3);
    }
    return worst;
}

int do_validate(const std::string& config_path, const std::vector<std::string>& overrides) {
    try {
        const Config cfg = load_config(config_path, overrides);
        const ScenarioConfig sc = build_scenario(cfg);
        const ModelParams p = sc.params();
        std::cout << "ok name=" << sc.name << " config_hash=" << sc.stamp.config_hash
                  << " dim=" << sc.grid.dim << " cells=" << sc.grid.total()
                  << " lambda=" << format_double(p.lambda) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}

int do_compare(const std::string& path_a, const std::string& path_b) {
    try {
        const SnapshotData a = read_snapshot(path_a);
        const SnapshotData b = read_snapshot(path_b);
        require_same_grid(a.grid, b.grid, "compare");
        const double gu = l1_distance(a.z.u, b.z.u);
        const double gv = l1_distance(a.z.v, b.z.v);
        double linf_u = 0, linf_v = 0;
        for (int i = 0; i < a.grid.total(); ++i) {
            linf_u = std::max(linf_u, std::abs(a.z.u[i] - b.z.u[i]));
            linf_v = std::max(linf_v, std::abs(a.z.v[i] - b.z.v[i]));
        }
        std::cout << "l1_u=" << format_double(gu) << " l1_v=" << format_double(gv)
                  << " linf_u=" << format_double(linf_u) << " linf_v=" << format_double(linf_v)
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "compare error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pnpflow: variational solver for two-species drift-diffusion with"
                 " electrostatic coupling"};
    app.require_subcommand(1);

    std::vector<std::string> overrides;
    bool strict = false;
    std::string config_path, axis, out_dir, path_a, path_b;
    std::vector<std::string> values;

    CLI::App* run = app.add_subcommand("run", "run one scenario");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--set", overrides, "override a config key (key=value)");
    run->add_flag("--strict", strict, "exit 3 when diagnostics fail");

    CLI::App* sweep = app.add_subcommand("sweep", "run one scenario per parameter value");
    sweep->add_option("config", config_path, "config file")->required();
    sweep->add_option("--axis", axis, "dotted config key to vary")->required();
    sweep->add_option("--values", values, "comma separated values")->required();
    sweep->add_option("--out", out_dir, "sweep output root");
    sweep->add_option("--set", overrides, "override a config key (key=value)");
    sweep->add_flag("--strict", strict, "exit 3 when diagnostics fail");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running");
    validate->add_option("config", config_path, "config file")->required();
    validate->add_option("--set", overrides, "override a config key (key=value)");

    CLI::App* compare = app.add_subcommand("compare", "L1/Linf gaps between two snapshots");
    compare->add_option("a", path_a, "first snapshot")->required();
    compare->add_option("b", path_b, "second snapshot")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return do_run(config_path, overrides, strict);
    if (sweep->parsed()) return do_sweep(config_path, overrides, axis, values, out_dir, strict);
    if (validate->parsed()) return do_validate(config_path, overrides);
    if (compare->parsed()) return do_compare(path_a, path_b);
    return 1;
}
