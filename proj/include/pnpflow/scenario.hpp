#pragma once

#include "pnpflow/config.hpp"
#include "pnpflow/diagnostics.hpp"
#include "pnpflow/fv.hpp"
#include "pnpflow/io.hpp"
#include "pnpflow/jko.hpp"

#include <string>
#include <vector>

namespace pnpflow {

// Fully-resolved run description: grid, model, potentials, initial state,
// solver and diagnostics settings, output layout.
struct ScenarioConfig {
    std::string name = "run";
    Grid grid;
    double m = 1.0;
    double h = 1e-2;
    int n_steps = 10;
    ScalarField U, V;
    State z0;
    InnerSolverConfig inner;

    bool oracle_enabled = false;
    FVConfig fv;
    double oracle_compare_time = -1.0;  // < 0: final time

    bool diagnostics_enabled = true;
    DiagnosticsOptions diag;

    std::string output_dir = "out";
    int snapshot_every = 0;  // 0: final snapshot only
    bool snapshot_binary = false;
    unsigned long rng_seed = 0;

    FileStamp stamp;

    ModelParams params() const { return make_model_params(m, h, U, V); }
    double final_time() const { return n_steps * h; }
};

// Potential / initial-data families addressed by a config section prefix.
ScalarField make_potential(const Config& cfg, const std::string& prefix, const Grid& g);
Density make_initial_density(const Config& cfg, const std::string& prefix, const Grid& g);

ScenarioConfig build_scenario(const Config& cfg);

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 solver failure
    bool all_passed = true;
    Trajectory trajectory;
    DiagnosticsReport diagnostics;
    bool diagnostics_ran = false;
    OracleComparison oracle_gap;
    bool oracle_ran = false;
    std::string error;
};

// Runs the scenario and writes trajectory.csv, snapshots, diagnostics.json
// and run.json under output_dir; partial artifacts are kept on failure.
RunResult run_scenario(const ScenarioConfig& sc);

struct SweepRow {
    std::string value;
    int exit_code = 0;
    bool all_passed = true;
    double e_final = 0.0;
    double gap_u = 0.0, gap_v = 0.0;
    bool oracle_ran = false;
    std::string error;
};

// One concurrent run per value of the dotted config key `axis`; each run is
// isolated in its own subdirectory of out_root and its own row.
std::vector<SweepRow> run_sweep(const Config& base, const std::string& axis,
                                const std::vector<std::string>& values,
                                const std::string& out_root);

std::string sweep_summary_csv(const std::string& axis, const std::vector<SweepRow>& rows,
                              const FileStamp& stamp);

// PNPFLOW_OUTPUT_ROOT prepended to relative output directories.
std::string resolve_output_dir(const std::string& dir);

}  // namespace pnpflow
