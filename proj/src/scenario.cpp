#include "pnpflow/scenario.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace pnpflow {

namespace {

std::vector<double> read_column_file(const std::string& path, int expected) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tabulated file: " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        vals.push_back(std::stod(line));
    }
    if (static_cast<int>(vals.size()) != expected) {
        std::ostringstream os;
        os << "tabulated file " << path << ": expected " << expected << " values, got "
           << vals.size();
        throw ConfigError(os.str());
    }
    return vals;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    return out;
}

}  // namespace

std::string resolve_output_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (fs::path(dir).is_absolute()) return dir;
    if (const char* root = std::getenv("PNPFLOW_OUTPUT_ROOT"); root && *root)
        return (fs::path(root) / dir).string();
    return dir;
}

ScalarField make_potential(const Config& cfg, const std::string& prefix, const Grid& g) {
    const std::string kind = cfg.get_string(prefix + ".kind", "zero");
    ScalarField f(g);
    if (kind == "zero") return f;

    const std::array<double, 2> c{cfg.get_double(prefix + ".center0", 0.5 * (g.lower[0] + g.upper[0])),
                                  cfg.get_double(prefix + ".center1", 0.5 * (g.lower[1] + g.upper[1]))};
    if (kind == "quadratic_well") {
        const double a = cfg.get_double(prefix + ".strength", 1.0);
        for (int iy = 0; iy < g.n[1]; ++iy)
            for (int ix = 0; ix < g.n[0]; ++ix) {
                const auto x = g.midpoint(ix, iy);
                double s = (x[0] - c[0]) * (x[0] - c[0]);
                if (g.dim == 2) s += (x[1] - c[1]) * (x[1] - c[1]);
                f[g.index(ix, iy)] = a * s;
            }
        return f;
    }
    if (kind == "double_well") {
        const double a = cfg.get_double(prefix + ".strength", 1.0);
        const std::array<double, 2> w{cfg.get_double(prefix + ".width0", 0.25),
                                      cfg.get_double(prefix + ".width1", 0.25)};
        for (int iy = 0; iy < g.n[1]; ++iy)
            for (int ix = 0; ix < g.n[0]; ++ix) {
                const auto x = g.midpoint(ix, iy);
                double s = 0;
                for (int ax = 0; ax < g.dim; ++ax) {
                    const double r = (x[ax] - c[ax]) / w[ax];
                    s += (r * r - 1.0) * (r * r - 1.0);
                }
                f[g.index(ix, iy)] = a * s;
            }
        return f;
    }
    if (kind == "tabulated") {
        f.values = read_column_file(cfg.get_string(prefix + ".file"), g.total());
        return f;
    }
    throw ConfigError("unknown potential kind '" + kind + "' for [" + prefix + "]");
}

Density make_initial_density(const Config& cfg, const std::string& prefix, const Grid& g) {
    const std::string kind = cfg.get_string(prefix + ".kind", "uniform");
    if (kind == "uniform") {
        return Density::normalized(g, std::vector<double>(g.total(), 1.0));
    }
    if (kind == "gaussian") {
        const std::array<double, 2> c{
            cfg.get_double(prefix + ".center0", 0.5 * (g.lower[0] + g.upper[0])),
            cfg.get_double(prefix + ".center1", 0.5 * (g.lower[1] + g.upper[1]))};
        const std::array<double, 2> s{cfg.get_double(prefix + ".sigma0", 0.1),
                                      cfg.get_double(prefix + ".sigma1", 0.1)};
        const double floor = cfg.get_double(prefix + ".floor", 0.0);
        const double w2 = cfg.get_double(prefix + ".weight2", 0.0);
        const std::array<double, 2> c2{cfg.get_double(prefix + ".center0_2", c[0]),
                                       cfg.get_double(prefix + ".center1_2", c[1])};
        const std::array<double, 2> s2{cfg.get_double(prefix + ".sigma0_2", s[0]),
                                       cfg.get_double(prefix + ".sigma1_2", s[1])};
        std::vector<double> vals(g.total());
        for (int iy = 0; iy < g.n[1]; ++iy)
            for (int ix = 0; ix < g.n[0]; ++ix) {
                const auto x = g.midpoint(ix, iy);
                double q1 = (x[0] - c[0]) * (x[0] - c[0]) / (2 * s[0] * s[0]);
                double q2 = (x[0] - c2[0]) * (x[0] - c2[0]) / (2 * s2[0] * s2[0]);
                if (g.dim == 2) {
                    q1 += (x[1] - c[1]) * (x[1] - c[1]) / (2 * s[1] * s[1]);
                    q2 += (x[1] - c2[1]) * (x[1] - c2[1]) / (2 * s2[1] * s2[1]);
                }
                vals[g.index(ix, iy)] = std::exp(-q1) + w2 * std::exp(-q2) + floor;
            }
        return Density::normalized(g, vals);
    }
    if (kind == "gibbs") {
        // exp(-potential) for the referenced potential section
        const ScalarField pot =
            make_potential(cfg, cfg.get_string(prefix + ".potential", "potential_u"), g);
        std::vector<double> vals(g.total());
        for (int i = 0; i < g.total(); ++i) vals[i] = std::exp(-pot[i]);
        return Density::normalized(g, vals);
    }
    if (kind == "tabulated") {
        return Density::normalized(g,
                                   read_column_file(cfg.get_string(prefix + ".file"), g.total()));
    }
    throw ConfigError("unknown initial-density kind '" + kind + "' for [" + prefix + "]");
}

ScenarioConfig build_scenario(const Config& cfg) {
    ScenarioConfig sc;
    sc.name = cfg.get_string("name", "run");

    const int dim = cfg.get_int("grid.dim", 1);
    if (dim == 1) {
        sc.grid = Grid::line(cfg.get_double("grid.lower0", 0.0), cfg.get_double("grid.upper0", 1.0),
                             cfg.get_int("grid.n0"));
    } else if (dim == 2) {
        sc.grid = Grid::box(cfg.get_double("grid.lower0", 0.0), cfg.get_double("grid.upper0", 1.0),
                            cfg.get_int("grid.n0"), cfg.get_double("grid.lower1", 0.0),
                            cfg.get_double("grid.upper1", 1.0), cfg.get_int("grid.n1"));
    } else {
        throw ConfigError("grid.dim must be 1 or 2");
    }

    sc.m = cfg.get_double("model.m", 1.0);
    sc.h = cfg.get_double("model.h", 1e-2);
    sc.n_steps = cfg.get_int("model.n_steps", 10);
    if (sc.m < 1.0) throw ConfigError("model.m must be >= 1");
    if (sc.h <= 0.0) throw ConfigError("model.h must be > 0");
    if (sc.n_steps < 0) throw ConfigError("model.n_steps must be >= 0");

    sc.U = make_potential(cfg, "potential_u", sc.grid);
    sc.V = make_potential(cfg, "potential_v", sc.grid);
    sc.z0 = State{make_initial_density(cfg, "initial_u", sc.grid),
                  make_initial_density(cfg, "initial_v", sc.grid)};

    const std::string kind = cfg.get_string("solver.kind", "entropic");
    if (kind == "entropic")
        sc.inner.kind = InnerSolverKind::entropic_prox;
    else if (kind == "quantile")
        sc.inner.kind = InnerSolverKind::quantile_descent;
    else
        throw ConfigError("solver.kind must be 'entropic' or 'quantile'");
    if (sc.inner.kind == InnerSolverKind::quantile_descent && sc.grid.dim != 1)
        throw ConfigError("solver.kind = quantile requires grid.dim = 1");
    sc.inner.tol = cfg.get_double("solver.tol", 1e-8);
    sc.inner.max_sweeps = cfg.get_int("solver.max_sweeps", 200);
    sc.inner.epsilon = cfg.get_double("solver.epsilon", 0.0);
    sc.inner.max_kernel_iters = cfg.get_int("solver.max_kernel_iters", 400);
    sc.inner.kernel_tol = cfg.get_double("solver.kernel_tol", 1e-10);
    sc.inner.max_descent_iters = cfg.get_int("solver.max_descent_iters", 300);
    const std::string measure = cfg.get_string("solver.measure",
                                               sc.grid.dim == 1 ? "exact" : "entropic");
    if (measure == "exact") {
        if (sc.grid.dim != 1) throw ConfigError("solver.measure = exact requires grid.dim = 1");
        sc.inner.measure.mode = TransportMode::exact_1d;
    } else if (measure == "entropic") {
        sc.inner.measure.mode = TransportMode::entropic;
    } else {
        throw ConfigError("solver.measure must be 'exact' or 'entropic'");
    }
    sc.inner.measure.sinkhorn.epsilon = cfg.get_double("solver.measure_epsilon", 0.0);

    sc.oracle_enabled = cfg.get_bool("oracle.enabled", false);
    sc.fv.cfl_safety = cfg.get_double("oracle.cfl_safety", 0.9);
    sc.fv.dt_max = cfg.get_double("oracle.dt_max", 1e300);
    sc.oracle_compare_time = cfg.get_double("oracle.compare_time", -1.0);

    sc.diagnostics_enabled = cfg.get_bool("diagnostics.enabled", true);
    sc.diag.measure = sc.inner.measure;
    sc.diag.check_linf = cfg.get_bool("diagnostics.linf", true);
    sc.diag.weak_form = cfg.get_bool("diagnostics.weak_form", true);
    sc.diag.euler_lagrange = cfg.get_bool("diagnostics.euler_lagrange", false);
    sc.diag.holder = cfg.get_bool("diagnostics.holder", true);
    if (cfg.has("diagnostics.lp")) {
        sc.diag.lp_exponents.clear();
        std::istringstream ps(cfg.get_string("diagnostics.lp"));
        std::string tok;
        while (std::getline(ps, tok, ','))
            if (!tok.empty()) sc.diag.lp_exponents.push_back(std::stod(tok));
    }

    sc.output_dir = resolve_output_dir(cfg.get_string("output.dir", "out"));
    sc.snapshot_every = cfg.get_int("output.snapshot_every", 0);
    sc.snapshot_binary = cfg.get_bool("output.binary_snapshots", false);
    sc.rng_seed = static_cast<unsigned long>(cfg.get_int("run.seed", 0));

    sc.stamp = FileStamp{cfg.hash_hex(), sc.name};
    return sc;
}

namespace {

std::string snapshot_name(int n, bool binary) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%06d.%s", n, binary ? "bin" : "csv");
    return buf;
}

void write_run_json(const ScenarioConfig& sc, const RunResult& res) {
    nlohmann::json j;
    j["artifact_version"] = kArtifactVersion;
    j["name"] = sc.name;
    j["config_hash"] = sc.stamp.config_hash;
    j["exit_code"] = res.exit_code;
    j["steps_completed"] = res.trajectory.reports.size();
    j["error"] = res.error;
    j["seed"] = sc.rng_seed;
    if (res.oracle_ran)
        j["oracle"] = {{"gap_u", res.oracle_gap.gap_u}, {"gap_v", res.oracle_gap.gap_v}};
    if (res.diagnostics_ran) j["diagnostics_all_passed"] = res.diagnostics.all_passed;
    write_text_atomic((std::filesystem::path(sc.output_dir) / "run.json").string(),
                      j.dump(2) + "\n");
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& sc) {
    namespace fs = std::filesystem;
    RunResult res;
    fs::create_directories(sc.output_dir);
    const ModelParams params = sc.params();

    res.trajectory.params = params;
    res.trajectory.initial_energy = total_energy(sc.z0, params, sc.U, sc.V);
    res.trajectory.states.push_back(sc.z0);
    try {
        JKOSolver solver(sc.grid, params, sc.U, sc.V, sc.inner);
        for (int n = 0; n < sc.n_steps; ++n) {
            JKOStepReport rep = solver.step(res.trajectory.states.back());
            res.trajectory.states.push_back(rep.z_next);
            res.trajectory.reports.push_back(std::move(rep));
        }
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.all_passed = false;
        res.error = e.what();
    }

    const Trajectory& tr = res.trajectory;
    write_trajectory_csv((fs::path(sc.output_dir) / "trajectory.csv").string(), tr, sc.stamp);
    const int last = static_cast<int>(tr.states.size()) - 1;
    for (int n = 0; n <= last; ++n) {
        const bool cadence = sc.snapshot_every > 0 && n % sc.snapshot_every == 0;
        if (!(n == last || cadence)) continue;
        const std::string path =
            (fs::path(sc.output_dir) / snapshot_name(n, sc.snapshot_binary)).string();
        if (sc.snapshot_binary)
            write_snapshot_binary(path, tr.states[n], tr.time_of(n), sc.stamp);
        else
            write_snapshot_csv(path, tr.states[n], tr.time_of(n), sc.stamp);
    }

    if (res.exit_code == 0 && sc.diagnostics_enabled && tr.states.size() >= 2) {
        res.diagnostics = run_diagnostics(tr, sc.U, sc.V, sc.diag);
        res.diagnostics_ran = true;
        res.all_passed = res.diagnostics.all_passed;
        write_diagnostics_json((fs::path(sc.output_dir) / "diagnostics.json").string(),
                               res.diagnostics, sc.stamp);
    }

    if (res.exit_code == 0 && sc.oracle_enabled) {
        const double t_cmp = sc.oracle_compare_time >= 0 ? sc.oracle_compare_time
                                                         : sc.final_time();
        try {
            const State oracle = fv_evolve(sc.z0, params, sc.U, sc.V, t_cmp, sc.fv);
            res.oracle_gap = compare_to_oracle(tr, oracle, t_cmp);
            res.oracle_ran = true;
        } catch (const std::exception& e) {
            res.exit_code = 2;
            res.all_passed = false;
            res.error = std::string("oracle: ") + e.what();
        }
    }

    write_run_json(sc, res);
    return res;
}

std::vector<SweepRow> run_sweep(const Config& base, const std::string& axis,
                                const std::vector<std::string>& values,
                                const std::string& out_root) {
    std::vector<std::future<SweepRow>> futures;
    futures.reserve(values.size());
    for (const std::string& value : values) {
        futures.push_back(std::async(std::launch::async, [&base, &axis, value, &out_root]() {
            SweepRow row;
            row.value = value;
            try {
                Config cfg = base;  // value objects: safe to copy per task
                cfg.set(axis, value);
                ScenarioConfig sc = build_scenario(cfg);
                sc.name = sc.name + "_" + sanitize(axis) + "=" + sanitize(value);
                sc.output_dir = (std::filesystem::path(resolve_output_dir(out_root)) /
                                 (sanitize(axis) + "=" + sanitize(value)))
                                    .string();
                sc.stamp.name = sc.name;
                const RunResult res = run_scenario(sc);
                row.exit_code = res.exit_code;
                row.all_passed = res.all_passed;
                row.error = res.error;
                if (!res.trajectory.reports.empty())
                    row.e_final = res.trajectory.reports.back().energy.total;
                else
                    row.e_final = res.trajectory.initial_energy.total;
                row.oracle_ran = res.oracle_ran;
                row.gap_u = res.oracle_gap.gap_u;
                row.gap_v = res.oracle_gap.gap_v;
            } catch (const std::exception& e) {
                row.exit_code = 1;
                row.all_passed = false;
                row.error = e.what();
            }
            return row;
        }));
    }
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (auto& f : futures) rows.push_back(f.get());
    return rows;
}

std::string sweep_summary_csv(const std::string& axis, const std::vector<SweepRow>& rows,
                              const FileStamp& stamp) {
    std::ostringstream os;
    os << "# pnpflow sweep v" << kArtifactVersion << "\n";
    os << "# name=" << stamp.name << " config_hash=" << stamp.config_hash << "\n";
    os << "axis,value,exit_code,all_passed,e_final,oracle_gap_u,oracle_gap_v,error\n";
    for (const SweepRow& r : rows) {
        os << axis << "," << r.value << "," << r.exit_code << "," << (r.all_passed ? 1 : 0)
           << "," << format_double(r.e_final) << ","
           << (r.oracle_ran ? format_double(r.gap_u) : "") << ","
           << (r.oracle_ran ? format_double(r.gap_v) : "") << ",\"" << r.error << "\"\n";
    }
    return os.str();
}

}  // namespace pnpflow
