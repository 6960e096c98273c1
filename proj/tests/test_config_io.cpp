#include <doctest.h>

#include "pnpflow/config.hpp"
#include "pnpflow/io.hpp"
#include "pnpflow/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace pnpflow;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("pnpflow_unit_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* kTinyScenario =
    "name = tiny\n"
    "[grid]\n"
    "dim = 1\n"
    "n0 = 48\n"
    "[model]\n"
    "m = 1\n"
    "h = 0.01\n"
    "n_steps = 3\n"
    "[potential_u]\n"
    "kind = quadratic_well\n"
    "strength = 1\n"
    "center0 = 0.35\n"
    "[potential_v]\n"
    "kind = quadratic_well\n"
    "strength = 1\n"
    "center0 = 0.65\n"
    "[initial_u]\n"
    "kind = gaussian\n"
    "center0 = 0.4\n"
    "sigma0 = 0.1\n"
    "floor = 0.05\n"
    "[initial_v]\n"
    "kind = gaussian\n"
    "center0 = 0.6\n"
    "sigma0 = 0.1\n"
    "floor = 0.05\n"
    "[solver]\n"
    "kind = quantile\n"
    "measure = exact\n"
    "[diagnostics]\n"
    "enabled = true\n"
    "[output]\n"
    "dir = out\n";

}  // namespace

TEST_SUITE_BEGIN("config_io");

TEST_CASE("parser handles sections, comments and typed access") {
    Config cfg = Config::parse_string(
        "# leading comment\n"
        "name = demo\n"
        "answer = 42\n"
        "\n"
        "[solver]\n"
        "; another comment style\n"
        "tol = 1e-8\n"
        "kind = entropic\n"
        "verbose = true\n"
        "[grid]\n"
        "n0 = 64\n");
    CHECK(cfg.has("name"));
    CHECK(cfg.has("solver.tol"));
    CHECK(!cfg.has("solver.missing"));
    CHECK(cfg.get_string("name") == "demo");
    CHECK(cfg.get_int("answer") == 42);
    CHECK(cfg.get_double("solver.tol") == 1e-8);
    CHECK(cfg.get_bool("solver.verbose"));
    CHECK(cfg.get_int("grid.n0") == 64);
    CHECK(cfg.get_string("solver.kind", "x") == "entropic");
    CHECK(cfg.get_double("solver.nope", 2.5) == 2.5);
    CHECK(cfg.get_int("nope", 7) == 7);
    CHECK(cfg.get_bool("nope", true));
}

TEST_CASE("parse errors carry the origin and line number") {
    try {
        Config::parse_string("a = 1\nbroken line\n", "test.ini");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("test.ini:2") != std::string::npos);
    }
    CHECK_THROWS_AS(Config::parse_string("[unclosed\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("x = 1\nx = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[s]\na = 1\n[s2]\n[s]\nb = 1\na = 2\n"),
                    ConfigError);

    Config cfg = Config::parse_string("x = notanumber\nflag = maybe\n");
    CHECK_THROWS_AS(cfg.get_double("x"), ConfigError);
    CHECK_THROWS_AS(cfg.get_int("x"), ConfigError);
    CHECK_THROWS_AS(cfg.get_bool("flag"), ConfigError);
    CHECK_THROWS_AS(cfg.get_string("missing"), ConfigError);
}

TEST_CASE("serialization round-trips bit-identically") {
    Config cfg = Config::parse_string(
        "top = 1\n"
        "other = two\n"
        "[b]\n"
        "z = 3\n"
        "a = 4\n"
        "[a]\n"
        "k = 5\n");
    std::string s1 = cfg.serialize();
    Config again = Config::parse_string(s1);
    std::string s2 = again.serialize();
    CHECK(s1 == s2);
    CHECK(cfg.hash() == again.hash());
    CHECK(cfg.hash_hex() == again.hash_hex());
    CHECK(cfg.hash_hex().size() == 16);

    // canonical form keeps bare keys ahead of sections, sections in
    // first-appearance order, keys in appearance order
    CHECK(s1.find("top") < s1.find("[b]"));
    CHECK(s1.find("[b]") < s1.find("[a]"));
    CHECK(s1.find("z = ") < s1.find("a = 4"));
}

TEST_CASE("set updates or appends and changes the hash") {
    Config cfg = Config::parse_string("[solver]\ntol = 1e-8\n");
    auto h0 = cfg.hash();
    cfg.set("solver.tol", "1e-6");
    CHECK(cfg.get_double("solver.tol") == 1e-6);
    CHECK(cfg.hash() != h0);
    cfg.set("fresh.key", "7");
    CHECK(cfg.get_int("fresh.key") == 7);

    auto keys = cfg.keys();
    CHECK(keys.size() == 2);
    auto solver_keys = cfg.keys("solver.");
    REQUIRE(solver_keys.size() == 1);
    CHECK(solver_keys[0] == "solver.tol");
}

TEST_CASE("format_double round-trips doubles exactly") {
    for (double v : {0.1, 1.0 / 3.0, 6.02e23, -1.7976931348623157e308, 5e-324,
                     3.141592653589793, 0.0, -0.0, 1e-17}) {
        // strtod instead of std::stod: the latter throws on denormal underflow
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("atomic text write replaces files without leftovers") {
    fs::path dir = fresh_dir("atomic");
    fs::path target = dir / "file.txt";
    write_text_atomic(target.string(), "first\n");
    CHECK(slurp(target) == "first\n");
    write_text_atomic(target.string(), "second\n");
    CHECK(slurp(target) == "second\n");
    CHECK(!fs::exists(target.string() + ".tmp"));
}

TEST_CASE("potential families match their closed forms") {
    Grid g = Grid::line(0.0, 1.0, 16);
    Config cfg = Config::parse_string(
        "[pz]\n"
        "kind = zero\n"
        "[pq]\n"
        "kind = quadratic_well\n"
        "strength = 2\n"
        "center0 = 0.25\n"
        "[pd]\n"
        "kind = double_well\n"
        "strength = 1.5\n"
        "center0 = 0.5\n"
        "width0 = 0.3\n"
        "[pb]\n"
        "kind = bogus\n");
    ScalarField z = make_potential(cfg, "pz", g);
    for (double x : z.values) CHECK(x == 0.0);

    ScalarField q = make_potential(cfg, "pq", g);
    for (int i = 0; i < 16; ++i) {
        double d = g.mid(0, i) - 0.25;
        CHECK(q[i] == doctest::Approx(2.0 * d * d).epsilon(1e-14));
    }

    ScalarField dw = make_potential(cfg, "pd", g);
    for (int i = 0; i < 16; ++i) {
        double r = (g.mid(0, i) - 0.5) / 0.3;
        double expected = 1.5 * (r * r - 1.0) * (r * r - 1.0);
        CHECK(dw[i] == doctest::Approx(expected).epsilon(1e-13));
    }

    CHECK_THROWS_AS(make_potential(cfg, "pb", g), ConfigError);
}

TEST_CASE("tabulated fields validate the value count") {
    Grid g = Grid::line(0.0, 1.0, 8);
    fs::path dir = fresh_dir("tab");
    fs::path good = dir / "good.txt";
    {
        std::ofstream out(good);
        for (int i = 0; i < 8; ++i) out << 0.5 + 0.1 * i << "\n";
    }
    fs::path bad = dir / "bad.txt";
    {
        std::ofstream out(bad);
        out << "1 2 3\n";
    }
    Config cfg = Config::parse_string("[pt]\nkind = tabulated\nfile = " + good.string() +
                                      "\n[px]\nkind = tabulated\nfile = " + bad.string() +
                                      "\n[it]\nkind = tabulated\nfile = " + good.string() +
                                      "\n");
    ScalarField f = make_potential(cfg, "pt", g);
    CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f[7] == doctest::Approx(1.2).epsilon(1e-14));
    CHECK_THROWS_AS(make_potential(cfg, "px", g), ConfigError);

    Density rho = make_initial_density(cfg, "it", g);
    CHECK(integrate(rho) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("initial density families normalize their profiles") {
    Grid g = Grid::line(0.0, 1.0, 64);
    Config cfg = Config::parse_string(
        "[iu]\n"
        "kind = uniform\n"
        "[ig]\n"
        "kind = gaussian\n"
        "center0 = 0.3\n"
        "sigma0 = 0.08\n"
        "floor = 0.01\n"
        "[i2]\n"
        "kind = gaussian\n"
        "center0 = 0.3\n"
        "sigma0 = 0.08\n"
        "weight2 = 0.5\n"
        "center0_2 = 0.7\n"
        "sigma0_2 = 0.05\n"
        "[igb]\n"
        "kind = gibbs\n"
        "potential = pw\n"
        "[pw]\n"
        "kind = quadratic_well\n"
        "strength = 3\n"
        "center0 = 0.5\n");
    Density u = make_initial_density(cfg, "iu", g);
    for (int i = 0; i < 64; ++i) CHECK(u[i] == doctest::Approx(1.0).epsilon(1e-13));

    Density ga = make_initial_density(cfg, "ig", g);
    CHECK(integrate(ga) == doctest::Approx(1.0).epsilon(1e-12));
    int peak = 0;
    for (int i = 0; i < 64; ++i)
        if (ga[i] > ga[peak]) peak = i;
    CHECK(std::abs(g.mid(0, peak) - 0.3) <= g.dx[0]);

    Density two = make_initial_density(cfg, "i2", g);
    CHECK(two[44] > two[37]);  // second bump near 0.7 present

    Density gb = make_initial_density(cfg, "igb", g);
    // gibbs weights: ratio between cells is exp(-(U_i - U_j))
    ScalarField pw = make_potential(cfg, "pw", g);
    double lhs = gb[10] / gb[50];
    double rhs = std::exp(-(pw[10] - pw[50]));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("scenario validation rejects inconsistent requests") {
    auto build = [](const std::string& key, const std::string& value) {
        Config cfg = Config::parse_string(kTinyScenario);
        if (!key.empty()) cfg.set(key, value);
        return build_scenario(cfg);
    };
    CHECK_NOTHROW(build("", ""));
    CHECK_THROWS_AS(build("grid.dim", "3"), ConfigError);
    CHECK_THROWS_AS(build("model.m", "0.5"), ConfigError);
    CHECK_THROWS_AS(build("model.h", "0"), ConfigError);
    CHECK_THROWS_AS(build("model.n_steps", "-1"), ConfigError);
    CHECK_THROWS_AS(build("solver.kind", "nope"), ConfigError);
    CHECK_THROWS_AS(build("solver.measure", "nope"), ConfigError);

    // quantile solver and exact measure require one dimension
    Config cfg2 = Config::parse_string(
        "[grid]\ndim = 2\nn0 = 8\nn1 = 8\n[solver]\nkind = quantile\n");
    CHECK_THROWS_AS(build_scenario(cfg2), ConfigError);
    Config cfg3 = Config::parse_string(
        "[grid]\ndim = 2\nn0 = 8\nn1 = 8\n[solver]\nkind = entropic\nmeasure = exact\n");
    CHECK_THROWS_AS(build_scenario(cfg3), ConfigError);
}

TEST_CASE("scenario builder resolves every documented knob") {
    Config cfg = Config::parse_string(std::string(kTinyScenario) +
                                      "[diagnostics]\nlp = 2,4\nlinf = false\n"
                                      "[output]\nsnapshot_every = 2\n");
    // the appended sections merge with the template's sections
    ScenarioConfig sc = build_scenario(cfg);
    CHECK(sc.name == "tiny");
    CHECK(sc.grid.dim == 1);
    CHECK(sc.grid.n[0] == 48);
    CHECK(sc.m == 1.0);
    CHECK(sc.h == 0.01);
    CHECK(sc.n_steps == 3);
    CHECK(sc.inner.kind == InnerSolverKind::quantile_descent);
    CHECK(sc.inner.measure.mode == TransportMode::exact_1d);
    REQUIRE(sc.diag.lp_exponents.size() == 2);
    CHECK(sc.diag.lp_exponents[0] == 2.0);
    CHECK(sc.diag.lp_exponents[1] == 4.0);
    CHECK(!sc.diag.check_linf);
    CHECK(sc.snapshot_every == 2);
    CHECK(sc.stamp.config_hash == cfg.hash_hex());
    CHECK(sc.final_time() == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(sc.params().lambda == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("snapshots round-trip through both encodings") {
    Grid g = Grid::line(0.0, 2.0, 32);
    std::vector<double> uw(32), vw(32);
    for (int i = 0; i < 32; ++i) {
        double x = g.mid(0, i);
        uw[i] = 0.3 + 0.1 * std::sin(3.0 * x) + 0.2 * x;
        vw[i] = 0.4 + 0.05 * std::cos(2.0 * x) + 0.1 * x;
    }
    State z{Density::normalized(g, uw), Density::normalized(g, vw)};
    FileStamp stamp{"deadbeef01234567", "roundtrip"};
    fs::path dir = fresh_dir("snap");

    fs::path binp = dir / "snap.bin";
    write_snapshot_binary(binp.string(), z, 0.625, stamp);
    SnapshotData bin = read_snapshot(binp.string());
    CHECK(bin.grid.same_as(g));
    CHECK(bin.time == 0.625);
    for (int i = 0; i < 32; ++i) {
        CHECK(bin.z.u[i] == z.u[i]);
        CHECK(bin.z.v[i] == z.v[i]);
    }

    fs::path csvp = dir / "snap.csv";
    write_snapshot_csv(csvp.string(), z, 0.625, stamp);
    SnapshotData csv = read_snapshot(csvp.string());
    CHECK(csv.grid.same_as(g));
    CHECK(csv.time == 0.625);
    for (int i = 0; i < 32; ++i) {
        CHECK(csv.z.u[i] == z.u[i]);  // 17 significant digits reparse exactly
        CHECK(csv.z.v[i] == z.v[i]);
    }

    std::string text = slurp(csvp);
    CHECK(text.find("# name=roundtrip config_hash=deadbeef01234567") != std::string::npos);
    CHECK(text.find("x0,x1,u,v") != std::string::npos);

    CHECK_THROWS_AS(read_snapshot((dir / "missing.bin").string()), std::runtime_error);
}

TEST_CASE("scenario runs deterministically and writes every artifact") {
    Config cfg = Config::parse_string(kTinyScenario);
    ScenarioConfig sc = build_scenario(cfg);
    fs::path dir_a = fresh_dir("run_a");
    fs::path dir_b = fresh_dir("run_b");

    sc.output_dir = dir_a.string();
    RunResult ra = run_scenario(sc);
    CHECK(ra.exit_code == 0);
    CHECK(ra.all_passed);
    CHECK(ra.diagnostics_ran);
    CHECK(ra.trajectory.states.size() == 4);

    sc.output_dir = dir_b.string();
    RunResult rb = run_scenario(sc);
    CHECK(rb.exit_code == 0);

    CHECK(fs::exists(dir_a / "trajectory.csv"));
    CHECK(fs::exists(dir_a / "diagnostics.json"));
    CHECK(fs::exists(dir_a / "run.json"));
    CHECK(fs::exists(dir_a / "snapshot_000003.csv"));

    CHECK(slurp(dir_a / "trajectory.csv") == slurp(dir_b / "trajectory.csv"));
    CHECK(slurp(dir_a / "diagnostics.json") == slurp(dir_b / "diagnostics.json"));

    std::string traj = slurp(dir_a / "trajectory.csv");
    std::istringstream ts(traj);
    std::string line;
    int rows = 0;
    bool header_seen = false;
    while (std::getline(ts, line)) {
        if (line.rfind("n,t,", 0) == 0) header_seen = true;
        else if (!line.empty() && line[0] != '#') ++rows;
    }
    CHECK(header_seen);
    CHECK(rows == 4);  // states 0..3

    auto j = nlohmann::json::parse(slurp(dir_a / "run.json"));
    CHECK(j["exit_code"] == 0);
    CHECK(j["steps_completed"] == 3);
    CHECK(j["config_hash"] == cfg.hash_hex());
    CHECK(j["diagnostics_all_passed"] == true);

    auto dj = nlohmann::json::parse(slurp(dir_a / "diagnostics.json"));
    CHECK(dj["schema_version"] == 1);
    CHECK(dj["all_passed"] == true);
    CHECK(dj["energy"]["monotone"] == true);
    CHECK(dj["mass"]["ok"] == true);
    CHECK(dj["linf"]["p"] == "inf");
    CHECK(dj["ibp_gap"].get<double>() <= 1e-8);
}

TEST_CASE("oracle comparison is recorded when enabled") {
    Config cfg = Config::parse_string(std::string(kTinyScenario) +
                                      "[oracle]\nenabled = true\n");
    ScenarioConfig sc = build_scenario(cfg);
    fs::path dir = fresh_dir("oracle");
    sc.output_dir = dir.string();
    RunResult res = run_scenario(sc);
    CHECK(res.exit_code == 0);
    CHECK(res.oracle_ran);
    CHECK(res.oracle_gap.gap_u >= 0.0);
    CHECK(res.oracle_gap.gap_u <= 0.1);
    auto j = nlohmann::json::parse(slurp(dir / "run.json"));
    CHECK(j.contains("oracle"));
    CHECK(j["oracle"]["gap_u"].get<double>() >= 0.0);
}

TEST_CASE("binary snapshot cadence writes the requested files") {
    Config cfg = Config::parse_string(std::string(kTinyScenario) +
                                      "[output]\nsnapshot_every = 2\nbinary_snapshots = true\n");
    cfg.set("diagnostics.enabled", "false");
    ScenarioConfig sc = build_scenario(cfg);
    fs::path dir = fresh_dir("cadence");
    sc.output_dir = dir.string();
    RunResult res = run_scenario(sc);
    CHECK(res.exit_code == 0);
    CHECK(!res.diagnostics_ran);
    CHECK(fs::exists(dir / "snapshot_000000.bin"));
    CHECK(fs::exists(dir / "snapshot_000002.bin"));
    CHECK(fs::exists(dir / "snapshot_000003.bin"));  // final always written
    CHECK(!fs::exists(dir / "snapshot_000001.bin"));
    CHECK(!fs::exists(dir / "diagnostics.json"));
    SnapshotData snap = read_snapshot((dir / "snapshot_000003.bin").string());
    CHECK(snap.time == doctest::Approx(0.03).epsilon(1e-15));
}

TEST_CASE("sweep isolates failures per row") {
    Config cfg = Config::parse_string(kTinyScenario);
    fs::path root = fresh_dir("sweep");

    std::vector<SweepRow> empty = run_sweep(cfg, "model.h", {}, root.string());
    CHECK(empty.empty());

    std::vector<SweepRow> rows =
        run_sweep(cfg, "model.h", {"0.01", "0.02", "bogus"}, root.string());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].exit_code == 0);
    CHECK(rows[1].exit_code == 0);
    CHECK(rows[2].exit_code == 1);
    CHECK(!rows[2].error.empty());
    CHECK(std::isfinite(rows[0].e_final));
    CHECK(fs::exists(root / "model.h=0.01" / "trajectory.csv"));
    CHECK(fs::exists(root / "model.h=0.02" / "run.json"));

    std::string csv = sweep_summary_csv("model.h", rows, FileStamp{"abc", "tiny"});
    CHECK(csv.find("axis,value,exit_code") != std::string::npos);
    CHECK(csv.find("model.h,0.01,0,") != std::string::npos);
    CHECK(csv.find("model.h,bogus,1,") != std::string::npos);
}

TEST_CASE("relative output directories honor the environment root") {
    unsetenv("PNPFLOW_OUTPUT_ROOT");
    CHECK(resolve_output_dir("out") == "out");
    CHECK(resolve_output_dir("/abs/path") == "/abs/path");
    setenv("PNPFLOW_OUTPUT_ROOT", "/tmp/pnpflow_root", 1);
    CHECK(resolve_output_dir("out") == "/tmp/pnpflow_root/out");
    CHECK(resolve_output_dir("/abs/path") == "/abs/path");
    unsetenv("PNPFLOW_OUTPUT_ROOT");
}

TEST_SUITE_END();
