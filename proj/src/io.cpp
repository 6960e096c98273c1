#include "pnpflow/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pnpflow {

namespace {

constexpr char kBinaryMagic[8] = {'P', 'N', 'P', 'S', 'N', 'A', 'P', '1'};

std::string stamp_lines(const char* kind, const FileStamp& stamp) {
    std::ostringstream os;
    os << "# pnpflow " << kind << " v" << kArtifactVersion << "\n";
    os << "# name=" << stamp.name << " config_hash=" << stamp.config_hash << "\n";
    return os.str();
}

nlohmann::json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

nlohmann::json lp_json(const LpPropagationReport& r) {
    return {{"p", finite_or_string(r.p)},
            {"applicable", r.applicable},
            {"per_step_factor", finite_or_string(r.per_step_factor)},
            {"per_step_ok", r.per_step_ok},
            {"min_per_step_slack", finite_or_string(r.min_per_step_slack)},
            {"cumulative_constant", r.cumulative_constant}};
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string trajectory_csv(const Trajectory& traj, const FileStamp& stamp) {
    std::ostringstream os;
    os << stamp_lines("trajectory", stamp);
    os << "n,t,e_diff,e_ext,e_cpl,e_total,step_d2,mass_u,mass_v,l2_u,l2_v,linf_u,linf_v,"
          "m2_u,m2_v,inner_residual,sweeps,backtracked\n";
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        const State& z = traj.states[n];
        const Grid& g = z.u.grid();
        const std::array<double, 2> c{0.5 * (g.lower[0] + g.upper[0]),
                                      0.5 * (g.lower[1] + g.upper[1])};
        const EnergyBreakdown e = n == 0 ? traj.initial_energy : traj.reports[n - 1].energy;
        const double d2 = n == 0 ? 0.0 : traj.reports[n - 1].step_distance_sq;
        const double res = n == 0 ? 0.0 : traj.reports[n - 1].inner_residual;
        const int sweeps = n == 0 ? 0 : traj.reports[n - 1].inner_iterations;
        const int back = n == 0 ? 0 : traj.reports[n - 1].backtracked;
        os << n << "," << format_double(traj.time_of(static_cast<int>(n))) << ","
           << format_double(e.diff) << "," << format_double(e.ext) << ","
           << format_double(e.cpl) << "," << format_double(e.total) << ","
           << format_double(d2) << "," << format_double(integrate(z.u)) << ","
           << format_double(integrate(z.v)) << "," << format_double(lp_norm(z.u, 2)) << ","
           << format_double(lp_norm(z.v, 2)) << ","
           << format_double(lp_norm(z.u, std::numeric_limits<double>::infinity())) << ","
           << format_double(lp_norm(z.v, std::numeric_limits<double>::infinity())) << ","
           << format_double(second_moment(z.u, c)) << "," << format_double(second_moment(z.v, c))
           << "," << format_double(res) << "," << sweeps << "," << back << "\n";
    }
    return os.str();
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const FileStamp& stamp) {
    write_text_atomic(path, trajectory_csv(traj, stamp));
}

std::string snapshot_csv(const State& z, double t, const FileStamp& stamp) {
    const Grid& g = z.u.grid();
    std::ostringstream os;
    os << stamp_lines("snapshot", stamp);
    os << "# t=" << format_double(t) << "\n";
    os << "# dim=" << g.dim << " n0=" << g.n[0] << " n1=" << g.n[1]
       << " lower0=" << format_double(g.lower[0]) << " upper0=" << format_double(g.upper[0])
       << " lower1=" << format_double(g.lower[1]) << " upper1=" << format_double(g.upper[1])
       << "\n";
    os << "x0,x1,u,v\n";
    for (int iy = 0; iy < g.n[1]; ++iy)
        for (int ix = 0; ix < g.n[0]; ++ix) {
            const int i = g.index(ix, iy);
            os << format_double(g.mid(0, ix)) << "," << format_double(g.mid(1, iy)) << ","
               << format_double(z.u[i]) << "," << format_double(z.v[i]) << "\n";
        }
    return os.str();
}

void write_snapshot_csv(const std::string& path, const State& z, double t,
                        const FileStamp& stamp) {
    write_text_atomic(path, snapshot_csv(z, t, stamp));
}

void write_snapshot_binary(const std::string& path, const State& z, double t,
                           const FileStamp& stamp) {
    const Grid& g = z.u.grid();
    std::ostringstream os(std::ios::binary);
    os.write(kBinaryMagic, sizeof kBinaryMagic);
    const std::int32_t version = kArtifactVersion;
    auto put_i32 = [&os](std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_f64 = [&os](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    put_i32(version);
    char hash[17] = {0};
    std::strncpy(hash, stamp.config_hash.c_str(), 16);
    os.write(hash, 16);
    put_i32(g.dim);
    put_i32(g.n[0]);
    put_i32(g.n[1]);
    put_f64(g.lower[0]);
    put_f64(g.upper[0]);
    put_f64(g.lower[1]);
    put_f64(g.upper[1]);
    put_f64(t);
    for (int i = 0; i < g.total(); ++i) put_f64(z.u[i]);
    for (int i = 0; i < g.total(); ++i) put_f64(z.v[i]);
    write_text_atomic(path, os.str());
}

namespace {

SnapshotData read_snapshot_binary(std::ifstream& in) {
    auto get_i32 = [&in]() {
        std::int32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get_f64 = [&in]() {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    const std::int32_t version = get_i32();
    if (version != kArtifactVersion) throw std::runtime_error("snapshot: unknown version");
    char hash[16];
    in.read(hash, 16);
    const int dim = get_i32(), n0 = get_i32(), n1 = get_i32();
    const double lo0 = get_f64(), hi0 = get_f64(), lo1 = get_f64(), hi1 = get_f64();
    SnapshotData snap;
    snap.time = get_f64();
    snap.grid = dim == 1 ? Grid::line(lo0, hi0, n0) : Grid::box(lo0, hi0, n0, lo1, hi1, n1);
    std::vector<double> u(snap.grid.total()), v(snap.grid.total());
    for (double& x : u) x = get_f64();
    for (double& x : v) x = get_f64();
    if (!in) throw std::runtime_error("snapshot: truncated binary file");
    snap.z = State{Density(snap.grid, u), Density(snap.grid, v)};
    return snap;
}

double header_field(const std::string& line, const std::string& key) {
    const auto pos = line.find(key + "=");
    if (pos == std::string::npos)
        throw std::runtime_error("snapshot: missing header field " + key);
    return std::stod(line.substr(pos + key.size() + 1));
}

}  // namespace

SnapshotData read_snapshot(const std::string& path) {
    if (std::filesystem::is_directory(path))
        throw std::runtime_error("snapshot path is a directory (expected a snapshot_*.csv file): " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot: " + path);
    char magic[8];
    in.read(magic, 8);
    if (in && std::memcmp(magic, kBinaryMagic, 8) == 0) return read_snapshot_binary(in);

    in.clear();
    in.seekg(0);
    SnapshotData snap;
    std::string line, grid_line;
    while (std::getline(in, line)) {
        if (line.rfind("# t=", 0) == 0) snap.time = std::stod(line.substr(4));
        if (line.rfind("# dim=", 0) == 0) grid_line = line;
        if (!line.empty() && line[0] != '#') break;  // column header row
    }
    if (grid_line.empty()) throw std::runtime_error("snapshot: missing grid header in " + path);
    const int dim = static_cast<int>(header_field(grid_line, "dim"));
    const int n0 = static_cast<int>(header_field(grid_line, "n0"));
    const int n1 = static_cast<int>(header_field(grid_line, "n1"));
    snap.grid = dim == 1 ? Grid::line(header_field(grid_line, "lower0"),
                                      header_field(grid_line, "upper0"), n0)
                         : Grid::box(header_field(grid_line, "lower0"),
                                     header_field(grid_line, "upper0"), n0,
                                     header_field(grid_line, "lower1"),
                                     header_field(grid_line, "upper1"), n1);
    std::vector<double> u, v;
    u.reserve(snap.grid.total());
    v.reserve(snap.grid.total());
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string tok;
        std::vector<double> cols;
        while (std::getline(row, tok, ',')) cols.push_back(std::stod(tok));
        if (cols.size() != 4) throw std::runtime_error("snapshot: malformed row in " + path);
        u.push_back(cols[2]);
        v.push_back(cols[3]);
    }
    if (static_cast<int>(u.size()) != snap.grid.total())
        throw std::runtime_error("snapshot: wrong cell count in " + path);
    snap.z = State{Density(snap.grid, u), Density(snap.grid, v)};
    return snap;
}

std::string diagnostics_json(const DiagnosticsReport& rep, const FileStamp& stamp) {
    nlohmann::json j;
    j["schema_version"] = rep.schema_version;
    j["artifact_version"] = kArtifactVersion;
    j["name"] = stamp.name;
    j["config_hash"] = stamp.config_hash;
    j["energy"] = {{"monotone", rep.energy_monotone},
                   {"max_violation", rep.energy_max_violation}};
    j["square_distance"] = {{"ok", rep.square_distance_ok},
                            {"slack", finite_or_string(rep.square_distance_slack)}};
    j["holder_constant"] = rep.holder_constant;
    j["lp"] = nlohmann::json::array();
    for (const auto& l : rep.lp) j["lp"].push_back(lp_json(l));
    j["linf"] = lp_json(rep.linf);
    j["weak_form"] = {{"residual_u", rep.weak.residual_u},
                      {"residual_v", rep.weak.residual_v},
                      {"max_u", rep.weak.max_u},
                      {"max_v", rep.weak.max_v}};
    j["ibp_gap"] = rep.ibp_gap;
    j["el_max"] = rep.el_max;
    j["moments"] = {{"sup_second_moment", rep.moments.sup_second_moment},
                    {"sup_abs_entropy", rep.moments.sup_abs_entropy},
                    {"bounded", rep.moments.bounded}};
    j["mass"] = {{"ok", rep.mass_ok}, {"max_defect", rep.max_mass_defect}};
    j["all_passed"] = rep.all_passed;
    return j.dump(2) + "\n";
}

void write_diagnostics_json(const std::string& path, const DiagnosticsReport& rep,
                            const FileStamp& stamp) {
    write_text_atomic(path, diagnostics_json(rep, stamp));
}

}  // namespace pnpflow
