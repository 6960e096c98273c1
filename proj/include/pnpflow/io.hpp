#pragma once

#include "pnpflow/diagnostics.hpp"
#include "pnpflow/jko.hpp"

#include <string>

namespace pnpflow {

inline constexpr int kArtifactVersion = 1;

// Shortest round-trip decimal form of a double (17 significant digits).
std::string format_double(double v);

// Write-to-temp + rename so readers never observe partial files.
void write_text_atomic(const std::string& path, const std::string& content);

struct FileStamp {
    std::string config_hash;  // hex digest of the canonical config
    std::string name;         // scenario name
};

// One row per trajectory state: step index, time, energy split, step
// distance, masses, norms, second moments, inner residual.
std::string trajectory_csv(const Trajectory& traj, const FileStamp& stamp);
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const FileStamp& stamp);

// Density snapshot: commented header with the grid spec, then one row per
// cell (coordinates, u, v).
std::string snapshot_csv(const State& z, double t, const FileStamp& stamp);
void write_snapshot_csv(const std::string& path, const State& z, double t,
                        const FileStamp& stamp);

// Binary snapshot: magic, version, grid spec, row-major u then v.
void write_snapshot_binary(const std::string& path, const State& z, double t,
                           const FileStamp& stamp);
struct SnapshotData {
    Grid grid;
    double time = 0.0;
    State z;
};
SnapshotData read_snapshot(const std::string& path);  // understands both encodings

std::string diagnostics_json(const DiagnosticsReport& rep, const FileStamp& stamp);
void write_diagnostics_json(const std::string& path, const DiagnosticsReport& rep,
                            const FileStamp& stamp);

}  // namespace pnpflow
