#pragma once

#include "pnpflow/grid.hpp"

namespace pnpflow {

enum class TransportMode { exact_1d, entropic };

struct TransportResult {
    double cost = 0.0;
    TransportMode mode = TransportMode::exact_1d;
    std::vector<double> map;   // exact_1d: monotone map sampled at cell midpoints
    std::vector<double> plan;  // entropic with keep_plan, small problems: row-major coupling
    double epsilon = 0.0;
    int iterations = 0;
    double marginal_error = 0.0;
    bool converged = true;
};

// Piecewise-linear CDF of a 1-D density and its inverse; shared between the
// exact solver and the map-parametrized inner solver.
class CdfSampler {
public:
    explicit CdfSampler(const Density& rho);
    double cdf(double x) const;
    double inv(double q) const;  // left-continuous inverse, q in [0,1]

private:
    const Grid grid_;
    std::vector<double> cum_;  // cumulative mass at cell right edges, cum_[n-1] = 1
    std::vector<double> rho_;
};

// Inverse CDF at k/M for k = 0..M: M transport intervals of equal mass 1/M.
std::vector<double> inverse_cdf_edges(const Density& rho, int m_intervals);

// Mass-conservative rasterization of the interval representation back onto
// the grid (each interval carries mass 1/M spread uniformly).
std::vector<double> density_from_edges(const Grid& g, const std::vector<double>& edges);

TransportResult w2_exact_1d(const Density& mu, const Density& nu);

struct SinkhornConfig {
    double epsilon = 0.0;  // <= 0: 1e-3 * squared domain diameter
    int max_iter = 20000;
    double marginal_tol = 1e-7;  // L1 defect of the relaxed marginal
    bool keep_plan = false;
};

TransportResult sinkhorn_w2(const Density& mu, const Density& nu,
                            const SinkhornConfig& cfg = {});

struct TransportConfig {
    TransportMode mode = TransportMode::exact_1d;
    SinkhornConfig sinkhorn;
};

double w2_distance_sq(const Density& mu, const Density& nu, const TransportConfig& cfg);
double product_distance_sq(const State& z, const State& z_prev, const TransportConfig& cfg);

struct PushforwardCheck {
    double l1_defect = 0;
    bool monotone = true;
};
PushforwardCheck brenier_map_pushforward_check(const Density& mu, const Density& nu,
                                               const std::vector<double>& map);

// log sum_j exp(in[j] - |x_i - x_j|^2 / eps) over the cells of one grid,
// evaluated for every i; 2-D applies the two axes separately.
class LogKernel {
public:
    LogKernel(const Grid& g, double epsilon);
    void apply(const std::vector<double>& in, std::vector<double>& out) const;
    double epsilon() const { return eps_; }

private:
    Grid grid_;
    double eps_;
    std::vector<double> cx_, cy_;       // per-axis pairwise costs / eps
    mutable std::vector<double> tmp_;   // 2-D intermediate
};

double default_epsilon(const Grid& g);

}  // namespace pnpflow
