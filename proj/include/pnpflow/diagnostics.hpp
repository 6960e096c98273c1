#pragma once

#include "pnpflow/jko.hpp"
#include "pnpflow/test_functions.hpp"
#include "pnpflow/transport.hpp"

#include <string>
#include <vector>

namespace pnpflow {

// Per-exponent norm-growth report. The per-step bound multiplies the sum of
// p-th powers by 1/(1 - lambda (p-1) h) each step and requires h below
// 1/(lambda (p-1)); the cumulative constant compares the sum of norms
// against exp(lambda t) growth and is defined for every p including inf.
struct LpPropagationReport {
    double p = 2.0;
    bool applicable = true;       // per-step bound meaningful for this (p, h)
    double per_step_factor = 1.0;
    bool per_step_ok = true;
    double min_per_step_slack = 0.0;  // min over steps of bound - value
    double cumulative_constant = 0.0; // max_n (S(t_n) / (e^{lambda t_n} S(0)))
};

LpPropagationReport check_lp_propagation(const Trajectory& traj, double p);

// Time-integrated weak-form mismatch per test function: difference between
// the change of the phi-moment over the whole trajectory and the implicit
// quadrature of the diffusion + drift + coupling terms.
struct WeakFormReport {
    std::vector<double> residual_u, residual_v;
    double max_u = 0.0, max_v = 0.0;
};

WeakFormReport check_weak_form(const Trajectory& traj, const ScalarField& U,
                               const ScalarField& V, const std::vector<BumpField>& phis);

struct OracleComparison {
    double gap_u = 0.0, gap_v = 0.0;  // L1 distances at the probe time
};

OracleComparison compare_to_oracle(const Trajectory& traj, const State& oracle_final, double t);

// Least-squares constant through the origin for
//   d(z(t1), z(t2)) <= C sqrt(|t2 - t1| + h)
// over state pairs with t2 - t1 <= T/4 (subsampled to bound the pair count).
double fit_holder_constant(const Trajectory& traj, const TransportConfig& measure);

struct MomentReport {
    double sup_second_moment = 0.0;  // about the domain center, both species
    double sup_abs_entropy = 0.0;    // sup_n of sum rho |log rho| dV (m = 1 reading)
    bool bounded = true;
};

MomentReport check_moments(const Trajectory& traj);

struct DiagnosticsOptions {
    std::vector<double> lp_exponents{2.0};
    bool check_linf = true;
    bool weak_form = true;
    bool euler_lagrange = false;  // 1-D exact-mode runs only
    TransportConfig measure;      // distance used for the Holder fit
    bool holder = true;
};

struct DiagnosticsReport {
    int schema_version = 1;
    bool energy_monotone = true;
    double energy_max_violation = 0.0;
    bool square_distance_ok = true;
    double square_distance_slack = 0.0;  // rhs - lhs of the telescoped bound
    double holder_constant = 0.0;
    std::vector<LpPropagationReport> lp;
    LpPropagationReport linf;
    WeakFormReport weak;
    double ibp_gap = 0.0;  // worst relative gap over the trajectory's states
    std::vector<double> el_max;  // per-step max of the two species residuals
    bool moments_bounded = true;
    MomentReport moments;
    bool mass_ok = true;
    double max_mass_defect = 0.0;
    bool all_passed = true;
};

DiagnosticsReport run_diagnostics(const Trajectory& traj, const ScalarField& U,
                                  const ScalarField& V, const DiagnosticsOptions& opt = {});

}  // namespace pnpflow
