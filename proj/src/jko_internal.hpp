#pragma once

#include "pnpflow/jko.hpp"
#include "pnpflow/poisson.hpp"
#include "pnpflow/transport.hpp"

#include <memory>
#include <vector>

namespace pnpflow {

// Warm-start data carried across steps of one trajectory.
class StepWorkspace {
public:
    std::unique_ptr<LogKernel> kernel;
    std::vector<double> fu, gu, fv, gv;      // entropic dual potentials
    std::vector<double> log_u, log_v;        // entropic density iterates
    std::vector<double> psi_warm;
    bool warm = false;
};

struct InnerResult {
    std::vector<double> u, v;  // candidate cell densities, unit mass
    int sweeps = 0;
    double last_decrease = 0;
    bool converged = true;
};

InnerResult entropic_prox_solve(const Grid& g, const ModelParams& p, const ScalarField& U,
                                const ScalarField& V, const State& z_prev,
                                const InnerSolverConfig& cfg, StepWorkspace& ws);

InnerResult quantile_descent_solve(const Grid& g, const ModelParams& p, const ScalarField& U,
                                   const ScalarField& V, const State& z_prev,
                                   const InnerSolverConfig& cfg, StepWorkspace& ws);

PoissonSolution solve_psi(const Grid& g, const std::vector<double>& u,
                          const std::vector<double>& v, StepWorkspace& ws);

}  // namespace pnpflow
