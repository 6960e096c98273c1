#include "pnpflow/jko.hpp"

#include "jko_internal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace pnpflow {

const State& Trajectory::at_time(double t) const {
    if (states.empty()) throw std::logic_error("Trajectory::at_time: empty trajectory");
    if (t <= 0.0) return states.front();
    const auto n = static_cast<std::size_t>(t / params.h);
    return states[std::min(n, states.size() - 1)];
}

JKOSolver::JKOSolver(const Grid& g, const ModelParams& p, const ScalarField& U,
                     const ScalarField& V, const InnerSolverConfig& cfg)
    : grid_(g), params_(p), U_(U), V_(V), cfg_(cfg), ws_(std::make_unique<StepWorkspace>()) {
    require_same_grid(g, U.grid, "JKOSolver");
    require_same_grid(g, V.grid, "JKOSolver");
}

JKOSolver::~JKOSolver() = default;

JKOStepReport JKOSolver::step(const State& z_prev) {
    require_same_grid(grid_, z_prev.u.grid(), "JKOSolver::step");
    require_same_grid(grid_, z_prev.v.grid(), "JKOSolver::step");

    const InnerResult inner = cfg_.kind == InnerSolverKind::entropic_prox
                                  ? entropic_prox_solve(grid_, params_, U_, V_, z_prev, cfg_, *ws_)
                                  : quantile_descent_solve(grid_, params_, U_, V_, z_prev, cfg_, *ws_);

    const double e_prev = total_energy(z_prev, params_, U_, V_).total;
    const double slack = 1e-12 * (1.0 + std::abs(e_prev));

    JKOStepReport rep;
    rep.inner_iterations = inner.sweeps;
    rep.inner_residual = inner.last_decrease;
    rep.converged = inner.converged;

    auto measure = [&](const std::vector<double>& uu, const std::vector<double>& vv) {
        State z{Density(grid_, uu), Density(grid_, vv)};
        const double d2 = product_distance_sq(z, z_prev, cfg_.measure);
        const EnergyBreakdown e = total_energy(z, params_, U_, V_);
        return std::make_tuple(std::move(z), d2, e);
    };

    auto [z_cand, d2, e] = measure(inner.u, inner.v);

    // The movement functional at the previous state equals E(z_prev); a valid
    // minimizer can never exceed it. If the inner solve overshoots (coarse
    // epsilon, stalled descent), pull the candidate back along the segment
    // toward z_prev: the functional is convex there, so some interpolate is
    // admissible — in the worst case z_prev itself.
    double f_val = d2 / (2.0 * params_.h) + e.total;
    if (!(f_val <= e_prev + slack)) {
        rep.backtracked = true;
        const int n = grid_.total();
        std::vector<double> mu(n), mv(n);
        bool accepted = false;
        double theta = 0.5;
        for (int k = 0; k < 12 && !accepted; ++k, theta *= 0.5) {
            for (int i = 0; i < n; ++i) {
                mu[i] = (1.0 - theta) * z_prev.u[i] + theta * inner.u[i];
                mv[i] = (1.0 - theta) * z_prev.v[i] + theta * inner.v[i];
            }
            auto [z_t, d2_t, e_t] = measure(mu, mv);
            const double f_t = d2_t / (2.0 * params_.h) + e_t.total;
            if (f_t <= e_prev + slack) {
                z_cand = std::move(z_t);
                d2 = d2_t;
                e = e_t;
                f_val = f_t;
                accepted = true;
            }
        }
        if (!accepted) {
            z_cand = z_prev;
            d2 = 0.0;
            e = total_energy(z_prev, params_, U_, V_);
            f_val = e.total;
        }
    }

    rep.z_next = std::move(z_cand);
    rep.F_h_value = f_val;
    rep.energy = e;
    rep.step_distance_sq = d2;
    return rep;
}

JKOStepReport jko_step(const State& z_prev, const ModelParams& p, const ScalarField& U,
                       const ScalarField& V, const InnerSolverConfig& cfg) {
    JKOSolver solver(z_prev.u.grid(), p, U, V, cfg);
    return solver.step(z_prev);
}

Trajectory run_trajectory(const State& z0, const ModelParams& p, const ScalarField& U,
                          const ScalarField& V, int n_steps, const InnerSolverConfig& cfg) {
    if (n_steps < 0) throw std::invalid_argument("run_trajectory: n_steps < 0");
    Trajectory tr;
    tr.params = p;
    tr.initial_energy = total_energy(z0, p, U, V);
    tr.states.push_back(z0);
    JKOSolver solver(z0.u.grid(), p, U, V, cfg);
    for (int s = 0; s < n_steps; ++s) {
        JKOStepReport rep = solver.step(tr.states.back());
        tr.states.push_back(rep.z_next);
        tr.reports.push_back(std::move(rep));
    }
    return tr;
}

namespace {

double species_residual(const Density& prev, const Density& next, double m, double h,
                        const std::vector<double>& drift_slope,
                        const std::vector<BumpVectorField>& zetas) {
    const Grid& g = prev.grid();
    const int mi = 4 * g.n[0];
    const double dq = 1.0 / mi;
    CdfSampler sp(prev), sn(next);
    std::vector<double> xp(mi), xn(mi);
    for (int k = 0; k < mi; ++k) {
        const double q = (k + 0.5) * dq;
        xp[k] = sp.inv(q);
        xn[k] = sn.inv(q);
    }
    double worst = 0.0;
    for (const auto& zeta : zetas) {
        double lhs = 0.0, comp = 0.0;
        for (int k = 0; k < mi; ++k) {
            const double term = (xn[k] - xp[k]) * zeta.value({xn[k], 0.5})[0];
            const double y = term - comp, t = lhs + y;
            comp = (t - lhs) - y;
            lhs = t;
        }
        lhs *= dq / h;
        double rhs = 0.0;
        comp = 0.0;
        for (int i = 0; i < g.n[0]; ++i) {
            const std::array<double, 2> x{g.mid(0, i), 0.5};
            const double term = (std::pow(next[i], m) * zeta.divergence(x) -
                                 next[i] * drift_slope[i] * zeta.value(x)[0]) *
                                g.cell_volume;
            const double y = term - comp, t = rhs + y;
            comp = (t - rhs) - y;
            rhs = t;
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace

std::pair<double, double> euler_lagrange_residual(const State& z_prev, const State& z_next,
                                                  const ModelParams& p, const ScalarField& U,
                                                  const ScalarField& V,
                                                  const std::vector<BumpVectorField>& zetas) {
    const Grid& g = z_prev.u.grid();
    if (g.dim != 1)
        throw std::invalid_argument("euler_lagrange_residual: 1-D grids only");
    ScalarField charge = state_charge(z_next);
    PoissonSolution psi = solve_poisson_neumann(charge);
    const auto gu = cell_gradients(g, U.values);
    const auto gv = cell_gradients(g, V.values);

    std::vector<double> drift_u(g.n[0]), drift_v(g.n[0]);
    for (int i = 0; i < g.n[0]; ++i) {
        drift_u[i] = gu[i][0] + psi.grad_cell[i][0];
        drift_v[i] = gv[i][0] - psi.grad_cell[i][0];
    }
    const double ru = species_residual(z_prev.u, z_next.u, p.m, p.h, drift_u, zetas);
    const double rv = species_residual(z_prev.v, z_next.v, p.m, p.h, drift_v, zetas);
    return {ru, rv};
}

}  // namespace pnpflow
