#include "jko_internal.hpp"

#include "pnpflow/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pnpflow {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Solve eps*(t + log_dv - sigma) + 2h*(mp*exp((m-1)t) + w) = 0 for t = log(rho).
// The left side is strictly increasing and convex in t, so safeguarded Newton
// from a bracketing interval always converges.
double prox_log_density(double sigma, double w, double log_dv, double m, double mp, double h,
                        double eps, double t0) {
    const double a = eps;
    const double b = 2.0 * h * mp;
    const double c = m - 1.0;
    const double d = eps * (log_dv - sigma) + 2.0 * h * w;
    auto phi = [&](double t) { return a * t + b * std::exp(c * t) + d; };

    double lo = t0, hi = t0;
    double step = 1.0;
    while (phi(lo) > 0.0) {
        lo -= step;
        step *= 2.0;
        if (lo < -1e6) return lo;
    }
    step = 1.0;
    while (phi(hi) < 0.0) {
        hi += step;
        step *= 2.0;
        if (hi > 1e6) throw std::runtime_error("prox_log_density: no finite root");
    }
    double t = std::clamp(t0, lo, hi);
    for (int it = 0; it < 100; ++it) {
        const double f = phi(t);
        if (std::abs(f) < 1e-14 * (1.0 + std::abs(a * t) + std::abs(d))) break;
        if (f > 0.0) hi = t; else lo = t;
        const double df = a + b * c * std::exp(c * t);
        double t_new = t - f / df;
        if (!(t_new > lo && t_new < hi)) t_new = 0.5 * (lo + hi);
        if (std::abs(t_new - t) < 1e-15 * (1.0 + std::abs(t))) { t = t_new; break; }
        t = t_new;
    }
    return t;
}

struct BlockResult {
    double value = 0;     // entropic transport cost against the block's anchor
    int iterations = 0;
    bool converged = false;
};

// One semi-relaxed scaling solve: the anchor marginal (log weights `lb`) is
// enforced exactly by the g-update, the free marginal comes from the per-cell
// proximal condition. Frozen drift w = external + coupling potential.
BlockResult block_prox(const Grid& grid, const LogKernel& kernel, const std::vector<double>& lb,
                       const std::vector<double>& w_pot, const ModelParams& p, double eps,
                       const InnerSolverConfig& cfg, std::vector<double>& log_rho,
                       std::vector<double>& f, std::vector<double>& g) {
    const int n = grid.total();
    const double log_dv = std::log(grid.cell_volume);
    std::vector<double> scratch(n), sigma(n), tau(n), g_new(n);
    BlockResult out;

    for (int j = 0; j < n; ++j) {
        if (lb[j] == kNegInf) g[j] = kNegInf;
        else if (g[j] == kNegInf) g[j] = 0.0;
    }

    for (int it = 1; it <= cfg.max_kernel_iters; ++it) {
        out.iterations = it;
        for (int j = 0; j < n; ++j) scratch[j] = g[j] / eps;
        kernel.apply(scratch, sigma);
        if (p.m == 1.0) {
            const double denom = 2.0 * p.h + eps;
            for (int i = 0; i < n; ++i)
                log_rho[i] = (eps * (sigma[i] - log_dv) - 2.0 * p.h * (1.0 + w_pot[i])) / denom;
        } else {
            for (int i = 0; i < n; ++i)
                log_rho[i] = prox_log_density(sigma[i], w_pot[i], log_dv, p.m, p.m_prime, p.h,
                                              eps, log_rho[i]);
        }
        for (int i = 0; i < n; ++i) f[i] = eps * (log_rho[i] + log_dv - sigma[i]);

        for (int i = 0; i < n; ++i) scratch[i] = f[i] / eps;
        kernel.apply(scratch, tau);
        double err = 0.0, gmax = 0.0;
        for (int j = 0; j < n; ++j) {
            if (lb[j] == kNegInf) { g_new[j] = kNegInf; continue; }
            g_new[j] = eps * (lb[j] - tau[j]);
            err = std::max(err, std::abs(g_new[j] - g[j]));
            gmax = std::max(gmax, std::abs(g_new[j]));
        }
        g.swap(g_new);
        if (err <= cfg.kernel_tol * (1.0 + gmax)) {
            out.converged = true;
            break;
        }
    }

    double acc = 0.0, comp = 0.0, mass = 0.0, mcomp = 0.0;
    const double dv = grid.cell_volume;
    for (int i = 0; i < n; ++i) {
        const double rho = std::exp(log_rho[i]);
        double term = f[i] * rho * dv;
        if (g[i] != kNegInf) term += g[i] * std::exp(lb[i]);
        const double y = term - comp, t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        const double ym = rho * dv - mcomp, tm = mass + ym;
        mcomp = (tm - mass) - ym;
        mass = tm;
    }
    out.value = acc - eps * mass;
    return out;
}

std::vector<double> log_weights(const Grid& grid, const Density& d) {
    std::vector<double> lb(grid.total());
    const double log_dv = std::log(grid.cell_volume);
    for (int i = 0; i < grid.total(); ++i)
        lb[i] = d[i] > 0.0 ? std::log(d[i]) + log_dv : kNegInf;
    return lb;
}

void renormalize_log(const Grid& grid, std::vector<double>& log_rho, std::vector<double>& rho) {
    rho.resize(log_rho.size());
    for (size_t i = 0; i < log_rho.size(); ++i) rho[i] = std::exp(log_rho[i]);
    const double mass = kahan_sum(rho) * grid.cell_volume;
    if (!(mass > 0.0)) throw std::runtime_error("entropic prox produced zero mass");
    const double shift = std::log(mass);
    for (size_t i = 0; i < log_rho.size(); ++i) {
        log_rho[i] -= shift;
        rho[i] /= mass;
    }
}

}  // namespace

PoissonSolution solve_psi(const Grid& g, const std::vector<double>& u,
                          const std::vector<double>& v, StepWorkspace& ws) {
    ScalarField charge(g);
    for (size_t i = 0; i < u.size(); ++i) charge.values[i] = u[i] - v[i];
    PoissonOptions opt;
    if (ws.psi_warm.size() == u.size()) opt.initial_guess = &ws.psi_warm;
    PoissonSolution sol = solve_poisson_neumann(charge, opt);
    ws.psi_warm = sol.psi.values;
    return sol;
}

InnerResult entropic_prox_solve(const Grid& grid, const ModelParams& p, const ScalarField& U,
                                const ScalarField& V, const State& z_prev,
                                const InnerSolverConfig& cfg, StepWorkspace& ws) {
    const int n = grid.total();
    const double eps = cfg.epsilon > 0.0 ? cfg.epsilon : default_epsilon(grid);
    if (!ws.kernel || ws.kernel->epsilon() != eps) ws.kernel = std::make_unique<LogKernel>(grid, eps);

    const std::vector<double> lbu = log_weights(grid, z_prev.u);
    const std::vector<double> lbv = log_weights(grid, z_prev.v);

    auto init_logs = [n](std::vector<double>& lr, const Density& d) {
        lr.resize(n);
        for (int i = 0; i < n; ++i) lr[i] = std::log(std::max(d[i], 1e-300));
    };
    if (!ws.warm || static_cast<int>(ws.log_u.size()) != n) {
        init_logs(ws.log_u, z_prev.u);
        init_logs(ws.log_v, z_prev.v);
        ws.fu.assign(n, 0.0);
        ws.gu.assign(n, 0.0);
        ws.fv.assign(n, 0.0);
        ws.gv.assign(n, 0.0);
    }

    std::vector<double> u(z_prev.u.values()), v(z_prev.v.values()), w_pot(n);
    PoissonSolution psi = solve_psi(grid, u, v, ws);

    InnerResult res;
    double f_prev = std::numeric_limits<double>::infinity();
    double val_u = 0.0, val_v = 0.0;
    res.converged = false;
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        res.sweeps = sweep;
        for (int i = 0; i < n; ++i) w_pot[i] = U[i] + psi.psi[i];
        val_u = block_prox(grid, *ws.kernel, lbu, w_pot, p, eps, cfg, ws.log_u, ws.fu, ws.gu).value;
        renormalize_log(grid, ws.log_u, u);
        psi = solve_psi(grid, u, v, ws);

        for (int i = 0; i < n; ++i) w_pot[i] = V[i] - psi.psi[i];
        val_v = block_prox(grid, *ws.kernel, lbv, w_pot, p, eps, cfg, ws.log_v, ws.fv, ws.gv).value;
        renormalize_log(grid, ws.log_v, v);
        psi = solve_psi(grid, u, v, ws);

        State z{Density(grid, u), Density(grid, v)};
        const double energy = total_energy(z, p, U, V, psi).total;
        const double f_cur = (val_u + val_v) / (2.0 * p.h) + energy;
        const double decrease = f_prev - f_cur;
        f_prev = f_cur;
        if (sweep >= 2 && decrease < cfg.tol * (1.0 + std::abs(f_cur))) {
            res.last_decrease = decrease;
            res.converged = true;
            break;
        }
    }
    ws.warm = true;
    res.u = std::move(u);
    res.v = std::move(v);
    return res;
}

}  // namespace pnpflow
