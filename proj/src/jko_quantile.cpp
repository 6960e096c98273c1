#include "jko_internal.hpp"

#include "pnpflow/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pnpflow {

namespace {

// Piecewise-linear read of a cell field at arbitrary points, constant
// extension beyond the first/last midpoint.
class CellInterp {
public:
    CellInterp(const Grid& g, std::vector<double> vals) : grid_(g), vals_(std::move(vals)) {}

    double value(double x) const {
        const auto [i, s] = locate(x);
        return vals_[i] + s * (vals_[i + 1] - vals_[i]);
    }
    double slope(double x) const {
        const double t = (x - grid_.mid(0, 0)) / grid_.dx[0];
        if (t <= 0.0 || t >= grid_.n[0] - 1) return 0.0;
        const int i = static_cast<int>(t);
        return (vals_[i + 1] - vals_[i]) / grid_.dx[0];
    }

private:
    std::pair<int, double> locate(double x) const {
        const double t = (x - grid_.mid(0, 0)) / grid_.dx[0];
        if (t <= 0.0) return {0, 0.0};
        if (t >= grid_.n[0] - 1) return {grid_.n[0] - 2, 1.0};
        const int i = static_cast<int>(t);
        return {i, t - i};
    }
    Grid grid_;
    std::vector<double> vals_;
};

double edge_weight(int k, int m_intervals) {
    return (k == 0 || k == m_intervals) ? 0.5 : 1.0;
}

// Objective of one species block in the monotone-map parametrization:
//   J(X) = (1/2h) sum w_k dq (X_k - A_k)^2 + E_diff(X) + sum w_k dq P(X_k)
struct BlockObjective {
    const std::vector<double>* anchor;
    const CellInterp* pot;
    double m = 1.0, h = 1e-2, dq = 0.0;

    double eval(const std::vector<double>& x) const {
        const int mi = static_cast<int>(x.size()) - 1;
        double acc = 0.0;
        for (int k = 0; k <= mi; ++k) {
            const double d = x[k] - (*anchor)[k];
            acc += edge_weight(k, mi) * dq * (d * d / (2.0 * h) + pot->value(x[k]));
        }
        for (int s = 0; s < mi; ++s) {
            const double w = (x[s + 1] - x[s]) / dq;  // dX/dq, density = 1/w
            if (m == 1.0)
                acc += -dq * std::log(w);
            else
                acc += dq / (m - 1.0) * std::pow(w, 1.0 - m);
        }
        return acc;
    }

    void grad(const std::vector<double>& x, std::vector<double>& g) const {
        const int mi = static_cast<int>(x.size()) - 1;
        g.assign(mi + 1, 0.0);
        for (int k = 0; k <= mi; ++k)
            g[k] = edge_weight(k, mi) * dq *
                   ((x[k] - (*anchor)[k]) / h + pot->slope(x[k]));
        for (int s = 0; s < mi; ++s) {
            const double rho = dq / (x[s + 1] - x[s]);
            const double pm = std::pow(rho, m);
            g[s] += pm;
            g[s + 1] -= pm;
        }
    }
};

// Euclidean projection onto the nondecreasing cone (pool adjacent violators),
// then clamp to the box and restore a minimal positive gap.
void project_monotone(std::vector<double>& x, double lo, double hi, double gap) {
    const int n = static_cast<int>(x.size());
    std::vector<double> level(n), weight(n);
    std::vector<int> count(n);
    int top = 0;
    for (int i = 0; i < n; ++i) {
        level[top] = x[i];
        weight[top] = 1.0;
        count[top] = 1;
        ++top;
        while (top > 1 && level[top - 2] >= level[top - 1]) {
            const double w = weight[top - 2] + weight[top - 1];
            level[top - 2] = (weight[top - 2] * level[top - 2] + weight[top - 1] * level[top - 1]) / w;
            weight[top - 2] = w;
            count[top - 2] += count[top - 1];
            --top;
        }
    }
    int i = 0;
    for (int b = 0; b < top; ++b)
        for (int c = 0; c < count[b]; ++c) x[i++] = level[b];
    for (double& xi : x) xi = std::clamp(xi, lo, hi);
    for (int k = 1; k < n; ++k) x[k] = std::max(x[k], x[k - 1] + gap);
    if (x[n - 1] > hi) {
        x[n - 1] = hi;
        for (int k = n - 2; k >= 0; --k) x[k] = std::min(x[k], x[k + 1] - gap);
    }
}

// Projected gradient descent with Barzilai-Borwein steps and an Armijo
// backtrack on the projected point.
int descend_block(const BlockObjective& obj, std::vector<double>& x, double lo, double hi,
                  double gap, double step0, int max_iters) {
    const int n = static_cast<int>(x.size());
    std::vector<double> g(n), cand(n), g_new(n);
    double j_cur = obj.eval(x);
    obj.grad(x, g);
    double t = step0;
    int iters = 0;
    for (int it = 0; it < max_iters; ++it) {
        ++iters;
        bool accepted = false;
        double j_cand = 0.0;
        for (int bt = 0; bt < 40; ++bt) {
            for (int k = 0; k < n; ++k) cand[k] = x[k] - t * g[k];
            project_monotone(cand, lo, hi, gap);
            double move_sq = 0.0;
            for (int k = 0; k < n; ++k) {
                const double d = cand[k] - x[k];
                move_sq += d * d;
            }
            if (move_sq == 0.0) break;
            j_cand = obj.eval(cand);
            if (j_cand <= j_cur - 1e-4 * move_sq / t) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        obj.grad(cand, g_new);
        double ss = 0.0, sy = 0.0, smax = 0.0;
        for (int k = 0; k < n; ++k) {
            const double s = cand[k] - x[k], y = g_new[k] - g[k];
            ss += s * s;
            sy += s * y;
            smax = std::max(smax, std::abs(s));
        }
        x = cand;
        j_cur = j_cand;
        g.swap(g_new);
        t = (sy > 0.0) ? std::clamp(ss / sy, 1e-16, 1e6) : std::min(t * 2.0, 1e6);
        if (smax <= 1e-13 * (hi - lo)) break;
    }
    return iters;
}

double quantile_distance_sq(const std::vector<double>& x, const std::vector<double>& anchor,
                            double dq) {
    const int mi = static_cast<int>(x.size()) - 1;
    double acc = 0.0;
    for (int k = 0; k <= mi; ++k) {
        const double d = x[k] - anchor[k];
        acc += edge_weight(k, mi) * dq * d * d;
    }
    return acc;
}

}  // namespace

InnerResult quantile_descent_solve(const Grid& grid, const ModelParams& p, const ScalarField& U,
                                   const ScalarField& V, const State& z_prev,
                                   const InnerSolverConfig& cfg, StepWorkspace& ws) {
    if (grid.dim != 1)
        throw std::invalid_argument("quantile_descent_solve: 1-D grids only");
    const int mi = 4 * grid.n[0];
    const double dq = 1.0 / mi;
    const double lo = grid.lower[0], hi = grid.upper[0];
    const double gap = 1e-9 * (hi - lo) / mi;

    const std::vector<double> au = inverse_cdf_edges(z_prev.u, mi);
    const std::vector<double> av = inverse_cdf_edges(z_prev.v, mi);
    std::vector<double> xu = au, xv = av;
    std::vector<double> u(z_prev.u.values()), v(z_prev.v.values());
    PoissonSolution psi = solve_psi(grid, u, v, ws);

    auto true_objective = [&](const std::vector<double>& cu, const std::vector<double>& cv,
                              const PoissonSolution& ps, const std::vector<double>& exu,
                              const std::vector<double>& exv) {
        State z{Density(grid, cu), Density(grid, cv)};
        const double d2 = quantile_distance_sq(exu, au, dq) + quantile_distance_sq(exv, av, dq);
        return d2 / (2.0 * p.h) + total_energy(z, p, U, V, ps).total;
    };

    double f_cur = true_objective(u, v, psi, xu, xv);
    InnerResult res;
    res.converged = false;

    std::vector<double> best_u = u, best_v = v;
    double best_f = f_cur;
    std::vector<double> pot_vals(grid.total());

    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        res.sweeps = sweep;
        const double f_sweep_start = f_cur;

        for (int species = 0; species < 2; ++species) {
            const ScalarField& ext = species == 0 ? U : V;
            const double sign = species == 0 ? 1.0 : -1.0;
            for (int i = 0; i < grid.total(); ++i)
                pot_vals[i] = ext[i] + sign * psi.psi[i];
            CellInterp pot(grid, pot_vals);
            BlockObjective obj{species == 0 ? &au : &av, &pot, p.m, p.h, dq};
            std::vector<double> x_cand = species == 0 ? xu : xv;
            descend_block(obj, x_cand, lo, hi, gap, p.h, cfg.max_descent_iters);

            std::vector<double> rho_cand = density_from_edges(grid, x_cand);
            const double mass = kahan_sum(rho_cand) * grid.cell_volume;
            for (double& r : rho_cand) r /= mass;
            const std::vector<double>& u_try = species == 0 ? rho_cand : u;
            const std::vector<double>& v_try = species == 0 ? v : rho_cand;
            PoissonSolution psi_try = solve_psi(grid, u_try, v_try, ws);
            const double f_try = true_objective(u_try, v_try, psi_try,
                                                species == 0 ? x_cand : xu,
                                                species == 0 ? xv : x_cand);
            if (f_try < f_cur) {
                f_cur = f_try;
                psi = std::move(psi_try);
                if (species == 0) {
                    xu = std::move(x_cand);
                    u = std::move(rho_cand);
                } else {
                    xv = std::move(x_cand);
                    v = std::move(rho_cand);
                }
            }
        }

        if (f_cur < best_f) {
            best_f = f_cur;
            best_u = u;
            best_v = v;
        }
        const double decrease = f_sweep_start - f_cur;
        if (decrease < cfg.tol * (1.0 + std::abs(f_cur))) {
            res.last_decrease = decrease;
            res.converged = true;
            break;
        }
    }
    res.u = std::move(best_u);
    res.v = std::move(best_v);
    return res;
}

}  // namespace pnpflow
