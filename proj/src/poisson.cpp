#include "pnpflow/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pnpflow {

void apply_neumann_laplacian(const Grid& g, const std::vector<double>& x,
                             std::vector<double>& y) {
    const int n0 = g.n[0], n1 = g.n[1];
    y.assign(g.total(), 0.0);
    const double ix2 = 1.0 / (g.dx[0] * g.dx[0]);
    for (int iy = 0; iy < n1; ++iy) {
        const int row = n0 * iy;
        for (int i = 0; i < n0; ++i) {
            double s = 0;
            if (i > 0) s += (x[row + i - 1] - x[row + i]) * ix2;
            if (i < n0 - 1) s += (x[row + i + 1] - x[row + i]) * ix2;
            y[row + i] += s;
        }
    }
    if (g.dim == 2) {
        const double iy2 = 1.0 / (g.dx[1] * g.dx[1]);
        for (int iy = 0; iy < n1; ++iy)
            for (int i = 0; i < n0; ++i) {
                const int c = g.index(i, iy);
                double s = 0;
                if (iy > 0) s += (x[c - n0] - x[c]) * iy2;
                if (iy < n1 - 1) s += (x[c + n0] - x[c]) * iy2;
                y[c] += s;
            }
    }
}

void face_gradients(const Grid& g, const std::vector<double>& f,
                    std::vector<double>& gx, std::vector<double>& gy) {
    const int n0 = g.n[0], n1 = g.n[1];
    gx.assign((n0 - 1) * n1, 0.0);
    for (int iy = 0; iy < n1; ++iy)
        for (int i = 0; i + 1 < n0; ++i)
            gx[i + (n0 - 1) * iy] = (f[g.index(i + 1, iy)] - f[g.index(i, iy)]) / g.dx[0];
    if (g.dim == 2) {
        gy.assign(n0 * (n1 - 1), 0.0);
        for (int iy = 0; iy + 1 < n1; ++iy)
            for (int i = 0; i < n0; ++i)
                gy[i + n0 * iy] = (f[g.index(i, iy + 1)] - f[g.index(i, iy)]) / g.dx[1];
    } else {
        gy.clear();
    }
}

std::vector<std::array<double, 2>> cell_gradients(const Grid& g,
                                                  const std::vector<double>& f) {
    std::vector<double> gx, gy;
    face_gradients(g, f, gx, gy);
    const int n0 = g.n[0], n1 = g.n[1];
    std::vector<std::array<double, 2>> out(g.total(), {0.0, 0.0});
    for (int iy = 0; iy < n1; ++iy)
        for (int i = 0; i < n0; ++i) {
            const int c = g.index(i, iy);
            const double left = (i > 0) ? gx[i - 1 + (n0 - 1) * iy] : 0;
            const double right = (i < n0 - 1) ? gx[i + (n0 - 1) * iy] : 0;
            int cnt = (i > 0) + (i < n0 - 1);
            out[c][0] = (left + right) / std::max(cnt, 1);
            if (g.dim == 2) {
                const double down = (iy > 0) ? gy[i + n0 * (iy - 1)] : 0;
                const double up = (iy < n1 - 1) ? gy[i + n0 * iy] : 0;
                cnt = (iy > 0) + (iy < n1 - 1);
                out[c][1] = (down + up) / std::max(cnt, 1);
            }
        }
    return out;
}

static void subtract_mean(std::vector<double>& v) {
    double m = kahan_sum(v) / v.size();
    for (double& x : v) x -= m;
}

static double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Exact double-cumulative solve; same stencil as apply_neumann_laplacian.
static void solve_direct_1d(const Grid& g, const std::vector<double>& w,
                            std::vector<double>& psi) {
    const int n = g.n[0];
    const double dx = g.dx[0];
    std::vector<double> gf(n - 1);
    double acc = 0, c = 0;
    for (int i = 0; i + 1 < n; ++i) {  // Kahan-compensated running sum
        double y = w[i] - c;
        double t = acc + y;
        c = (t - acc) - y;
        acc = t;
        gf[i] = -acc * dx;
    }
    psi.assign(n, 0.0);
    for (int i = 0; i + 1 < n; ++i) psi[i + 1] = psi[i] + dx * gf[i];
    subtract_mean(psi);
}

static int solve_cg(const Grid& g, const std::vector<double>& w,
                    std::vector<double>& psi, const PoissonOptions& opt,
                    double& rel_resid) {
    const int n = g.total();
    std::vector<double> r(n), p(n), ap(n);
    apply_neumann_laplacian(g, psi, ap);
    for (int i = 0; i < n; ++i) r[i] = w[i] + ap[i];  // r = w - (-lap psi)
    subtract_mean(r);
    p = r;
    double rr = 0;
    for (double x : r) rr += x * x;
    const double wnorm = std::max(norm2(w), 1e-300);
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (std::sqrt(rr) <= opt.tol * wnorm) break;
        apply_neumann_laplacian(g, p, ap);
        for (double& x : ap) x = -x;
        double pap = 0;
        for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (!(pap > 0)) break;
        double alpha = rr / pap;
        for (int i = 0; i < n; ++i) {
            psi[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if (it % 32 == 31) subtract_mean(r);
        double rr_new = 0;
        for (double x : r) rr_new += x * x;
        double beta = rr_new / rr;
        rr = rr_new;
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    rel_resid = std::sqrt(rr) / wnorm;
    subtract_mean(psi);
    return it;
}

PoissonSolution solve_poisson_neumann(const ScalarField& w, const PoissonOptions& opt) {
    const Grid& g = w.grid;
    const int n = g.total();
    double wmax = 0;
    for (double x : w.values) wmax = std::max(wmax, std::abs(x));
    double mean = kahan_sum(w.values) / n;
    if (std::abs(mean) > 1e-9 * (1.0 + wmax))
        throw std::invalid_argument("poisson: source must have zero mean");
    std::vector<double> rhs = w.values;
    for (double& x : rhs) x -= mean;

    PoissonSolution sol;
    sol.psi = ScalarField(g, 0.0);
    if (g.dim == 1) {
        solve_direct_1d(g, rhs, sol.psi.values);
        sol.iterations = 0;
        std::vector<double> lap;
        apply_neumann_laplacian(g, sol.psi.values, lap);
        double rn = 0;
        for (int i = 0; i < n; ++i) {
            double r = rhs[i] + lap[i];
            rn += r * r;
        }
        sol.residual_norm = std::sqrt(rn) / std::max(norm2(rhs), 1e-300);
        sol.converged = true;
    } else {
        if (opt.initial_guess && (int)opt.initial_guess->size() == n) {
            sol.psi.values = *opt.initial_guess;
            subtract_mean(sol.psi.values);
        }
        sol.iterations = solve_cg(g, rhs, sol.psi.values, opt, sol.residual_norm);
        sol.converged = sol.residual_norm <= opt.tol * 4.0;
    }

    face_gradients(g, sol.psi.values, sol.grad_x, sol.grad_y);
    sol.grad_cell = cell_gradients(g, sol.psi.values);
    return sol;
}

double dirichlet_energy(const PoissonSolution& sol) {
    double s = 0;
    for (double x : sol.grad_x) s += x * x;
    for (double x : sol.grad_y) s += x * x;
    return 0.5 * s * sol.psi.grid.cell_volume;
}

IbpCheck ibp_identity_check(const ScalarField& w, const PoissonOptions& opt) {
    PoissonSolution sol = solve_poisson_neumann(w, opt);
    IbpCheck chk;
    chk.lhs = 2.0 * dirichlet_energy(sol);
    std::vector<double> tmp(w.values.size());
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = sol.psi[i] * w[i];
    chk.rhs = kahan_sum(tmp) * w.grid.cell_volume;
    chk.relative_gap = std::abs(chk.lhs - chk.rhs) /
                       std::max({std::abs(chk.lhs), std::abs(chk.rhs), 1e-300});
    return chk;
}

}  // namespace pnpflow
