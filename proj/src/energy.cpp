#include "pnpflow/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace pnpflow {

double interior_laplacian_sup(const ScalarField& f) {
    const Grid& g = f.grid;
    const int n0 = g.n[0], n1 = g.n[1];
    double sup = 0;
    if (g.dim == 1) {
        for (int i = 1; i + 1 < n0; ++i) {
            double lap = (f[i - 1] - 2 * f[i] + f[i + 1]) / (g.dx[0] * g.dx[0]);
            sup = std::max(sup, std::abs(lap));
        }
        return sup;
    }
    for (int iy = 1; iy + 1 < n1; ++iy)
        for (int i = 1; i + 1 < n0; ++i) {
            const int c = g.index(i, iy);
            double lap = (f[c - 1] - 2 * f[c] + f[c + 1]) / (g.dx[0] * g.dx[0]) +
                         (f[c - n0] - 2 * f[c] + f[c + n0]) / (g.dx[1] * g.dx[1]);
            sup = std::max(sup, std::abs(lap));
        }
    return sup;
}

ModelParams make_model_params(double m, double h, const ScalarField& U,
                              const ScalarField& V) {
    if (!(m >= 1.0)) throw std::invalid_argument("model: diffusion exponent must be >= 1");
    if (!(h > 0.0)) throw std::invalid_argument("model: time step must be positive");
    require_same_grid(U.grid, V.grid, "model potentials");
    ModelParams p;
    p.m = m;
    p.h = h;
    p.lambda = std::max(interior_laplacian_sup(U), interior_laplacian_sup(V));
    if (m > 1.0) p.m_prime = m / (m - 1.0);
    return p;
}

static double diff_integrand_sum(const Density& rho, double m) {
    std::vector<double> tmp(rho.values().size(), 0.0);
    if (m == 1.0) {
        for (std::size_t i = 0; i < tmp.size(); ++i) {
            double x = rho[i];
            if (x > 1e-300) tmp[i] = x * std::log(x);
        }
    } else {
        for (std::size_t i = 0; i < tmp.size(); ++i)
            tmp[i] = std::pow(rho[i], m) / (m - 1.0);
    }
    return kahan_sum(tmp) * rho.grid().cell_volume;
}

double e_diff(const State& z, double m) {
    require_same_grid(z.u.grid(), z.v.grid(), "e_diff");
    return diff_integrand_sum(z.u, m) + diff_integrand_sum(z.v, m);
}

double e_ext(const State& z, const ScalarField& U, const ScalarField& V) {
    require_same_grid(z.u.grid(), U.grid, "e_ext");
    require_same_grid(z.u.grid(), V.grid, "e_ext");
    std::vector<double> tmp(z.u.values().size());
    for (std::size_t i = 0; i < tmp.size(); ++i)
        tmp[i] = z.u[i] * U[i] + z.v[i] * V[i];
    return kahan_sum(tmp) * z.u.grid().cell_volume;
}

ScalarField state_charge(const State& z) {
    require_same_grid(z.u.grid(), z.v.grid(), "state_charge");
    ScalarField w(z.u.grid());
    for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] = z.u[i] - z.v[i];
    return w;
}

double e_cpl(const State&, const PoissonSolution& psi) {
    return dirichlet_energy(psi);
}

double e_cpl(const State& z) {
    PoissonSolution psi = solve_poisson_neumann(state_charge(z));
    return e_cpl(z, psi);
}

EnergyBreakdown total_energy(const State& z, const ModelParams& p,
                             const ScalarField& U, const ScalarField& V,
                             const PoissonSolution& psi) {
    EnergyBreakdown e;
    e.diff = e_diff(z, p.m);
    e.ext = e_ext(z, U, V);
    e.cpl = e_cpl(z, psi);
    e.total = e.diff + e.ext + e.cpl;
    return e;
}

EnergyBreakdown total_energy(const State& z, const ModelParams& p,
                             const ScalarField& U, const ScalarField& V) {
    PoissonSolution psi = solve_poisson_neumann(state_charge(z));
    return total_energy(z, p, U, V, psi);
}

std::pair<ScalarField, ScalarField> first_variation(const State& z, const ModelParams& p,
                                                    const ScalarField& U,
                                                    const ScalarField& V) {
    require_same_grid(z.u.grid(), U.grid, "first_variation");
    require_same_grid(z.u.grid(), V.grid, "first_variation");
    PoissonSolution psi = solve_poisson_neumann(state_charge(z));
    ScalarField phi_u(z.u.grid()), phi_v(z.v.grid());
    const double m = p.m;
    for (std::size_t i = 0; i < phi_u.values.size(); ++i) {
        if (m == 1.0) {
            phi_u.values[i] =
                (z.u[i] > 1e-300) ? std::log(z.u[i]) + 1.0 + U[i] + psi.psi[i] : 0.0;
            phi_v.values[i] =
                (z.v[i] > 1e-300) ? std::log(z.v[i]) + 1.0 + V[i] - psi.psi[i] : 0.0;
        } else {
            phi_u.values[i] = p.m_prime * std::pow(z.u[i], m - 1.0) + U[i] + psi.psi[i];
            phi_v.values[i] = p.m_prime * std::pow(z.v[i], m - 1.0) + V[i] - psi.psi[i];
        }
    }
    return {phi_u, phi_v};
}

}  // namespace pnpflow
