#pragma once

#include "pnpflow/grid.hpp"
#include "pnpflow/poisson.hpp"

#include <limits>
#include <utility>

namespace pnpflow {

struct ModelParams {
    double m = 1.0;   // diffusion exponent, >= 1
    double h = 1e-2;  // outer time step
    double lambda = 0.0;  // sup |lap U|, |lap V| over interior cells
    double m_prime = std::numeric_limits<double>::infinity();
};

// Centered second-difference Laplacian over cells whose full stencil lies
// inside the grid; wall cells are excluded so reflection artifacts from
// potentials with nonzero wall slope do not pollute the bound.
double interior_laplacian_sup(const ScalarField& f);

ModelParams make_model_params(double m, double h, const ScalarField& U,
                              const ScalarField& V);

struct EnergyBreakdown {
    double diff = 0, ext = 0, cpl = 0, total = 0;
};

double e_diff(const State& z, double m);
double e_ext(const State& z, const ScalarField& U, const ScalarField& V);
double e_cpl(const State& z);
double e_cpl(const State& z, const PoissonSolution& psi);

EnergyBreakdown total_energy(const State& z, const ModelParams& p,
                             const ScalarField& U, const ScalarField& V);
EnergyBreakdown total_energy(const State& z, const ModelParams& p,
                             const ScalarField& U, const ScalarField& V,
                             const PoissonSolution& psi);

// phi_u = f'(u) + U + psi, phi_v = f'(v) + V - psi with f the diffusion
// integrand; for m = 1 the entropy branch is masked to 0 on vacuum cells.
std::pair<ScalarField, ScalarField> first_variation(const State& z, const ModelParams& p,
                                                    const ScalarField& U,
                                                    const ScalarField& V);

ScalarField state_charge(const State& z);  // u - v

}  // namespace pnpflow
