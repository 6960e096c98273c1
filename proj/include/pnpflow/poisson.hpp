#pragma once

#include "pnpflow/grid.hpp"

namespace pnpflow {

struct PoissonOptions {
    double tol = 1e-10;   // relative residual
    int max_iter = 50000;
    const std::vector<double>* initial_guess = nullptr;  // warm start (2-D CG)
};

// Solution of -lap psi = w with homogeneous Neumann walls, mean(psi) = 0.
// Gradients live on interior faces; grad_cell averages them back to centers
// (one-sided at the walls).
struct PoissonSolution {
    ScalarField psi;
    std::vector<double> grad_x;  // (n0-1) * n1 interior faces along axis 0
    std::vector<double> grad_y;  // n0 * (n1-1) along axis 1; empty in 1-D
    std::vector<std::array<double, 2>> grad_cell;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = true;
};

// y = lap x with ghost-cell reflection at the walls.
void apply_neumann_laplacian(const Grid& g, const std::vector<double>& x,
                             std::vector<double>& y);

// Face-difference gradients of a cell field (zero-flux walls carry no face).
void face_gradients(const Grid& g, const std::vector<double>& f,
                    std::vector<double>& gx, std::vector<double>& gy);

// Cell-centered gradient: average of the adjacent face differences,
// one-sided at the walls.
std::vector<std::array<double, 2>> cell_gradients(const Grid& g,
                                                  const std::vector<double>& f);

PoissonSolution solve_poisson_neumann(const ScalarField& w, const PoissonOptions& opt = {});

// (1/2) sum over faces of |grad psi|^2 dV; exact summation-by-parts partner
// of the Laplacian above.
double dirichlet_energy(const PoissonSolution& sol);

struct IbpCheck {
    double lhs = 0;  // sum |grad psi|^2 dV
    double rhs = 0;  // sum psi w dV
    double relative_gap = 0;
};
IbpCheck ibp_identity_check(const ScalarField& w, const PoissonOptions& opt = {});

}  // namespace pnpflow
