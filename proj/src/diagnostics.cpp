#include "pnpflow/diagnostics.hpp"

#include "pnpflow/energy.hpp"
#include "pnpflow/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pnpflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double power_sum(const State& z, double p) {
    if (p == kInf) return lp_norm(z.u, p) + lp_norm(z.v, p);
    return std::pow(lp_norm(z.u, p), p) + std::pow(lp_norm(z.v, p), p);
}

double norm_sum(const State& z, double p) { return lp_norm(z.u, p) + lp_norm(z.v, p); }

}  // namespace

LpPropagationReport check_lp_propagation(const Trajectory& traj, double p) {
    if (p < 1.0) throw std::invalid_argument("check_lp_propagation: p < 1");
    const double lambda = traj.params.lambda, h = traj.params.h;
    LpPropagationReport rep;
    rep.p = p;
    if (p == kInf) {
        rep.applicable = lambda == 0.0;  // h0(p) -> 0 as p -> inf
        rep.per_step_factor = 1.0;
    } else {
        const double denom = lambda * (p - 1.0);
        rep.applicable = denom * h < 1.0;
        rep.per_step_factor = rep.applicable ? 1.0 / (1.0 - denom * h) : kInf;
    }

    if (rep.applicable && traj.states.size() >= 2) {
        double prev = power_sum(traj.states.front(), p);
        double min_slack = kInf;
        for (std::size_t n = 1; n < traj.states.size(); ++n) {
            const double cur = power_sum(traj.states[n], p);
            min_slack = std::min(min_slack, rep.per_step_factor * prev - cur);
            prev = cur;
        }
        rep.min_per_step_slack = min_slack;
        rep.per_step_ok = min_slack >= 0.0;
    }

    const double s0 = norm_sum(traj.states.front(), p);
    double c = 0.0;
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        const double growth = std::exp(lambda * traj.time_of(static_cast<int>(n)));
        c = std::max(c, norm_sum(traj.states[n], p) / (growth * s0));
    }
    rep.cumulative_constant = c;
    return rep;
}

WeakFormReport check_weak_form(const Trajectory& traj, const ScalarField& U,
                               const ScalarField& V, const std::vector<BumpField>& phis) {
    if (traj.states.size() < 3)
        throw std::invalid_argument("check_weak_form: need at least 3 states");
    const Grid& g = traj.states.front().u.grid();
    require_same_grid(g, U.grid, "check_weak_form");
    const int n0 = g.n[0], n1 = g.n[1];
    const int nc = g.total();
    const double dv = g.cell_volume;
    const double h = traj.params.h;
    const double m = traj.params.m;
    const std::size_t nf = phis.size();

    // Per test function: values at cells, gradient at cells, axis slopes at faces.
    std::vector<std::vector<double>> phi_c(nf), dphix_c(nf), dphiy_c(nf), dphix_f(nf), dphiy_f(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        phi_c[f].resize(nc);
        dphix_c[f].resize(nc);
        dphiy_c[f].resize(nc);
        for (int iy = 0; iy < n1; ++iy)
            for (int i = 0; i < n0; ++i) {
                const auto x = g.midpoint(i, iy);
                const int cix = g.index(i, iy);
                phi_c[f][cix] = phis[f].value(x);
                const auto gr = phis[f].gradient(x);
                dphix_c[f][cix] = gr[0];
                dphiy_c[f][cix] = gr[1];
            }
        dphix_f[f].resize((n0 - 1) * n1);
        for (int iy = 0; iy < n1; ++iy)
            for (int i = 0; i + 1 < n0; ++i) {
                const std::array<double, 2> x{g.lower[0] + (i + 1) * g.dx[0], g.mid(1, iy)};
                dphix_f[f][i + (n0 - 1) * iy] = phis[f].gradient(x)[0];
            }
        if (g.dim == 2) {
            dphiy_f[f].resize(n0 * (n1 - 1));
            for (int iy = 0; iy + 1 < n1; ++iy)
                for (int i = 0; i < n0; ++i) {
                    const std::array<double, 2> x{g.mid(0, i), g.lower[1] + (iy + 1) * g.dx[1]};
                    dphiy_f[f][i + n0 * iy] = phis[f].gradient(x)[1];
                }
        }
    }

    const auto grad_u_pot = cell_gradients(g, U.values);
    const auto grad_v_pot = cell_gradients(g, V.values);

    std::vector<double> rhs_u(nf, 0.0), rhs_v(nf, 0.0);
    std::vector<double> rho_m(nc), gx, gy;
    for (std::size_t n = 1; n < traj.states.size(); ++n) {
        const State& z = traj.states[n];
        ScalarField charge = state_charge(z);
        PoissonSolution psi = solve_poisson_neumann(charge);
        for (int species = 0; species < 2; ++species) {
            const Density& rho = species == 0 ? z.u : z.v;
            const auto& grad_pot = species == 0 ? grad_u_pot : grad_v_pot;
            const double sign = species == 0 ? 1.0 : -1.0;
            auto& rhs = species == 0 ? rhs_u : rhs_v;
            for (int i = 0; i < nc; ++i) rho_m[i] = std::pow(rho[i], m);
            face_gradients(g, rho_m, gx, gy);
            for (std::size_t f = 0; f < nf; ++f) {
                double diff = 0.0;
                for (std::size_t k = 0; k < gx.size(); ++k) diff += gx[k] * dphix_f[f][k];
                for (std::size_t k = 0; k < gy.size(); ++k) diff += gy[k] * dphiy_f[f][k];
                double drift = 0.0;
                for (int i = 0; i < nc; ++i) {
                    const double wx = grad_pot[i][0] + sign * psi.grad_cell[i][0];
                    const double wy = grad_pot[i][1] + sign * psi.grad_cell[i][1];
                    drift += rho[i] * (wx * dphix_c[f][i] + wy * dphiy_c[f][i]);
                }
                rhs[f] += -h * dv * (diff + drift);
            }
        }
    }

    WeakFormReport rep;
    rep.residual_u.resize(nf);
    rep.residual_v.resize(nf);
    const State& z0 = traj.states.front();
    const State& zn = traj.states.back();
    for (std::size_t f = 0; f < nf; ++f) {
        double lhs_u = 0.0, lhs_v = 0.0;
        for (int i = 0; i < nc; ++i) {
            lhs_u += (zn.u[i] - z0.u[i]) * phi_c[f][i] * dv;
            lhs_v += (zn.v[i] - z0.v[i]) * phi_c[f][i] * dv;
        }
        rep.residual_u[f] = std::abs(lhs_u - rhs_u[f]);
        rep.residual_v[f] = std::abs(lhs_v - rhs_v[f]);
        rep.max_u = std::max(rep.max_u, rep.residual_u[f]);
        rep.max_v = std::max(rep.max_v, rep.residual_v[f]);
    }
    return rep;
}

OracleComparison compare_to_oracle(const Trajectory& traj, const State& oracle_final, double t) {
    const State& z = traj.at_time(t);
    require_same_grid(z.u.grid(), oracle_final.u.grid(), "compare_to_oracle");
    return {l1_distance(z.u, oracle_final.u), l1_distance(z.v, oracle_final.v)};
}

double fit_holder_constant(const Trajectory& traj, const TransportConfig& measure) {
    const int n_states = static_cast<int>(traj.states.size());
    if (n_states < 2) return 0.0;
    const double h = traj.params.h;
    const double t_total = (n_states - 1) * h;
    const int max_nodes = 24;
    std::vector<int> nodes;
    const int stride = std::max(1, (n_states - 1) / (max_nodes - 1));
    for (int i = 0; i < n_states; i += stride) nodes.push_back(i);
    if (nodes.back() != n_states - 1) nodes.push_back(n_states - 1);

    double sxy = 0.0, sxx = 0.0;
    int pairs = 0;
    for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = a + 1; b < nodes.size(); ++b) {
            const double dt = (nodes[b] - nodes[a]) * h;
            if (dt > 0.25 * t_total && pairs > 0) continue;
            const double x = std::sqrt(dt + h);
            const double y = std::sqrt(
                product_distance_sq(traj.states[nodes[b]], traj.states[nodes[a]], measure));
            sxy += x * y;
            sxx += x * x;
            ++pairs;
        }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

MomentReport check_moments(const Trajectory& traj) {
    MomentReport rep;
    const Grid& g = traj.states.front().u.grid();
    const std::array<double, 2> center{0.5 * (g.lower[0] + g.upper[0]),
                                       0.5 * (g.lower[1] + g.upper[1])};
    for (const State& z : traj.states) {
        const double m2 = second_moment(z.u, center) + second_moment(z.v, center);
        rep.sup_second_moment = std::max(rep.sup_second_moment, m2);
        double alog = 0.0;
        for (int i = 0; i < g.total(); ++i) {
            if (z.u[i] > 0.0) alog += z.u[i] * std::abs(std::log(z.u[i]));
            if (z.v[i] > 0.0) alog += z.v[i] * std::abs(std::log(z.v[i]));
        }
        rep.sup_abs_entropy = std::max(rep.sup_abs_entropy, alog * g.cell_volume);
        if (!std::isfinite(m2) || !std::isfinite(rep.sup_abs_entropy)) rep.bounded = false;
    }
    return rep;
}

DiagnosticsReport run_diagnostics(const Trajectory& traj, const ScalarField& U,
                                  const ScalarField& V, const DiagnosticsOptions& opt) {
    if (traj.states.empty()) throw std::invalid_argument("run_diagnostics: empty trajectory");
    DiagnosticsReport rep;
    const Grid& g = traj.states.front().u.grid();

    // Energy sequence: initial state evaluated directly, the rest from reports.
    std::vector<double> energy;
    energy.push_back(total_energy(traj.states.front(), traj.params, U, V).total);
    for (const auto& r : traj.reports) energy.push_back(r.energy.total);
    double e_min = energy.front();
    for (std::size_t n = 1; n < energy.size(); ++n) {
        rep.energy_max_violation = std::max(rep.energy_max_violation, energy[n] - energy[n - 1]);
        e_min = std::min(e_min, energy[n]);
    }
    rep.energy_monotone = rep.energy_max_violation <= 1e-8;

    double lhs = 0.0, resid = 0.0;
    for (const auto& r : traj.reports) {
        lhs += r.step_distance_sq / (2.0 * traj.params.h);
        resid += std::max(r.inner_residual, 0.0);
    }
    rep.square_distance_slack = (energy.front() - e_min + resid) - lhs;
    rep.square_distance_ok = rep.square_distance_slack >= 0.0;

    if (opt.holder && traj.states.size() >= 2)
        rep.holder_constant = fit_holder_constant(traj, opt.measure);

    for (double p : opt.lp_exponents) rep.lp.push_back(check_lp_propagation(traj, p));
    if (opt.check_linf)
        rep.linf = check_lp_propagation(traj, std::numeric_limits<double>::infinity());

    if (opt.weak_form && traj.states.size() >= 3)
        rep.weak = check_weak_form(traj, U, V, standard_bump_family(g));

    for (const State& z : traj.states) {
        const IbpCheck chk = ibp_identity_check(state_charge(z));
        rep.ibp_gap = std::max(rep.ibp_gap, chk.relative_gap);
        const double du = std::abs(integrate(z.u) - 1.0);
        const double dvv = std::abs(integrate(z.v) - 1.0);
        rep.max_mass_defect = std::max({rep.max_mass_defect, du, dvv});
    }
    rep.mass_ok = rep.max_mass_defect <= kMassTol;

    if (opt.euler_lagrange && g.dim == 1 && traj.states.size() >= 2) {
        const auto zetas = standard_zeta_family(g);
        for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
            const auto [ru, rv] = euler_lagrange_residual(traj.states[n], traj.states[n + 1],
                                                          traj.params, U, V, zetas);
            rep.el_max.push_back(std::max(ru, rv));
        }
    }

    rep.moments = check_moments(traj);
    rep.moments_bounded = rep.moments.bounded;

    rep.all_passed = rep.energy_monotone && rep.square_distance_ok && rep.mass_ok &&
                     rep.moments_bounded;
    for (const auto& l : rep.lp)
        if (l.applicable && !l.per_step_ok) rep.all_passed = false;
    return rep;
}

}  // namespace pnpflow
