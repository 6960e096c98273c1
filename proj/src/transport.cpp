#include "pnpflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pnpflow {

static constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double default_epsilon(const Grid& g) { return 1e-3 * g.diameter_sq(); }

// ---------------------------------------------------------------- CdfSampler

CdfSampler::CdfSampler(const Density& rho) : grid_(rho.grid()), rho_(rho.values()) {
    if (grid_.dim != 1)
        throw std::invalid_argument("cdf sampler: 1-D densities only");
    const int n = grid_.n[0];
    cum_.resize(n);
    double acc = 0, c = 0;
    for (int i = 0; i < n; ++i) {
        double y = rho_[i] * grid_.cell_volume - c;
        double t = acc + y;
        c = (t - acc) - y;
        acc = t;
        cum_[i] = acc;
    }
    // guard against fp drift so inv(1) stays inside the domain
    for (int i = 0; i < n; ++i) cum_[i] = std::min(cum_[i] / acc, 1.0);
    cum_[n - 1] = 1.0;
}

double CdfSampler::cdf(double x) const {
    const double lo = grid_.lower[0], dx = grid_.dx[0];
    const int n = grid_.n[0];
    if (x <= lo) return 0.0;
    if (x >= grid_.upper[0]) return 1.0;
    double s = (x - lo) / dx;
    int i = std::min((int)s, n - 1);
    double frac = s - i;
    double before = (i > 0) ? cum_[i - 1] : 0.0;
    return before + (cum_[i] - before) * frac;
}

double CdfSampler::inv(double q) const {
    const double lo = grid_.lower[0], dx = grid_.dx[0];
    const int n = grid_.n[0];
    if (q >= 1.0) {
        for (int i = n - 1; i >= 0; --i)
            if (rho_[i] > 0.0) return lo + (i + 1) * dx;
        return grid_.upper[0];
    }
    if (q <= 0.0) {
        for (int i = 0; i < n; ++i)
            if (rho_[i] > 0.0) return lo + i * dx;
        return lo;
    }
    auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
    int i = (int)(it - cum_.begin());
    double before = (i > 0) ? cum_[i - 1] : 0.0;
    double cell_mass = cum_[i] - before;
    double frac = (cell_mass > 0.0) ? (q - before) / cell_mass : 0.0;
    return lo + (i + frac) * dx;
}

std::vector<double> inverse_cdf_edges(const Density& rho, int m_intervals) {
    CdfSampler s(rho);
    std::vector<double> edges(m_intervals + 1);
    for (int k = 0; k <= m_intervals; ++k)
        edges[k] = s.inv((double)k / m_intervals);
    for (int k = 1; k <= m_intervals; ++k) edges[k] = std::max(edges[k], edges[k - 1]);
    return edges;
}

std::vector<double> density_from_edges(const Grid& g, const std::vector<double>& edges) {
    if (g.dim != 1)
        throw std::invalid_argument("density_from_edges: 1-D grids only");
    const int n = g.n[0];
    const int m = (int)edges.size() - 1;
    const double lo = g.lower[0], dx = g.dx[0];
    const double q = 1.0 / m;
    std::vector<double> mass(n, 0.0);
    for (int k = 0; k < m; ++k) {
        double a = std::clamp(edges[k], lo, g.upper[0]);
        double b = std::clamp(edges[k + 1], lo, g.upper[0]);
        if (b - a < 1e-14 * dx) {
            int c = std::clamp((int)((0.5 * (a + b) - lo) / dx), 0, n - 1);
            mass[c] += q;
            continue;
        }
        int ca = std::clamp((int)((a - lo) / dx), 0, n - 1);
        int cb = std::clamp((int)((b - lo) / dx), 0, n - 1);
        if (ca == cb) {
            mass[ca] += q;
            continue;
        }
        const double inv_len = 1.0 / (b - a);
        for (int c = ca; c <= cb; ++c) {
            double cl = lo + c * dx, cr = cl + dx;
            double ov = std::min(b, cr) - std::max(a, cl);
            if (ov > 0) mass[c] += q * ov * inv_len;
        }
    }
    for (double& x : mass) x /= g.cell_volume;
    return mass;
}

// ------------------------------------------------------------------ exact 1-D

TransportResult w2_exact_1d(const Density& mu, const Density& nu) {
    require_same_grid(mu.grid(), nu.grid(), "w2_exact_1d");
    const Grid& g = mu.grid();
    if (g.dim != 1)
        throw std::invalid_argument("w2_exact_1d: 1-D densities only");
    CdfSampler su(mu), sv(nu);
    const int m = 4 * g.n[0];
    double acc = 0, c = 0;
    for (int k = 0; k < m; ++k) {
        double q = (k + 0.5) / m;
        double d = su.inv(q) - sv.inv(q);
        double y = d * d - c;
        double t = acc + y;
        c = (t - acc) - y;
        acc = t;
    }
    TransportResult res;
    res.mode = TransportMode::exact_1d;
    res.cost = acc / m;
    res.map.resize(g.n[0]);
    for (int i = 0; i < g.n[0]; ++i)
        res.map[i] = sv.inv(su.cdf(g.mid(0, i)));
    for (int i = 1; i < g.n[0]; ++i) res.map[i] = std::max(res.map[i], res.map[i - 1]);
    return res;
}

PushforwardCheck brenier_map_pushforward_check(const Density& mu, const Density& nu,
                                               const std::vector<double>& map) {
    require_same_grid(mu.grid(), nu.grid(), "pushforward check");
    const Grid& g = mu.grid();
    if (g.dim != 1 || (int)map.size() != g.n[0])
        throw std::invalid_argument("pushforward check: map must sample a 1-D grid");
    PushforwardCheck out;
    for (int i = 1; i < g.n[0]; ++i)
        if (map[i] < map[i - 1] - 1e-12) out.monotone = false;
    const int n = g.n[0];
    const double lo = g.lower[0], dx = g.dx[0];
    std::vector<double> mass(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double w = mu[i] * g.cell_volume;
        if (w == 0.0) continue;
        double s = (map[i] - lo) / dx - 0.5;
        int k = (int)std::floor(s);
        double frac = s - k;
        if (k < 0) {
            mass[0] += w;
        } else if (k >= n - 1) {
            mass[n - 1] += w;
        } else {
            mass[k] += w * (1.0 - frac);
            mass[k + 1] += w * frac;
        }
    }
    double defect = 0;
    for (int i = 0; i < n; ++i) defect += std::abs(mass[i] / g.cell_volume - nu[i]);
    out.l1_defect = defect * g.cell_volume;
    return out;
}

// ------------------------------------------------------------------ LogKernel

LogKernel::LogKernel(const Grid& g, double epsilon) : grid_(g), eps_(epsilon) {
    if (!(epsilon > 0))
        throw std::invalid_argument("log kernel: epsilon must be positive");
    const int n0 = g.n[0], n1 = g.n[1];
    cx_.resize((std::size_t)n0 * n0);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n0; ++j) {
            double d = (i - j) * g.dx[0];
            cx_[(std::size_t)i * n0 + j] = d * d / eps_;
        }
    if (g.dim == 2) {
        cy_.resize((std::size_t)n1 * n1);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n1; ++j) {
                double d = (i - j) * g.dx[1];
                cy_[(std::size_t)i * n1 + j] = d * d / eps_;
            }
        tmp_.resize(g.total());
    }
}

static double lse_row(const double* in, const double* cost, int n, int stride) {
    double mx = kNegInf;
    for (int j = 0; j < n; ++j) {
        double v = in[(std::size_t)j * stride] - cost[j];
        if (v > mx) mx = v;
    }
    if (mx == kNegInf) return kNegInf;
    double s = 0;
    for (int j = 0; j < n; ++j) {
        double v = in[(std::size_t)j * stride] - cost[j];
        s += std::exp(v - mx);
    }
    return mx + std::log(s);
}

void LogKernel::apply(const std::vector<double>& in, std::vector<double>& out) const {
    const int n0 = grid_.n[0], n1 = grid_.n[1];
    out.resize(grid_.total());
    if (grid_.dim == 1) {
        for (int i = 0; i < n0; ++i)
            out[i] = lse_row(in.data(), cx_.data() + (std::size_t)i * n0, n0, 1);
        return;
    }
    // axis 0 pass: tmp(ix, jy) = lse over jx
    for (int jy = 0; jy < n1; ++jy) {
        const double* col = in.data() + (std::size_t)n0 * jy;
        for (int ix = 0; ix < n0; ++ix)
            tmp_[(std::size_t)ix * n1 + jy] =
                lse_row(col, cx_.data() + (std::size_t)ix * n0, n0, 1);
    }
    // axis 1 pass: out(ix, iy) = lse over jy
    for (int ix = 0; ix < n0; ++ix) {
        const double* row = tmp_.data() + (std::size_t)ix * n1;
        for (int iy = 0; iy < n1; ++iy)
            out[(std::size_t)n0 * iy + ix] =
                lse_row(row, cy_.data() + (std::size_t)iy * n1, n1, 1);
    }
}

// ----------------------------------------------------------------- sinkhorn

namespace {

struct LogWeights {
    std::vector<double> lw;  // log(rho_i dV), -inf on vacuum
    std::vector<double> w;   // rho_i dV
};

LogWeights log_weights(const Density& rho) {
    LogWeights lw;
    const int n = rho.grid().total();
    lw.lw.resize(n);
    lw.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double a = rho[i] * rho.grid().cell_volume;
        lw.w[i] = a;
        lw.lw[i] = (a > 0) ? std::log(a) : kNegInf;
    }
    return lw;
}

double dot_weights(const std::vector<double>& f, const std::vector<double>& w) {
    double s = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (w[i] > 0) s += f[i] * w[i];
    return s;
}

double marginal_defect(const std::vector<double>& f_old, const std::vector<double>& f_new,
                       const std::vector<double>& w, double eps) {
    double s = 0;
    for (std::size_t i = 0; i < f_old.size(); ++i) {
        if (w[i] <= 0) continue;
        double e = std::min((f_old[i] - f_new[i]) / eps, 50.0);
        s += w[i] * std::abs(std::expm1(e));
    }
    return s;
}

// alternating dual ascent on OT_eps(a, b); returns dual value
double solve_pair(const LogKernel& K, const LogWeights& a, const LogWeights& b,
                  const SinkhornConfig& cfg, double eps, int& iters, double& marg_err,
                  std::vector<double>& f, std::vector<double>& g) {
    const std::size_t n = a.w.size();
    f.assign(n, 0.0);
    g.assign(n, 0.0);
    std::vector<double> in(n), f_new(n), out(n);
    marg_err = std::numeric_limits<double>::infinity();
    iters = 0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        for (std::size_t j = 0; j < n; ++j)
            in[j] = (b.lw[j] == kNegInf) ? kNegInf : b.lw[j] + g[j] / eps;
        K.apply(in, out);
        for (std::size_t i = 0; i < n; ++i) f_new[i] = -eps * out[i];
        marg_err = marginal_defect(f, f_new, a.w, eps);
        f.swap(f_new);
        for (std::size_t i = 0; i < n; ++i)
            in[i] = (a.lw[i] == kNegInf) ? kNegInf : a.lw[i] + f[i] / eps;
        K.apply(in, out);
        for (std::size_t j = 0; j < n; ++j) g[j] = -eps * out[j];
        iters = it + 1;
        if (marg_err <= cfg.marginal_tol) break;
    }
    return dot_weights(f, a.w) + dot_weights(g, b.w);
}

// symmetric fixed point for OT_eps(a, a)
double solve_self(const LogKernel& K, const LogWeights& a, const SinkhornConfig& cfg,
                  double eps) {
    const std::size_t n = a.w.size();
    std::vector<double> p(n, 0.0), in(n), out(n), p_new(n);
    for (int it = 0; it < cfg.max_iter; ++it) {
        for (std::size_t j = 0; j < n; ++j)
            in[j] = (a.lw[j] == kNegInf) ? kNegInf : a.lw[j] + p[j] / eps;
        K.apply(in, out);
        for (std::size_t i = 0; i < n; ++i) p_new[i] = -eps * out[i];
        double err = marginal_defect(p, p_new, a.w, eps);
        for (std::size_t i = 0; i < n; ++i) p[i] = 0.5 * (p[i] + p_new[i]);
        if (err <= cfg.marginal_tol) break;
    }
    return 2.0 * dot_weights(p, a.w);
}

}  // namespace

TransportResult sinkhorn_w2(const Density& mu, const Density& nu,
                            const SinkhornConfig& cfg) {
    require_same_grid(mu.grid(), nu.grid(), "sinkhorn_w2");
    const Grid& g = mu.grid();
    double eps = cfg.epsilon > 0 ? cfg.epsilon : default_epsilon(g);
    LogKernel K(g, eps);
    LogWeights a = log_weights(mu), b = log_weights(nu);

    TransportResult res;
    res.mode = TransportMode::entropic;
    res.epsilon = eps;
    std::vector<double> f, g_pot;
    double val_ab = solve_pair(K, a, b, cfg, eps, res.iterations, res.marginal_error, f, g_pot);
    res.converged = res.marginal_error <= cfg.marginal_tol;
    double val_aa = solve_self(K, a, cfg, eps);
    double val_bb = solve_self(K, b, cfg, eps);
    double cost = val_ab - 0.5 * val_aa - 0.5 * val_bb;
    if (cost < -1e-9)
        throw std::runtime_error("sinkhorn_w2: debiased cost is significantly negative");
    res.cost = std::max(cost, 0.0);

    if (cfg.keep_plan && g.dim == 1 && g.total() <= 4096) {
        const int n = g.total();
        res.plan.assign((std::size_t)n * n, 0.0);
        for (int i = 0; i < n; ++i) {
            if (a.w[i] <= 0) continue;
            for (int j = 0; j < n; ++j) {
                if (b.w[j] <= 0) continue;
                double d = (i - j) * g.dx[0];
                double lp = a.lw[i] + b.lw[j] + (f[i] + g_pot[j] - d * d) / eps;
                res.plan[(std::size_t)i * n + j] = std::exp(lp);
            }
        }
    }
    return res;
}

double w2_distance_sq(const Density& mu, const Density& nu, const TransportConfig& cfg) {
    if (cfg.mode == TransportMode::exact_1d) return w2_exact_1d(mu, nu).cost;
    return sinkhorn_w2(mu, nu, cfg.sinkhorn).cost;
}

double product_distance_sq(const State& z, const State& z_prev, const TransportConfig& cfg) {
    return w2_distance_sq(z.u, z_prev.u, cfg) + w2_distance_sq(z.v, z_prev.v, cfg);
}

}  // namespace pnpflow
