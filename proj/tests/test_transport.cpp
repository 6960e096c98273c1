#include <doctest.h>

#include "pnpflow/grid.hpp"
#include "pnpflow/transport.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace pnpflow;

namespace {

Density uniform_block(const Grid& g, double lo, double hi) {
    std::vector<double> v(g.total(), 0.0);
    for (int i = 0; i < g.n[0]; ++i) {
        double x = g.mid(0, i);
        if (x > lo && x < hi) v[i] = 1.0;
    }
    return Density::normalized(g, v);
}

Density gaussian_1d(const Grid& g, double c, double s) {
    std::vector<double> v(g.total());
    for (int i = 0; i < g.n[0]; ++i) {
        double x = (g.mid(0, i) - c) / s;
        v[i] = std::exp(-0.5 * x * x);
    }
    return Density::normalized(g, v);
}

Density gaussian_2d(const Grid& g, double c0, double c1, double s) {
    std::vector<double> v(g.total());
    for (int iy = 0; iy < g.n[1]; ++iy)
        for (int ix = 0; ix < g.n[0]; ++ix) {
            auto x = g.midpoint(ix, iy);
            double r2 = (x[0] - c0) * (x[0] - c0) + (x[1] - c1) * (x[1] - c1);
            v[g.index(ix, iy)] = std::exp(-0.5 * r2 / (s * s));
        }
    return Density::normalized(g, v);
}

}  // namespace

TEST_SUITE_BEGIN("transport");

TEST_CASE("cdf sampler inverts the uniform and two-level profiles") {
    Grid g = Grid::line(0.0, 1.0, 256);
    Density flat(g, std::vector<double>(256, 1.0));
    CdfSampler cu(flat);
    for (double x : {0.1, 0.25, 0.5, 0.9}) {
        CHECK(cu.cdf(x) == doctest::Approx(x).epsilon(1e-12));
        CHECK(cu.inv(x) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(cu.cdf(-1.0) == 0.0);
    CHECK(cu.cdf(2.0) == 1.0);

    std::vector<double> v(256, 0.0);
    for (int i = 0; i < 128; ++i) v[i] = 2.0;
    CdfSampler ch(Density(g, v));
    CHECK(ch.cdf(0.25) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ch.cdf(0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ch.inv(0.5) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(ch.inv(1.0) <= 0.5 + 1e-9);
}

TEST_CASE("equal-mass edges are monotone and rasterize back to the density") {
    Grid g = Grid::line(0.0, 1.0, 128);
    Density rho = gaussian_1d(g, 0.45, 0.12);
    const int M = 4 * 128;
    std::vector<double> edges = inverse_cdf_edges(rho, M);
    REQUIRE((int)edges.size() == M + 1);
    for (int k = 0; k < M; ++k) CHECK(edges[k] <= edges[k + 1] + 1e-14);
    CHECK(edges.front() >= 0.0 - 1e-12);
    CHECK(edges.back() <= 1.0 + 1e-12);

    std::vector<double> raster = density_from_edges(g, edges);
    CHECK(kahan_sum(raster) * g.cell_volume == doctest::Approx(1.0).epsilon(1e-12));
    Density back(g, raster);
    double err = l1_distance(back, rho);
    CHECK(err <= 1e-2);

    // quadrupling the interval count shrinks the round-trip error
    std::vector<double> fine = density_from_edges(g, inverse_cdf_edges(rho, 4 * M));
    CHECK(l1_distance(Density(g, fine), rho) <= 0.5 * err);
}

TEST_CASE("translated uniform blocks cost exactly the squared shift") {
    Grid g = Grid::line(0.0, 1.0, 500);
    Density mu = uniform_block(g, 0.1, 0.3);
    Density nu = uniform_block(g, 0.5, 0.7);
    TransportResult r = w2_exact_1d(mu, nu);
    CHECK(std::abs(r.cost - 0.16) <= 1e-12);
    CHECK(r.converged);

    PushforwardCheck pc = brenier_map_pushforward_check(mu, nu, r.map);
    CHECK(pc.monotone);
    CHECK(pc.l1_defect <= 1e-8);
}

TEST_CASE("uniform to half-width uniform reproduces the quantile integral") {
    Grid g = Grid::line(0.0, 1.0, 512);
    Density mu(g, std::vector<double>(512, 1.0));
    std::vector<double> v(512, 0.0);
    for (int i = 0; i < 256; ++i) v[i] = 2.0;
    Density nu(g, v);
    // int_0^1 (q - q/2)^2 dq = 1/12
    TransportResult r = w2_exact_1d(mu, nu);
    CHECK(std::abs(r.cost - 1.0 / 12.0) <= 1e-4);
}

TEST_CASE("exact 1-D cost behaves like a squared metric") {
    Grid g = Grid::line(0.0, 1.0, 128);
    Density a = gaussian_1d(g, 0.3, 0.1);
    Density b = gaussian_1d(g, 0.6, 0.15);
    Density c = gaussian_1d(g, 0.5, 0.08);
    CHECK(w2_exact_1d(a, a).cost <= 1e-15);
    CHECK(w2_exact_1d(a, b).cost == doctest::Approx(w2_exact_1d(b, a).cost).epsilon(1e-12));
    double dab = std::sqrt(w2_exact_1d(a, b).cost);
    double dac = std::sqrt(w2_exact_1d(a, c).cost);
    double dcb = std::sqrt(w2_exact_1d(c, b).cost);
    CHECK(dab <= dac + dcb + 1e-12);
}

TEST_CASE("pushforward histogram reassignment reproduces a compressed target") {
    // T(x) = x/2: non-expanding, so the histogram deposit has no ripple floor
    Grid g = Grid::line(0.0, 1.0, 512);
    Density mu(g, std::vector<double>(512, 1.0));
    std::vector<double> v(512, 0.0);
    for (int i = 0; i < 256; ++i) v[i] = 2.0;
    Density nu(g, v);
    TransportResult r = w2_exact_1d(mu, nu);
    PushforwardCheck pc = brenier_map_pushforward_check(mu, nu, r.map);
    CHECK(pc.monotone);
    CHECK(pc.l1_defect <= 2e-2);
}

TEST_CASE("pushforward of a smooth pair is monotone with bounded ripple") {
    Grid g = Grid::line(0.0, 1.0, 256);
    Density mu = gaussian_1d(g, 0.35, 0.1);
    Density nu = gaussian_1d(g, 0.6, 0.14);
    TransportResult r = w2_exact_1d(mu, nu);
    PushforwardCheck pc = brenier_map_pushforward_check(mu, nu, r.map);
    CHECK(pc.monotone);
    // point-mass deposit carries O(1) local ripple where the map stretches,
    // so only a coarse mass-placement bound is meaningful here
    CHECK(pc.l1_defect <= 0.2);

    // injected monotonicity violation is flagged
    std::vector<double> bad = r.map;
    std::swap(bad[100], bad[140]);
    CHECK(!brenier_map_pushforward_check(mu, nu, bad).monotone);
}

TEST_CASE("1-D helpers reject two-dimensional input") {
    Grid gb = Grid::box(0.0, 1.0, 8, 0.0, 1.0, 8);
    Density flat(gb, std::vector<double>(64, 1.0));
    CHECK_THROWS_AS(w2_exact_1d(flat, flat), std::invalid_argument);
    CHECK_THROWS_AS(CdfSampler{flat}, std::invalid_argument);
    CHECK_THROWS_AS(density_from_edges(gb, std::vector<double>(5, 0.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(LogKernel(gb, 0.0), std::invalid_argument);
}

TEST_CASE("log kernel matches the brute-force log-sum-exp") {
    std::mt19937 rng(911);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);

    SUBCASE("one dimension") {
        Grid g = Grid::line(0.0, 1.0, 8);
        double eps = 0.07;
        LogKernel K(g, eps);
        std::vector<double> in(8), out;
        for (auto& x : in) x = uni(rng);
        K.apply(in, out);
        for (int i = 0; i < 8; ++i) {
            double mx = -1e300;
            for (int j = 0; j < 8; ++j) {
                double d = g.mid(0, i) - g.mid(0, j);
                mx = std::max(mx, in[j] - d * d / eps);
            }
            double s = 0;
            for (int j = 0; j < 8; ++j) {
                double d = g.mid(0, i) - g.mid(0, j);
                s += std::exp(in[j] - d * d / eps - mx);
            }
            CHECK(out[i] == doctest::Approx(mx + std::log(s)).epsilon(1e-12));
        }
    }
    SUBCASE("two dimensions, anisotropic cell count") {
        Grid g = Grid::box(0.0, 1.0, 4, 0.0, 1.0, 5);
        double eps = 0.11;
        LogKernel K(g, eps);
        std::vector<double> in(20), out;
        for (auto& x : in) x = uni(rng);
        K.apply(in, out);
        for (int iy = 0; iy < 5; ++iy)
            for (int ix = 0; ix < 4; ++ix) {
                double mx = -1e300;
                std::vector<double> terms;
                for (int jy = 0; jy < 5; ++jy)
                    for (int jx = 0; jx < 4; ++jx) {
                        auto xi = g.midpoint(ix, iy);
                        auto xj = g.midpoint(jx, jy);
                        double d2 = (xi[0] - xj[0]) * (xi[0] - xj[0]) +
                                    (xi[1] - xj[1]) * (xi[1] - xj[1]);
                        terms.push_back(in[g.index(jx, jy)] - d2 / eps);
                        mx = std::max(mx, terms.back());
                    }
                double s = 0;
                for (double t : terms) s += std::exp(t - mx);
                CHECK(out[g.index(ix, iy)] ==
                      doctest::Approx(mx + std::log(s)).epsilon(1e-12));
            }
    }
}

TEST_CASE("default epsilon scales with the squared diameter") {
    Grid g1 = Grid::line(0.0, 1.0, 16);
    CHECK(default_epsilon(g1) == doctest::Approx(1e-3).epsilon(1e-12));
    Grid g2 = Grid::box(0.0, 2.0, 8, 0.0, 1.0, 8);
    CHECK(default_epsilon(g2) == doctest::Approx(5e-3).epsilon(1e-12));
}

TEST_CASE("debiased entropic cost tracks the exact cost on smooth 1-D pairs") {
    Grid g = Grid::line(0.0, 1.0, 64);
    Density mu = gaussian_1d(g, 0.35, 0.1);
    Density nu = gaussian_1d(g, 0.62, 0.13);
    double exact = w2_exact_1d(mu, nu).cost;
    TransportResult r = sinkhorn_w2(mu, nu);
    CHECK(r.converged);
    CHECK(r.marginal_error <= 1e-7);
    CHECK(std::abs(r.cost - exact) / exact <= 1e-2);

    TransportResult rr = sinkhorn_w2(nu, mu);
    CHECK(std::abs(rr.cost - r.cost) <= 1e-6 * (1.0 + r.cost));

    TransportResult self = sinkhorn_w2(mu, mu);
    CHECK(std::abs(self.cost) <= 1e-9);
}

TEST_CASE("entropic cost of an exact 2-D translate is the squared shift") {
    Grid g = Grid::box(0.0, 1.0, 48, 0.0, 1.0, 48);
    Density mu = gaussian_2d(g, 0.3, 0.3, 0.08);
    Density nu = gaussian_2d(g, 0.55, 0.55, 0.08);
    TransportResult r = sinkhorn_w2(mu, nu);
    CHECK(r.converged);
    CHECK(std::abs(r.cost - 0.125) / 0.125 <= 0.02);
}

TEST_CASE("kept plan has the prescribed marginals") {
    Grid g = Grid::line(0.0, 1.0, 32);
    Density mu = gaussian_1d(g, 0.4, 0.12);
    Density nu = gaussian_1d(g, 0.6, 0.1);
    SinkhornConfig cfg;
    cfg.keep_plan = true;
    TransportResult r = sinkhorn_w2(mu, nu, cfg);
    REQUIRE(r.plan.size() == 32u * 32u);
    double dV = g.cell_volume;
    for (int i = 0; i < 32; ++i) {
        double row = 0, col = 0;
        for (int j = 0; j < 32; ++j) {
            row += r.plan[(std::size_t)i * 32 + j];
            col += r.plan[(std::size_t)j * 32 + i];
        }
        CHECK(row == doctest::Approx(mu[i] * dV).epsilon(1e-4));
        CHECK(col == doctest::Approx(nu[i] * dV).epsilon(1e-4));
    }
}

TEST_CASE("distance dispatch uses the requested backend") {
    Grid g = Grid::line(0.0, 1.0, 64);
    Density mu = gaussian_1d(g, 0.35, 0.1);
    Density nu = gaussian_1d(g, 0.6, 0.12);
    TransportConfig exact;
    exact.mode = TransportMode::exact_1d;
    CHECK(w2_distance_sq(mu, nu, exact) == doctest::Approx(w2_exact_1d(mu, nu).cost));
    TransportConfig ent;
    ent.mode = TransportMode::entropic;
    CHECK(w2_distance_sq(mu, nu, ent) == doctest::Approx(sinkhorn_w2(mu, nu).cost));

    State z{mu, nu}, zp{nu, mu};
    CHECK(product_distance_sq(z, zp, exact) ==
          doctest::Approx(2.0 * w2_exact_1d(mu, nu).cost).epsilon(1e-12));
    CHECK(product_distance_sq(z, z, exact) <= 1e-15);
}

TEST_SUITE_END();
