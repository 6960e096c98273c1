#include <doctest.h>

#include "pnpflow/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace pnpflow;

TEST_SUITE_BEGIN("grid");

TEST_CASE("line factory fills derived quantities") {
    Grid g = Grid::line(0.0, 1.0, 128);
    CHECK(g.dim == 1);
    CHECK(g.n[0] == 128);
    CHECK(g.n[1] == 1);
    CHECK(g.dx[0] == 1.0 / 128.0);
    CHECK(g.dx[1] == 1.0);
    CHECK(g.cell_volume == 1.0 / 128.0);
    CHECK(g.total() == 128);
    CHECK(g.mid(0, 0) == doctest::Approx(0.5 / 128.0).epsilon(1e-15));
    CHECK(g.mid(0, 127) == doctest::Approx(1.0 - 0.5 / 128.0).epsilon(1e-15));
    CHECK(g.diameter_sq() == doctest::Approx(1.0));
}

TEST_CASE("box factory handles anisotropic axes") {
    Grid g = Grid::box(0.0, 1.0, 8, 0.0, 2.0, 16);
    CHECK(g.dim == 2);
    CHECK(g.dx[0] == 0.125);
    CHECK(g.dx[1] == 0.125);
    CHECK(g.cell_volume == 0.125 * 0.125);
    CHECK(g.total() == 128);
    CHECK(g.index(3, 2) == 3 + 8 * 2);
    CHECK(g.diameter_sq() == doctest::Approx(5.0));
    auto m = g.midpoint(0, 0);
    CHECK(m[0] == doctest::Approx(0.0625));
    CHECK(m[1] == doctest::Approx(0.0625));
}

TEST_CASE("factories reject degenerate axes") {
    CHECK_THROWS_AS(Grid::line(0.0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(Grid::line(1.0, 1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(Grid::box(0.0, 1.0, 8, 2.0, 1.0, 8), std::invalid_argument);
}

TEST_CASE("same_as distinguishes grids and require_same_grid throws") {
    Grid a = Grid::line(0.0, 1.0, 16);
    Grid b = Grid::line(0.0, 1.0, 16);
    Grid c = Grid::line(0.0, 2.0, 16);
    CHECK(a.same_as(b));
    CHECK(!a.same_as(c));
    CHECK_NOTHROW(require_same_grid(a, b, "test"));
    CHECK_THROWS_AS(require_same_grid(a, c, "test"), std::invalid_argument);
}

TEST_CASE("kahan summation keeps small addends a naive loop drops") {
    std::vector<double> v;
    v.push_back(1.0);
    for (int i = 0; i < 1000; ++i) v.push_back(1e-16);
    double naive = 0.0;
    for (double x : v) naive += x;
    CHECK(naive == 1.0);  // every 1e-16 is absorbed
    double compensated = kahan_sum(v);
    CHECK(compensated == doctest::Approx(1.0 + 1e-13).epsilon(1e-12));
    CHECK(compensated > 1.0);
}

TEST_CASE("uniform density integrates to exactly one") {
    Grid g = Grid::line(0.0, 1.0, 128);  // dx is a power of two
    Density rho(g, std::vector<double>(128, 1.0));
    CHECK(integrate(rho) == 1.0);
    CHECK(integrate(rho.as_field()) == 1.0);
}

TEST_CASE("density constructor validates sign and mass") {
    Grid g = Grid::line(0.0, 1.0, 16);
    std::vector<double> ok(16, 1.0);
    CHECK_NOTHROW(Density(g, ok));

    std::vector<double> neg(16, 1.0);
    neg[3] = -0.5;
    CHECK_THROWS_AS(Density(g, neg), std::invalid_argument);

    std::vector<double> off(16, 1.0 + 1e-6);
    CHECK_THROWS_AS(Density(g, off), std::invalid_argument);

    std::vector<double> wrong_size(15, 1.0);
    CHECK_THROWS_AS(Density(g, wrong_size), std::invalid_argument);
}

TEST_CASE("normalized absorbs rounding noise but rejects real negatives") {
    Grid g = Grid::line(0.0, 1.0, 16);
    std::vector<double> v(16, 3.7);
    v[2] = 3.7 - 1e-14;  // slight dent survives normalization
    Density rho = Density::normalized(g, v);
    CHECK(integrate(rho) == doctest::Approx(1.0).epsilon(1e-14));

    std::vector<double> tiny_neg(16, 1.0);
    tiny_neg[0] = -1e-14;
    CHECK_NOTHROW(Density::normalized(g, tiny_neg));

    std::vector<double> real_neg(16, 1.0);
    real_neg[0] = -1e-6;
    CHECK_THROWS_AS(Density::normalized(g, real_neg), std::invalid_argument);

    std::vector<double> zero(16, 0.0);
    CHECK_THROWS_AS(Density::normalized(g, zero), std::invalid_argument);
}

TEST_CASE("lp norms of a two-level density match closed forms") {
    Grid g = Grid::line(0.0, 1.0, 64);
    std::vector<double> v(64, 0.0);
    for (int i = 0; i < 32; ++i) v[i] = 2.0;  // 2 on [0, 1/2]
    Density rho(g, v);
    CHECK(lp_norm(rho, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lp_norm(rho, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    // ||rho||_p = 2^(1 - 1/p)
    CHECK(lp_norm(rho, 3.0) == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-13));
    double inf = std::numeric_limits<double>::infinity();
    CHECK(lp_norm(rho, inf) == 2.0);
    CHECK_THROWS_AS(lp_norm(rho, 0.5), std::invalid_argument);

    Density flat(g, std::vector<double>(64, 1.0));
    CHECK(lp_norm(flat, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lp_norm(flat, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lp_norm(flat, inf) == 1.0);
}

TEST_CASE("boltzmann entropy matches closed forms and ignores vacuum") {
    Grid g2 = Grid::line(0.0, 2.0, 64);
    Density half(g2, std::vector<double>(64, 0.5));
    CHECK(boltzmann_entropy(half) == doctest::Approx(std::log(0.5)).epsilon(1e-14));

    Grid g1 = Grid::line(0.0, 1.0, 64);
    std::vector<double> v(64, 0.0);
    for (int i = 32; i < 64; ++i) v[i] = 2.0;
    Density packed(g1, v);  // vacuum on half the cells
    CHECK(boltzmann_entropy(packed) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("second moment of the uniform density matches the discrete sum") {
    const int n = 64;
    Grid g = Grid::line(0.0, 1.0, n);
    Density rho(g, std::vector<double>(n, 1.0));
    // sum dx (x_i - 1/2)^2 = (1 - 1/n^2) / 12 exactly for midpoints
    double expected = (1.0 - 1.0 / (double(n) * n)) / 12.0;
    CHECK(second_moment(rho, {0.5, 0.0}) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(second_moment(rho, {0.5, 0.0}) == doctest::Approx(1.0 / 12.0).epsilon(1e-3));

    Grid gb = Grid::box(0.0, 1.0, 16, 0.0, 1.0, 16);
    Density flat(gb, std::vector<double>(gb.total(), 1.0));
    double expected2 = 2.0 * (1.0 - 1.0 / 256.0) / 12.0;
    CHECK(second_moment(flat, {0.5, 0.5}) == doctest::Approx(expected2).epsilon(1e-14));
}

TEST_CASE("l1 distance between nested uniform densities is exact") {
    Grid g = Grid::line(0.0, 1.0, 64);
    std::vector<double> v(64, 0.0);
    for (int i = 0; i < 32; ++i) v[i] = 2.0;
    Density a(g, v);
    Density b(g, std::vector<double>(64, 1.0));
    CHECK(l1_distance(a, b) == 1.0);
    CHECK(l1_distance(a, a) == 0.0);

    Grid other = Grid::line(0.0, 2.0, 64);
    Density c(other, std::vector<double>(64, 0.5));
    CHECK_THROWS_AS(l1_distance(a, c), std::invalid_argument);
}

TEST_SUITE_END();
