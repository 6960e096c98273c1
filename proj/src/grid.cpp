#include "pnpflow/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pnpflow {

static void check_axis(double lo, double hi, int n, int axis) {
    if (!(hi > lo))
        throw std::invalid_argument("grid: axis " + std::to_string(axis) +
                                    " needs upper > lower");
    if (n < 4)
        throw std::invalid_argument("grid: axis " + std::to_string(axis) +
                                    " needs at least 4 cells");
}

Grid Grid::line(double lo, double hi, int n_cells) {
    check_axis(lo, hi, n_cells, 0);
    Grid g;
    g.dim = 1;
    g.lower = {lo, 0.0};
    g.upper = {hi, 1.0};
    g.n = {n_cells, 1};
    g.dx = {(hi - lo) / n_cells, 1.0};
    g.cell_volume = g.dx[0];
    return g;
}

Grid Grid::box(double lo0, double hi0, int n0, double lo1, double hi1, int n1) {
    check_axis(lo0, hi0, n0, 0);
    check_axis(lo1, hi1, n1, 1);
    Grid g;
    g.dim = 2;
    g.lower = {lo0, lo1};
    g.upper = {hi0, hi1};
    g.n = {n0, n1};
    g.dx = {(hi0 - lo0) / n0, (hi1 - lo1) / n1};
    g.cell_volume = g.dx[0] * g.dx[1];
    return g;
}

double Grid::diameter_sq() const {
    double s = 0;
    for (int a = 0; a < dim; ++a) {
        double e = upper[a] - lower[a];
        s += e * e;
    }
    return s;
}

bool Grid::same_as(const Grid& o) const {
    return dim == o.dim && lower == o.lower && upper == o.upper && n == o.n;
}

ScalarField::ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if ((int)values.size() != g.total())
        throw std::invalid_argument("field: value count does not match grid");
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!a.same_as(b))
        throw std::invalid_argument(std::string(where) + ": grids differ");
}

double kahan_sum(const double* v, std::size_t n) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double y = v[i] - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

Density::Density(const Grid& g, std::vector<double> v) : grid_(g), values_(std::move(v)) {
    if ((int)values_.size() != g.total())
        throw std::invalid_argument("density: value count does not match grid");
    for (double x : values_)
        if (x < 0.0)
            throw std::invalid_argument("density: negative cell value");
    double mass = kahan_sum(values_) * g.cell_volume;
    if (std::abs(mass - 1.0) > kMassTol)
        throw std::invalid_argument("density: total mass " + std::to_string(mass) +
                                    " is not 1 within tolerance");
}

Density Density::normalized(const Grid& g, const std::vector<double>& v) {
    if ((int)v.size() != g.total())
        throw std::invalid_argument("density: value count does not match grid");
    std::vector<double> w(v);
    for (double& x : w)
        if (x < 0.0) {
            if (x > -1e-13) x = 0.0;
            else throw std::invalid_argument("density: negative cell value");
        }
    double mass = kahan_sum(w) * g.cell_volume;
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::invalid_argument("density: cannot normalize, total mass is not positive");
    for (double& x : w) x /= mass;
    return Density(g, std::move(w));
}

Density normalize(const Grid& g, const std::vector<double>& values) {
    return Density::normalized(g, values);
}

double integrate(const ScalarField& f) {
    return kahan_sum(f.values) * f.grid.cell_volume;
}

double integrate(const Density& rho) {
    return kahan_sum(rho.values()) * rho.grid().cell_volume;
}

double lp_norm(const Density& rho, double p) {
    if (std::isinf(p)) {
        double m = 0;
        for (double x : rho.values()) m = std::max(m, x);
        return m;
    }
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: exponent must be >= 1");
    std::vector<double> tmp(rho.values().size());
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = std::pow(rho[i], p);
    double s = kahan_sum(tmp) * rho.grid().cell_volume;
    return std::pow(s, 1.0 / p);
}

double boltzmann_entropy(const Density& rho) {
    std::vector<double> tmp(rho.values().size(), 0.0);
    for (std::size_t i = 0; i < tmp.size(); ++i) {
        double x = rho[i];
        if (x > 1e-300) tmp[i] = x * std::log(x);
    }
    return kahan_sum(tmp) * rho.grid().cell_volume;
}

double second_moment(const Density& rho, const std::array<double, 2>& center) {
    const Grid& g = rho.grid();
    std::vector<double> tmp(rho.values().size());
    for (int iy = 0; iy < g.n[1]; ++iy)
        for (int ix = 0; ix < g.n[0]; ++ix) {
            auto x = g.midpoint(ix, iy);
            double r2 = (x[0] - center[0]) * (x[0] - center[0]);
            if (g.dim == 2) r2 += (x[1] - center[1]) * (x[1] - center[1]);
            tmp[g.index(ix, iy)] = r2 * rho[g.index(ix, iy)];
        }
    return kahan_sum(tmp) * g.cell_volume;
}

double l1_distance(const Density& a, const Density& b) {
    require_same_grid(a.grid(), b.grid(), "l1_distance");
    std::vector<double> tmp(a.values().size());
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = std::abs(a[i] - b[i]);
    return kahan_sum(tmp) * a.grid().cell_volume;
}

}  // namespace pnpflow
