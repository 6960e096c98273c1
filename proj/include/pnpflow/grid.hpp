#pragma once

#include <array>
#include <vector>

namespace pnpflow {

inline constexpr double kMassTol = 1e-10;

// Uniform cell-centered Cartesian grid on a box, d = 1 or 2.
// In 1-D the second axis is a single unit-length cell so that
// cell_volume and index arithmetic work unchanged.
struct Grid {
    int dim = 1;
    std::array<double, 2> lower{0.0, 0.0};
    std::array<double, 2> upper{1.0, 1.0};
    std::array<int, 2> n{0, 1};
    std::array<double, 2> dx{0.0, 1.0};
    double cell_volume = 0.0;

    static Grid line(double lo, double hi, int n_cells);
    static Grid box(double lo0, double hi0, int n0,
                    double lo1, double hi1, int n1);

    int total() const { return n[0] * n[1]; }
    int index(int ix, int iy) const { return ix + n[0] * iy; }
    double mid(int axis, int i) const { return lower[axis] + (i + 0.5) * dx[axis]; }
    std::array<double, 2> midpoint(int ix, int iy) const { return {mid(0, ix), mid(1, iy)}; }
    double diameter_sq() const;
    bool same_as(const Grid& o) const;
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid(g), values(g.total(), fill) {}
    ScalarField(const Grid& g, std::vector<double> v);

    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }
};

// Nonnegative cell values with unit total mass.
class Density {
public:
    Density() = default;
    Density(const Grid& g, std::vector<double> v);  // validates sign and mass
    static Density normalized(const Grid& g, const std::vector<double>& v);

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }
    ScalarField as_field() const { return ScalarField(grid_, values_); }

private:
    Grid grid_;
    std::vector<double> values_;
};

struct State {
    Density u, v;
};

void require_same_grid(const Grid& a, const Grid& b, const char* where);

double kahan_sum(const double* v, std::size_t n);
inline double kahan_sum(const std::vector<double>& v) { return kahan_sum(v.data(), v.size()); }

double integrate(const ScalarField& f);
double integrate(const Density& rho);
double lp_norm(const Density& rho, double p);          // p in [1, inf]
double boltzmann_entropy(const Density& rho);          // sum rho log rho dV, 0 log 0 = 0
double second_moment(const Density& rho, const std::array<double, 2>& center);
Density normalize(const Grid& g, const std::vector<double>& values);
double l1_distance(const Density& a, const Density& b);

}  // namespace pnpflow
