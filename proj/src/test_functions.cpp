#include "pnpflow/test_functions.hpp"

#include <cmath>

namespace pnpflow {

namespace {

double bump1(double r) {
    double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r2));
}

double bump1_deriv(double r) {
    double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    double d = 1.0 - r2;
    return bump1(r) * (-2.0 * r / (d * d));
}

}  // namespace

double BumpField::value(const std::array<double, 2>& x) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= bump1((x[a] - center[a]) / radius[a]);
    return v;
}

std::array<double, 2> BumpField::gradient(const std::array<double, 2>& x) const {
    std::array<double, 2> grad{0.0, 0.0};
    std::array<double, 2> b{1.0, 1.0}, db{0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
        double r = (x[a] - center[a]) / radius[a];
        b[a] = bump1(r);
        db[a] = bump1_deriv(r) / radius[a];
    }
    grad[0] = db[0] * (dim == 2 ? b[1] : 1.0);
    if (dim == 2) grad[1] = b[0] * db[1];
    return grad;
}

ScalarField BumpField::sample(const Grid& g) const {
    ScalarField f(g);
    for (int iy = 0; iy < g.n[1]; ++iy)
        for (int ix = 0; ix < g.n[0]; ++ix)
            f.values[g.index(ix, iy)] = value(g.midpoint(ix, iy));
    return f;
}

std::array<double, 2> BumpVectorField::value(const std::array<double, 2>& x) const {
    std::array<double, 2> v{0.0, 0.0};
    v[axis] = shape.value(x);
    return v;
}

double BumpVectorField::divergence(const std::array<double, 2>& x) const {
    return shape.gradient(x)[axis];
}

std::vector<BumpField> standard_bump_family(const Grid& g) {
    const double frac_centers[5] = {0.3, 0.4, 0.5, 0.6, 0.7};
    const double frac_scales[3] = {0.12, 0.2, 0.28};
    std::vector<BumpField> fam;
    for (double fc : frac_centers)
        for (double fs : frac_scales) {
            BumpField b;
            b.dim = g.dim;
            bool ok = true;
            for (int a = 0; a < g.dim; ++a) {
                double ext = g.upper[a] - g.lower[a];
                b.center[a] = g.lower[a] + fc * ext;
                b.radius[a] = fs * ext;
                double margin = std::min(b.center[a] - g.lower[a],
                                         g.upper[a] - b.center[a]);
                if (b.radius[a] > margin) b.radius[a] = 0.95 * margin;
                if (b.radius[a] < 2.0 * g.dx[a]) ok = false;
            }
            if (ok) fam.push_back(b);
        }
    return fam;
}

std::vector<BumpVectorField> standard_zeta_family(const Grid& g) {
    std::vector<BumpVectorField> fam;
    for (const BumpField& b : standard_bump_family(g))
        for (int a = 0; a < g.dim; ++a)
            fam.push_back(BumpVectorField{b, a});
    return fam;
}

}  // namespace pnpflow
