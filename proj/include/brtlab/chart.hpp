#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "brtlab/expr.hpp"

namespace brt {

// Tangential index range is 1 or 2 (surfaces and the 3-D conformal ball);
// fixed-size storage keeps the integrator allocation-free.
using Vec = std::array<double, 2>;

struct TMat {
    double m[2][2] = {{0, 0}, {0, 0}};
    double& operator()(int i, int j) { return m[i][j]; }
    double operator()(int i, int j) const { return m[i][j]; }
};

// Point in boundary normal coordinates: x0 = distance to the boundary,
// xb = tangential coordinates.
struct Point {
    double x0 = 0;
    Vec xb{0, 0};
};

struct Velocity {
    double v0 = 0;
    Vec vb{0, 0};
};

struct Topology {
    bool periodic = true;
    double period = 2 * M_PI;  // coordinate wraps mod period when periodic
};

struct ChartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric in boundary normal coordinates: the full metric is block
// [[1, 0], [0, g_ij(x0, xb)]] (no cross terms by construction).  Tangential
// derivatives are supplied analytically because the recovery formulas need
// g_ij,00 and g_ij,0k, where stacked numerical differentiation loses digits.
struct MetricChart {
    int dim = 2;     // manifold dimension m
    double h = 0.5;  // normal-coordinate validity depth
    std::string name;

    std::function<TMat(double, const Vec&)> g;
    std::function<TMat(double, const Vec&)> dg_d0;   // g_ij,0
    std::function<TMat(double, const Vec&)> dg_d00;  // g_ij,00
    std::function<TMat(double, const Vec&, int)> dg_dk;   // g_ij,k  (tangential k)
    std::function<TMat(double, const Vec&, int)> dg_d0k;  // g_ij,0k

    std::array<Topology, 2> topology{};

    int bdim() const { return dim - 1; }

    void require_in_domain(double x0) const {
        if (!(x0 >= 0.0 && x0 < h))
            throw ChartError(name + ": x0 = " + std::to_string(x0) +
                             " outside chart depth [0, " + std::to_string(h) + ")");
    }
};

// Shipped charts.  Each has an independent oracle:
//   disk        g11 = (1-x0)^2            unit Euclidean disk (chord geometry)
//   band        g11 = (1-kappa(x1) x0)^2  planar domain with boundary curvature kappa
//   sphere-band g = (1-x0)^2 g_{S^2}      unit ball in R^3 (great circles)
//   flat        g11 = 1                   negative control, no convexity
MetricChart disk_chart();
MetricChart band_chart(const Expr& kappa);
MetricChart sphere_band_chart();
MetricChart flat_chart();

// Catalog lookup: "disk", "flat", "sphere-band", or "band:kappa=<expr>".
MetricChart parse_chart(const std::string& spec);

}  // namespace brt
