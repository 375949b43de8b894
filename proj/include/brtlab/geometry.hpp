#pragma once

#include <functional>
#include <vector>

#include "brtlab/chart.hpp"

namespace brt {

// Christoffel symbols at a point, stored by block.  In boundary normal
// coordinates the normal rows/columns collapse:
//   G^0_00 = G^0_0i = G^i_00 = 0,
//   G^0_ij = -1/2 g_ij,0,   G^i_j0 = 1/2 g^ik g_kj,0,
// and G^i_jk is the ordinary tangential expression.
struct Christoffel {
    int n = 1;                                 // tangential dimensions
    double g0ij[2][2] = {{0, 0}, {0, 0}};      // G^0_ij
    double gi0j[2][2] = {{0, 0}, {0, 0}};      // G^i_j0, indexed [i][j]
    double gijk[2][2][2] = {{{0}}};            // G^i_jk

    // Full-index accessor, alpha/beta/gamma in 0..m-1 with 0 the normal slot.
    double full(int alpha, int beta, int gamma) const;
};

Christoffel christoffel(const MetricChart& chart, const Point& x);

namespace detail {
// Assembly without the chart-domain check; the tracer evaluates trial steps
// that momentarily overshoot x0 = 0 before event location pulls them back.
Christoffel christoffel_raw(const MetricChart& chart, const Point& x);
}  // namespace detail

// Scalar second fundamental form -1/2 g_ij,0 a^i b^j; normal components of
// a and b do not enter.  Defined off the boundary by the same formula.
double second_fundamental_form(const MetricChart& chart, const Point& x,
                               const Vec& a, const Vec& b);

// A(v) = A_ijk v^i v^j v^k with A_ijk = g_il,0 G^l_kj - 1/2 g_ij,0k.
// Along a boundary geodesic, d/dt II(sigma') = A(sigma').
double a_cubic(const MetricChart& chart, const Point& x, const Vec& v);

struct BoundarySample {
    double t;
    Vec x, v;
};

struct BoundaryGeodesic {
    std::vector<BoundarySample> samples;  // uniform step, final sample at t = L
    double L = 0;
    double step = 0;
    bool start_in_E = false, end_in_intE = false;

    // Hermite interpolation between samples (exact when coordinates are
    // linear in t, which covers every catalog boundary geodesic).
    BoundarySample at(double t) const;
};

// Unit-speed geodesic of the boundary metric g(0, .) from (x0, v0), sampled
// at the given step (default min(1e-3, L/1e4)).
BoundaryGeodesic integrate_boundary_geodesic(const MetricChart& chart, const Vec& x0,
                                             const Vec& v0, double L, double step = 0);

struct GeodesicCheck {
    double max_speed_err = 0;  // | |v|_g - 1 |
    double max_residual = 0;   // |v' + Gamma(v,v)| via 5-point differencing
};
GeodesicCheck check_boundary_geodesic(const MetricChart& chart, const BoundaryGeodesic& sigma);

// Accessible boundary subset E = {level >= 0} with a roundoff band at the
// zero crossing; interior membership is strict.
struct TomographySet {
    std::function<double(const Vec&)> level;
    double tol = 1e-9;

    bool contains(const Vec& x) const { return level(x) >= -tol; }            // closure(E)
    bool interior_contains(const Vec& x) const { return level(x) > tol; }     // int E

    static TomographySet full();
};

struct AdmissibilityReport {
    bool admissible = false;
    bool start_ok = false, end_ok = false;
    double min_sff = 0;  // min over t of II(sigma'(t))
};

// Admissible: sigma(0) in closure(E), sigma(L) in closure(int E), and the
// boundary strictly convex along sigma (min II > 0).
AdmissibilityReport is_admissible(const MetricChart& chart, const BoundaryGeodesic& sigma,
                                  const TomographySet& E);

// rho(t)^k computed both as exp(k * int 2A/(3 II)) and in the closed form
// (II(sigma'(t)) / II(sigma'(0)))^(2k/3); the two must agree to 1e-8 (this is
// the integrated form of d/dt II = A) and the closed form is returned.
double rho_weight(const MetricChart& chart, const BoundaryGeodesic& sigma, double t, int k);

// Closed-form rho(t)^k without the quadrature cross-check (hot path for
// per-sample diagnostics).
double rho_closed_form(const MetricChart& chart, const BoundaryGeodesic& sigma, double t, int k);

}  // namespace brt
