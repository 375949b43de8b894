#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "brtlab/reconstruction.hpp"

namespace brt {

using Cplx = std::complex<double>;

// Exponentially weighted boundary integrals int_0^L e^(-lambda s) F(s) ds,
// the data from which piecewise-constant boundary values are recovered.
struct MomentSystem {
    double L = 0;
    std::vector<double> lambdas;  // strictly increasing
    std::vector<double> moments;
    int bins = 8;                 // must stay <= lambdas.size() / 2
};

// lambda_j = -20/L + j * (4/L), j = 1..count.  The negative tail weights the
// far end of the interval and keeps the moment matrix well enough conditioned
// for a bin solve (starting the grid at 0 leaves the bins beyond the first
// few numerically invisible).
std::vector<double> default_lambda_grid(double L, int count = 32);

// Moments produced by the full glancing-family pipeline: one recovery per
// lambda with attenuation a = base.a - lambda, all reusing the same traced
// family.
MomentSystem exponential_moments(const MetricChart& chart, const WeightSpec& base,
                                 const ScalarField& f, const BoundaryGeodesic& sigma,
                                 const std::vector<double>& lambdas, const GlancingFamily& family,
                                 int bins = 8);

// Exact forward map for piecewise-constant boundary values c over uniform
// bins (synthetic noise-free data for solver tests).
MomentSystem forward_moments(double L, const std::vector<double>& c,
                             const std::vector<double>& lambdas);

struct BinnedValues {
    std::vector<double> values;
    std::vector<double> edges;  // bins + 1 entries over [0, L]
    double residual = 0;        // ||M c - moments|| before regularization
};

// Least-squares bin solve of the moment system with Tikhonov regularization;
// throws when the residual exceeds residual_tol * ||moments|| (inconsistent
// data).
BinnedValues laplace_recover(const MomentSystem& ms, double alpha = 1e-10,
                             double residual_tol = 1e-3);

// Compactly supported function on the plane with enough structure for exact
// panel alignment: jump lines for box-type fields, a radial profile for
// rotationally symmetric ones.
struct PlanarField {
    std::function<Cplx(Cplx)> value;
    double xlo = 0, xhi = 0, ylo = 0, yhi = 0;  // support box
    std::vector<double> breaks_x, breaks_y;     // interior jump lines

    bool radial = false;  // value depends only on |z - center|
    Cplx center{0, 0};
    double rmax = 0;
    std::vector<double> breaks_r;
    std::function<double(double)> profile;

    static PlanarField two_squares();  // +1 on [0,1]^2, -1 on [-1,0]^2
    static PlanarField disk_indicator(double R = 1, Cplx center = {0, 0});
    static PlanarField annulus_witness(Cplx center = {0, 0});  // (r<1) - 4*(r<1/2), zero mean
    static PlanarField square_indicator(double a);             // [0,a]^2
    static PlanarField from_profile(std::function<double(double)> profile, double rmax,
                                    std::vector<double> breaks, Cplx center = {0, 0});
};

// S_mu f(z) = f(mu z) and T_w f(z) = f(z - w), with support metadata mapped
// along.
PlanarField scaled(const PlanarField& f, double mu);
PlanarField translated(const PlanarField& f, Cplx w);

// (f * g)(z) by direct panel quadrature aligned to both fields' jump lines;
// desk scale only.
PlanarField convolve(const PlanarField& f, const PlanarField& g, int inner_per_cell = 8);

// If(lambda) = int e^(lambda z) f(z) dH^2(z).  Panels are aligned to the
// field's jump lines (polar grid for radial fields); `resolution` is the
// node budget per axis.
Cplx transform_I(const PlanarField& f, Cplx lambda, int resolution = 256);

// Same, but refuses to return a value that moves by more than tol when the
// resolution is doubled.
Cplx transform_I_checked(const PlanarField& f, Cplx lambda, int resolution = 256,
                         double tol = 1e-6);

struct IdentityReport {
    double scaling_err = 0;      // I(S_mu f)(l) vs mu^-2 If(l/mu)
    double translation_err = 0;  // I(T_w f)(l) vs e^(lw) If(l)
    double composition_err = 0;  // both identities chained, either order
    double convolution_err = 0;  // I(f*g)(l) vs If(l) Ig(l)
    double tol = 1e-6;
    bool ok = false;
};

IdentityReport check_identities(const PlanarField& f, double mu, Cplx w, const PlanarField& g,
                                const std::vector<Cplx>& lambda_grid, double tol = 1e-6);

struct WitnessReport {
    double mean = 0;     // If(0), the plain integral
    double max_abs = 0;  // max |If| over the grid
    double tol = 1e-6;
    bool in_kernel = false;
};

// Zero-mean rotationally symmetric fields transform to zero identically;
// the witness measures how close a candidate comes.
WitnessReport rotsym_kernel_witness(const PlanarField& f, const std::vector<Cplx>& lambda_grid,
                                    double tol = 1e-6);
WitnessReport rotsym_kernel_witness(const std::function<double(double)>& profile, double rmax,
                                    const std::vector<double>& breaks, Cplx center,
                                    const std::vector<Cplx>& lambda_grid, double tol = 1e-6);

// |d(If)/d(conj lambda)| estimated by central differences; zero for an
// analytic transform up to O(h^2) truncation.
double cauchy_riemann_defect(const PlanarField& f, Cplx lambda, double h = 1e-3);

}  // namespace brt
