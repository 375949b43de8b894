#pragma once

#include <string>
#include <vector>

#include "brtlab/fit.hpp"
#include "brtlab/transforms.hpp"

namespace brt {

// One glancing ray's contribution to a recovery run.
struct RecoveryRow {
    double eps = 0;
    double energy0 = 0;        // E(0) = eps^2/2, read off the launch state
    double T = 0;              // truncation time: last boundary hit
    double raw_brt = 0;        // int_0^T W f
    double corrected = 0;      // int_0^T W (f - Taylor)
    double estimate = 0;       // scaled, comparable to the boundary integral
    double sup_x0 = 0;         // max depth reached
    double sup_rho_err = 0;    // max |E(t)/E(0) - rho(t)|
    bool failed = false;
    std::string error;
};

struct RecoveryReport {
    std::string sigma_id;
    int k = 0;
    std::vector<RecoveryRow> rows;  // decreasing eps
    Extrapolation extrapolation;    // over the successful estimates
    double target = 0;              // weighted boundary integral of the k-th normal derivative
    double abs_err = 0, rel_err = 0;
    OrderFit error_fit;             // |estimate - target| vs eps, when fittable
    bool error_fit_ok = false;
    double stage_tolerance = 0;
    bool within_tolerance = false;
};

// Relative tolerance the stage is expected to meet at eps_min = 2^-12;
// grows with k because the scaling multiplies by E(0)^-k.
double stage_tolerance(int k);

// eps_max, eps_max/2, ..., count values.
std::vector<double> halving_epsilons(double eps_max, int count);

// Last reflection-event time <= L (0 when the ray never returns to the
// boundary).
double truncation_time(const BrokenRay& ray, double L);

// Recover int_0^L W_sigma II^(-k/3) d_nu^k f (sigma(t)) dt from the glancing
// family: each ray contributes the Taylor-corrected transform over [0, T_eps]
// scaled by (2k+1)!/(6^k k!) * (3 II(sigma'(0))^(2/3) / 2E(0))^k, and the
// eps -> 0 limit is extrapolated.  The k!-only scaling converges to
// 6^k (k!)^2/(2k+1)! times the boundary integral (the per-bounce moment of
// (x0)^k is 4^k (k!)^2/(2k+1)! h_max^k tau, not (2/3)^k h_max^k tau as the
// k = 1 case suggests); the extra factor is folded in here so the estimates
// target the boundary integral itself.  For k <= 1 the two scalings agree.
RecoveryReport recover_k0(const MetricChart& chart, const WeightSpec& spec, const ScalarField& f,
                          const BoundaryGeodesic& sigma, const GlancingFamily& family,
                          const TomographySet& E = TomographySet::full());

RecoveryReport recover_k(const MetricChart& chart, const WeightSpec& spec, const ScalarField& f,
                         const BoundaryGeodesic& sigma, const GlancingFamily& family, int k,
                         const TomographySet& E = TomographySet::full());

// Stages k = 0..k_max on each geodesic, reusing one traced family per
// geodesic.  Reports are grouped by geodesic, k ascending.
std::vector<RecoveryReport> iterate_corollary(const MetricChart& chart, const WeightSpec& spec,
                                              const ScalarField& f,
                                              const std::vector<BoundaryGeodesic>& sigmas,
                                              int k_max, const std::vector<double>& epsilons,
                                              const TomographySet& E = TomographySet::full(),
                                              const IntegratorSettings& settings = {});

// d_nu^i f at a boundary point: short-geodesic averages of the weighted
// boundary integral for each T, extrapolated to T -> 0 and divided by
// w(x,v) II(v,v)^(-i/3).  Errors out when the weight vanishes at (x, v).
double pointwise_boundary_value(const MetricChart& chart, const WeightSpec& spec,
                                const ScalarField& f, const Vec& x, const Vec& v,
                                const std::vector<double>& T_list, int i = 0);

struct DiagnosticRow {
    double eps = 0;
    double sup_x0 = 0;       // sup_t gamma0
    double sup_v0 = 0;       // sup_t |dgamma0/dt|
    double sup_dist = 0;     // sup_t dist(tangential trace, sigma)
    double sup_rho_err = 0;  // sup_t |E(t)/E(0) - rho(t)|
    bool failed = false;
};

struct DiagnosticsTable {
    std::vector<DiagnosticRow> rows;
    OrderFit order_x0, order_v0, order_dist, order_rho;
    bool fits_ok = false;
};

// Uniform-convergence observables of the family against sigma, with fitted
// orders in eps for each column.
DiagnosticsTable convergence_diagnostics(const MetricChart& chart, const GlancingFamily& family,
                                         const BoundaryGeodesic& sigma);

}  // namespace brt
