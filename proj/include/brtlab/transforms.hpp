#pragma once

#include <functional>
#include <vector>

#include "brtlab/billiards.hpp"
#include "brtlab/expr.hpp"

namespace brt {

// Weight pair (w, a): W(t) = w(alpha(t), alpha'(t)) * exp(int_0^t a ds), the
// attenuation integral evaluated piecewise across reflection events.
struct WeightSpec {
    std::function<double(const Point&, const Velocity&)> w;
    std::function<double(const Point&, const Velocity&)> a;

    static WeightSpec trivial();                 // w = 1, a = 0, W = 1
    static WeightSpec attenuated(double lambda); // w = 1, a = -lambda
    WeightSpec with_extra_attenuation(double lambda) const;  // a -> a - lambda
};

// f with analytic normal derivatives at the boundary (the recovery formula
// assumes the lower-order data is known; differentiating numerically would
// test the wrong thing).
struct ScalarField {
    std::function<double(const Point&)> value;
    std::vector<std::function<double(const Vec&)>> normal_derivs;  // order 0..k_max at x0 = 0
    int k_max = 0;

    // Expression in x0, x1 (and x2 for 3-D charts); normal derivatives are
    // produced symbolically and restricted to x0 = 0.
    static ScalarField from_expr(const Expr& e, int k_max, int bdim);
    static ScalarField constant(double c);
};

// f(x0, xb) - T^{k-1} f, the Taylor polynomial in x0 built from the normal
// derivatives; the remainder is (x0)^k / k! * d_nu^k f + o((x0)^k).
double taylor_subtract(const ScalarField& f, double x0, const Vec& xb, int k);

// Attenuation integral int_0^{t_i} a dt at every ray sample; piecewise per
// segment with the incoming velocity at event-closing samples.
std::vector<double> attenuation_integral(const MetricChart& chart, const WeightSpec& spec,
                                         const BrokenRay& ray);

// W(t) at arbitrary t (linear state interpolation between samples; exact at
// samples).
double weight_along(const MetricChart& chart, const WeightSpec& spec, const BrokenRay& ray,
                    double t);

// int_0^{t_end} W(t) * kernel(state(t)) dt over the ray's native samples,
// panels split at reflection events.  t_end must be <= duration; pass a
// negative value for the full ray.  Event-closing samples are evaluated with
// the incoming velocity of their segment.
double weighted_ray_integral(const MetricChart& chart, const WeightSpec& spec,
                             const BrokenRay& ray, double t_end,
                             const std::function<double(const PhaseState&)>& kernel);

// Broken ray transform: int W(t) f(gamma(t)) dt.
double broken_ray_transform(const MetricChart& chart, const WeightSpec& spec,
                            const ScalarField& f, const BrokenRay& ray, double t_end = -1);

// Ground truth of the recovery: int_0^L W_sigma(t) II(sigma'(t))^(-k/3) F(sigma(t)) dt.
// F is a plain boundary scalar, deliberately a different type from
// ScalarField so inputs and targets cannot be conflated.
double boundary_ray_transform(const MetricChart& chart, const WeightSpec& spec,
                              const BoundaryGeodesic& sigma,
                              const std::function<double(const Vec&)>& F, int k);

}  // namespace brt
