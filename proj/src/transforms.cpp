#include "brtlab/transforms.hpp"

#include <cmath>
#include <stdexcept>

#include "brtlab/quad.hpp"

namespace brt {

WeightSpec WeightSpec::trivial() {
    return {[](const Point&, const Velocity&) { return 1.0; },
            [](const Point&, const Velocity&) { return 0.0; }};
}

WeightSpec WeightSpec::attenuated(double lambda) {
    return {[](const Point&, const Velocity&) { return 1.0; },
            [lambda](const Point&, const Velocity&) { return -lambda; }};
}

WeightSpec WeightSpec::with_extra_attenuation(double lambda) const {
    auto base = a;
    return {w, [base, lambda](const Point& x, const Velocity& v) { return base(x, v) - lambda; }};
}

ScalarField ScalarField::from_expr(const Expr& e, int k_max, int bdim) {
    if (k_max < 0) throw std::invalid_argument("ScalarField: k_max must be >= 0");
    if (bdim != 1 && bdim != 2) throw std::invalid_argument("ScalarField: bdim must be 1 or 2");
    std::vector<std::string> vars{"x0", "x1"};
    if (bdim == 2) vars.push_back("x2");
    for (const auto& name : e.variables()) {
        bool known = false;
        for (const auto& v : vars) known = known || v == name;
        if (!known)
            throw std::invalid_argument("ScalarField: unknown variable '" + name +
                                        "' (expected x0, x1" +
                                        (bdim == 2 ? ", x2)" : ")"));
    }

    ScalarField f;
    f.k_max = k_max;
    CompiledExpr val = e.bind(vars);
    if (bdim == 1) {
        f.value = [val](const Point& x) {
            double in[2] = {x.x0, x.xb[0]};
            return val.eval(in);
        };
    } else {
        f.value = [val](const Point& x) {
            double in[3] = {x.x0, x.xb[0], x.xb[1]};
            return val.eval(in);
        };
    }

    Expr d = e;
    for (int order = 0; order <= k_max; ++order) {
        CompiledExpr c = d.bind(vars);
        if (bdim == 1) {
            f.normal_derivs.push_back([c](const Vec& xb) {
                double in[2] = {0.0, xb[0]};
                return c.eval(in);
            });
        } else {
            f.normal_derivs.push_back([c](const Vec& xb) {
                double in[3] = {0.0, xb[0], xb[1]};
                return c.eval(in);
            });
        }
        if (order < k_max) d = d.derivative("x0");
    }
    return f;
}

ScalarField ScalarField::constant(double c) {
    ScalarField f;
    f.k_max = 4;
    f.value = [c](const Point&) { return c; };
    f.normal_derivs.push_back([c](const Vec&) { return c; });
    for (int i = 1; i <= 4; ++i) f.normal_derivs.push_back([](const Vec&) { return 0.0; });
    return f;
}

double taylor_subtract(const ScalarField& f, double x0, const Vec& xb, int k) {
    if (k < 0 || k > static_cast<int>(f.normal_derivs.size()))
        throw std::invalid_argument("taylor_subtract: field carries normal derivatives up to order " +
                                    std::to_string(f.normal_derivs.size() ? f.normal_derivs.size() - 1 : 0));
    double taylor = 0, pow_x0 = 1, fact = 1;
    for (int j = 0; j < k; ++j) {
        if (j > 0) {
            pow_x0 *= x0;
            fact *= j;
        }
        taylor += pow_x0 / fact * f.normal_derivs[static_cast<std::size_t>(j)](xb);
    }
    return f.value({x0, xb}) - taylor;
}

namespace {

// Integral of the sampled function over [t[0], T] for T inside the grid:
// full panels up to the last node below T, then a quadratic stencil for the
// fractional tail.
double integrate_to(const std::vector<double>& t, const std::vector<double>& y, double T) {
    std::size_t n = t.size();
    if (n < 2) return 0;
    if (T >= t[n - 1]) return quad_panels(t, y, 0, n - 1);
    std::size_t j = 0;
    while (j + 1 < n && t[j + 1] <= T) ++j;
    double total = j > 0 ? quad_panels(t, y, 0, j) : 0.0;
    if (T > t[j]) {
        if (n >= 3) {
            std::size_t p = std::min(j > 0 ? j - 1 : j, n - 3);
            total += quad3(t[p], t[p + 1], t[p + 2], y[p], y[p + 1], y[p + 2], t[j], T);
        } else {
            double th = (T - t[0]) / (t[1] - t[0]);
            double yT = (1 - th) * y[0] + th * y[1];
            total += 0.5 * (T - t[j]) * (y[j] + yT);
        }
    }
    return total;
}

// Sample with the segment's own velocity: the stored velocity at an
// event-closing sample is the outgoing one, which belongs to the next segment.
PhaseState segment_sample(const BrokenRay& ray, std::size_t seg, std::size_t i) {
    PhaseState st = ray.samples[i];
    if (seg < ray.events.size() && i == ray.segment_end(seg)) st.v = ray.events[seg].v_in;
    return st;
}

}  // namespace

std::vector<double> attenuation_integral(const MetricChart&, const WeightSpec& spec,
                                         const BrokenRay& ray) {
    const auto& S = ray.samples;
    std::vector<double> A(S.size(), 0.0);
    double offset = 0;
    for (std::size_t s = 0; s < ray.segment_count(); ++s) {
        std::size_t i0 = ray.segment_starts[s], i1 = ray.segment_end(s);
        std::vector<double> t, y;
        t.reserve(i1 - i0 + 1);
        y.reserve(i1 - i0 + 1);
        for (std::size_t i = i0; i <= i1; ++i) {
            PhaseState st = segment_sample(ray, s, i);
            t.push_back(st.t);
            y.push_back(spec.a(st.x, st.v));
        }
        auto cum = cum_panels(t, y, 0, t.size() - 1);
        for (std::size_t j = 0; j < cum.size(); ++j) A[i0 + j] = offset + cum[j];
        offset = A[i1];
    }
    return A;
}

double weight_along(const MetricChart& chart, const WeightSpec& spec, const BrokenRay& ray,
                    double t) {
    const auto& S = ray.samples;
    if (S.size() < 2) throw std::invalid_argument("weight_along: ray carries no samples");
    double slack = 1e-12 * std::max(1.0, ray.duration);
    if (t < -slack || t > ray.duration + slack)
        throw std::invalid_argument("weight_along: t outside [0, duration]");
    t = std::min(std::max(t, 0.0), ray.duration);

    auto A = attenuation_integral(chart, spec, ray);

    std::size_t seg = 0;
    while (seg + 1 < ray.segment_count() && S[ray.segment_end(seg)].t < t) ++seg;
    std::size_t i0 = ray.segment_starts[seg], i1 = ray.segment_end(seg);

    std::vector<double> ts, as;
    ts.reserve(i1 - i0 + 1);
    as.reserve(i1 - i0 + 1);
    for (std::size_t i = i0; i <= i1; ++i) {
        PhaseState st = segment_sample(ray, seg, i);
        ts.push_back(st.t);
        as.push_back(spec.a(st.x, st.v));
    }
    double At = A[i0] + integrate_to(ts, as, t);

    std::size_t j = i0;
    while (j + 1 <= i1 && S[j + 1].t <= t) ++j;
    PhaseState st = segment_sample(ray, seg, j);
    if (j < i1 && t > S[j].t) {
        PhaseState nx = segment_sample(ray, seg, j + 1);
        double th = (t - st.t) / (nx.t - st.t);
        st.t = t;
        st.x.x0 = (1 - th) * st.x.x0 + th * nx.x.x0;
        st.v.v0 = (1 - th) * st.v.v0 + th * nx.v.v0;
        for (int b = 0; b < chart.bdim(); ++b) {
            st.x.xb[static_cast<std::size_t>(b)] =
                (1 - th) * st.x.xb[static_cast<std::size_t>(b)] + th * nx.x.xb[static_cast<std::size_t>(b)];
            st.v.vb[static_cast<std::size_t>(b)] =
                (1 - th) * st.v.vb[static_cast<std::size_t>(b)] + th * nx.v.vb[static_cast<std::size_t>(b)];
        }
    }
    return spec.w(st.x, st.v) * std::exp(At);
}

double weighted_ray_integral(const MetricChart& chart, const WeightSpec& spec,
                             const BrokenRay& ray, double t_end,
                             const std::function<double(const PhaseState&)>& kernel) {
    const auto& S = ray.samples;
    if (S.size() < 2) throw std::invalid_argument("weighted_ray_integral: ray carries no samples");
    double T = t_end < 0 ? ray.duration : t_end;
    double slack = 1e-9 * std::max(1.0, ray.duration);
    if (T > ray.duration + slack)
        throw std::invalid_argument("weighted_ray_integral: endpoint beyond the traced duration");
    T = std::min(T, ray.duration);

    auto A = attenuation_integral(chart, spec, ray);

    double total = 0;
    for (std::size_t s = 0; s < ray.segment_count(); ++s) {
        std::size_t i0 = ray.segment_starts[s], i1 = ray.segment_end(s);
        if (i1 <= i0) continue;
        if (S[i0].t >= T) break;
        std::vector<double> t, y;
        t.reserve(i1 - i0 + 1);
        y.reserve(i1 - i0 + 1);
        for (std::size_t i = i0; i <= i1; ++i) {
            PhaseState st = segment_sample(ray, s, i);
            t.push_back(st.t);
            y.push_back(spec.w(st.x, st.v) * std::exp(A[i]) * kernel(st));
        }
        if (t.back() <= T) {
            total += quad_panels(t, y, 0, t.size() - 1);
        } else {
            total += integrate_to(t, y, T);
            break;
        }
    }
    return total;
}

double broken_ray_transform(const MetricChart& chart, const WeightSpec& spec,
                            const ScalarField& f, const BrokenRay& ray, double t_end) {
    return weighted_ray_integral(chart, spec, ray, t_end,
                                 [&f](const PhaseState& st) { return f.value(st.x); });
}

double boundary_ray_transform(const MetricChart& chart, const WeightSpec& spec,
                              const BoundaryGeodesic& sigma,
                              const std::function<double(const Vec&)>& F, int k) {
    const auto& S = sigma.samples;
    if (S.size() < 2) throw std::invalid_argument("boundary_ray_transform: geodesic carries no samples");

    std::size_t n = S.size();
    std::vector<double> t(n), av(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point x{0.0, S[i].x};
        Velocity v{0.0, S[i].v};
        t[i] = S[i].t;
        av[i] = spec.a(x, v);
        double sff_factor = 1.0;
        if (k != 0) {
            double sff = second_fundamental_form(chart, x, S[i].v, S[i].v);
            if (!(sff > 0))
                throw std::domain_error("boundary_ray_transform: II <= 0 at t = " +
                                        std::to_string(S[i].t) + ", the curvature weight is singular");
            sff_factor = std::pow(sff, -static_cast<double>(k) / 3.0);
        }
        y[i] = spec.w(x, v) * sff_factor * F(S[i].x);
    }
    auto A = cum_panels(t, av, 0, n - 1);
    for (std::size_t i = 0; i < n; ++i) y[i] *= std::exp(A[i]);
    return quad_panels(t, y, 0, n - 1);
}

}  // namespace brt
