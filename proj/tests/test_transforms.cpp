#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "brtlab/transforms.hpp"

using namespace brt;

namespace {

PhaseState glancing_launch(double eps, double x1 = 0.3) {
    PhaseState s;
    s.x = Point{0.0, {x1, 0}};
    s.v = Velocity{eps, {std::sqrt(1 - eps * eps), 0}};
    return s;
}

const Expr kappa_expr = Expr::parse("1+0.5*cos(x1)");

BrokenRay disk_chord(double theta, double extra = 1e-3) {
    PhaseState s;
    s.x = Point{0.0, {0.0, 0}};
    s.v = Velocity{std::sin(theta), {std::cos(theta), 0}};
    return trace(disk_chart(), s, 2 * std::sin(theta) + extra);
}

}  // namespace

TEST_CASE("scalar fields from expressions") {
    ScalarField f = ScalarField::from_expr(Expr::parse("exp(x0)*cos(x1)"), 2, 1);
    CHECK(f.k_max == 2);

    // boundary restriction agrees with the order-0 derivative callback
    for (double x1 : {0.0, 0.9, 2.7}) {
        CHECK(f.value(Point{0.0, {x1, 0}}) ==
              doctest::Approx(f.normal_derivs[0]({x1, 0})).epsilon(1e-10));
        // symbolic first derivative vs finite difference of the value
        double h = 1e-5;
        double fd = (f.value(Point{h, {x1, 0}}) - f.value(Point{-h, {x1, 0}})) / (2 * h);
        CHECK(f.normal_derivs[1]({x1, 0}) == doctest::Approx(fd).epsilon(1e-5));
        // exp(x0)cos(x1): every normal derivative restricts to cos(x1)
        CHECK(f.normal_derivs[2]({x1, 0}) == doctest::Approx(std::cos(x1)).epsilon(1e-12));
    }

    ScalarField c = ScalarField::constant(3.5);
    CHECK(c.value(Point{0.2, {1, 0}}) == 3.5);
    CHECK(c.normal_derivs[0]({7, 0}) == 3.5);
    CHECK(c.normal_derivs[1]({7, 0}) == 0.0);

    CHECK_THROWS_AS(ScalarField::from_expr(Expr::parse("x0+y"), 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(ScalarField::from_expr(Expr::parse("x2"), 1, 1), std::invalid_argument);
    // x2 is fine on a 3-D chart
    CHECK_NOTHROW(ScalarField::from_expr(Expr::parse("x2"), 1, 2));
}

TEST_CASE("taylor subtraction") {
    // constants vanish at k = 1
    ScalarField c = ScalarField::constant(2.0);
    CHECK(taylor_subtract(c, 0.3, {0, 0}, 1) == 0.0);

    // (x0)^2 at k = 2: both lower-order terms are zero
    ScalarField sq = ScalarField::from_expr(Expr::parse("x0^2"), 2, 1);
    CHECK(taylor_subtract(sq, 0.05, {0, 0}, 2) == 0.05 * 0.05);

    // exp(x0) at k = 2, x0 = 0.01: e^0.01 - 1 - 0.01
    ScalarField ex = ScalarField::from_expr(Expr::parse("exp(x0)"), 2, 1);
    CHECK(taylor_subtract(ex, 0.01, {0, 0}, 2) ==
          doctest::Approx(5.016708416805754e-05).epsilon(1e-9));

    // k beyond the stored derivatives is an error
    CHECK_THROWS_AS(taylor_subtract(sq, 0.1, {0, 0}, 5), std::invalid_argument);
}

TEST_CASE("weight along a ray") {
    MetricChart disk = disk_chart();
    double eps = 0.05;
    BrokenRay ray = trace(disk, glancing_launch(eps), 1.0);
    REQUIRE(ray.status == TraceStatus::ok);

    SUBCASE("trivial weight is 1 everywhere") {
        for (double t : {0.0, 0.17, 0.5, 1.0})
            CHECK(weight_along(disk, WeightSpec::trivial(), ray, t) == 1.0);
    }

    SUBCASE("constant attenuation gives e^(-lambda t)") {
        const double lam = 0.7;
        WeightSpec spec = WeightSpec::attenuated(lam);
        for (double t : {0.0, 0.3, 0.99})
            CHECK(weight_along(disk, spec, ray, t) ==
                  doctest::Approx(std::exp(-lam * t)).epsilon(1e-12));
    }

    SUBCASE("w = II on the unit disk is 1 in the glancing limit") {
        WeightSpec spec;
        spec.w = [&](const Point& x, const Velocity& v) {
            return second_fundamental_form(disk, x, v.vb, v.vb);
        };
        spec.a = [](const Point&, const Velocity&) { return 0.0; };
        // at the launch the tangential speed is sqrt(1 - eps^2) exactly
        CHECK(weight_along(disk, spec, ray, 0.0) == doctest::Approx(1 - eps * eps).epsilon(1e-15));
        double sup = 0;
        for (const auto& s : ray.samples)
            sup = std::max(sup, std::abs(weight_along(disk, spec, ray, s.t) - 1.0));
        CHECK(sup <= 2 * eps * eps);
    }

    SUBCASE("attenuation integral is cumulative and piecewise") {
        WeightSpec spec;
        spec.w = [](const Point&, const Velocity&) { return 1.0; };
        spec.a = [](const Point& x, const Velocity&) { return std::cos(x.xb[0]); };
        std::vector<double> acc = attenuation_integral(disk, spec, ray);
        REQUIRE(acc.size() == ray.samples.size());
        CHECK(acc.front() == 0.0);
        // nondecreasing here since cos(x1) > 0 along this stretch
        for (std::size_t i = 0; i + 1 < acc.size(); ++i) CHECK(acc[i + 1] >= acc[i]);
    }

    CHECK_THROWS_AS(weight_along(disk, WeightSpec::trivial(), ray, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(weight_along(disk, WeightSpec::trivial(), ray, -0.1), std::invalid_argument);
}

TEST_CASE("attenuation chains multiplicatively across a split") {
    // Restart the trace at a reflection event and check W_full(t) =
    // W_full(s) * W_tail(t - s): two independent quadratures of the same
    // attenuation, split where the integrand has its kink.
    MetricChart band = band_chart(kappa_expr);
    double eps = 0.04;
    BrokenRay full = trace(band, glancing_launch(eps), 1.2);
    REQUIRE(full.status == TraceStatus::ok);
    REQUIRE(full.events.size() >= 2);

    WeightSpec spec;
    spec.w = [](const Point&, const Velocity&) { return 1.0; };
    spec.a = [](const Point& x, const Velocity& v) { return std::cos(x.xb[0]) + 0.3 * v.v0; };

    const ReflectionEvent& ev = full.events[1];
    PhaseState restart;
    restart.x = Point{0.0, ev.xb};
    restart.v = ev.v_out;
    BrokenRay tail = trace(band, restart, 1.2 - ev.t);
    REQUIRE(tail.status == TraceStatus::ok);

    for (double dt : {0.05, 0.21, 0.4}) {
        double w_full = weight_along(band, spec, full, ev.t + dt);
        double w_split = weight_along(band, spec, full, ev.t) * weight_along(band, spec, tail, dt);
        CHECK(w_full == doctest::Approx(w_split).epsilon(1e-10));
    }
}

TEST_CASE("broken ray transform values") {
    MetricChart disk = disk_chart();
    const double theta = 0.1;
    const double tau = 2 * std::sin(theta);
    BrokenRay chord = disk_chord(theta);
    REQUIRE(chord.events.size() == 1);

    SUBCASE("f = 1, trivial weight: the duration") {
        ScalarField one = ScalarField::constant(1.0);
        CHECK(broken_ray_transform(disk, WeightSpec::trivial(), one, chord) ==
              doctest::Approx(chord.duration).epsilon(1e-13));
        // one chord exactly: cut at the reflection time
        CHECK(broken_ray_transform(disk, WeightSpec::trivial(), one, chord, tau) ==
              doctest::Approx(tau).epsilon(1e-12));
    }

    SUBCASE("f = x0 over one chord: depth integral") {
        ScalarField depth = ScalarField::from_expr(Expr::parse("x0"), 1, 1);
        double got = broken_ray_transform(disk, WeightSpec::trivial(), depth, chord, tau);
        double c = std::cos(theta);
        double exact = std::sin(theta) - c * c * std::asinh(std::tan(theta));
        CHECK(got == doctest::Approx(exact).epsilon(1e-7));
        CHECK(std::abs(got - 2.0 / 3.0 * std::pow(std::sin(theta), 3)) < std::pow(theta, 4));
    }

    SUBCASE("linear in f, scales exactly in w") {
        ScalarField fa = ScalarField::from_expr(Expr::parse("x0*cos(x1)"), 1, 1);
        ScalarField fb = ScalarField::from_expr(Expr::parse("sin(x1)"), 1, 1);
        ScalarField combo =
            ScalarField::from_expr(Expr::parse("2*x0*cos(x1) - 3*sin(x1)"), 1, 1);
        WeightSpec spec = WeightSpec::attenuated(0.4);
        double a = broken_ray_transform(disk, spec, fa, chord);
        double b = broken_ray_transform(disk, spec, fb, chord);
        double both = broken_ray_transform(disk, spec, combo, chord);
        CHECK(both == doctest::Approx(2 * a - 3 * b).epsilon(1e-12));

        WeightSpec doubled = spec;
        doubled.w = [](const Point&, const Velocity&) { return 2.0; };
        CHECK(broken_ray_transform(disk, doubled, fa, chord) == 2 * a);
    }

    SUBCASE("matches the kernel form of the weighted integral") {
        ScalarField depth = ScalarField::from_expr(Expr::parse("x0"), 1, 1);
        double via_field = broken_ray_transform(disk, WeightSpec::trivial(), depth, chord);
        double via_kernel =
            weighted_ray_integral(disk, WeightSpec::trivial(), chord, chord.duration,
                                  [](const PhaseState& s) { return s.x.x0; });
        CHECK(via_field == via_kernel);
    }

    SUBCASE("endpoint beyond the trace is rejected") {
        ScalarField one = ScalarField::constant(1.0);
        CHECK_THROWS_AS(
            broken_ray_transform(disk, WeightSpec::trivial(), one, chord, chord.duration + 1),
            std::invalid_argument);
    }
}

TEST_CASE("broken ray transform: step self-consistency") {
    // halving the integrator step moves the value by much less than the
    // previous halving did (order >= 2 in the step)
    MetricChart band = band_chart(kappa_expr);
    ScalarField f = ScalarField::from_expr(Expr::parse("exp(x0)*cos(x1)"), 1, 1);
    WeightSpec spec = WeightSpec::attenuated(0.5);

    double v[3];
    int idx = 0;
    for (double div : {16.0, 32.0, 64.0}) {
        IntegratorSettings st;
        st.step_divisor = div;
        st.max_step = 4e-3 * 16.0 / div;
        BrokenRay ray = trace(band, glancing_launch(0.05), 1.0, st);
        REQUIRE(ray.status == TraceStatus::ok);
        v[idx++] = broken_ray_transform(band, spec, f, ray);
    }
    double gap1 = std::abs(v[1] - v[0]), gap2 = std::abs(v[2] - v[1]);
    CHECK(gap2 <= 0.5 * gap1 + 1e-14);
}

TEST_CASE("boundary ray transform") {
    MetricChart disk = disk_chart();
    BoundaryGeodesic arc = integrate_boundary_geodesic(disk, {0, 0}, {1, 0}, 2.0);
    auto one = [](const Vec&) { return 1.0; };

    // k = 0, F = 1: the length, for any chart
    CHECK(boundary_ray_transform(disk, WeightSpec::trivial(), arc, one, 0) ==
          doctest::Approx(2.0).epsilon(1e-13));

    // on the disk II = 1, so every k gives the length
    for (int k : {1, 2, 5})
        CHECK(boundary_ray_transform(disk, WeightSpec::trivial(), arc, one, k) ==
              doctest::Approx(2.0).epsilon(1e-10));

    SUBCASE("band at k = 3: integral of 1/kappa") {
        MetricChart band = band_chart(kappa_expr);
        BoundaryGeodesic sig = integrate_boundary_geodesic(band, {M_PI / 2, 0}, {1, 0}, M_PI);
        double got = boundary_ray_transform(band, WeightSpec::trivial(), sig, one, 3);
        // independent composite-Simpson oracle of int 1/kappa(x1(t)) dt
        const int n = 4096;
        double h = M_PI / n, acc = 0;
        auto integrand = [&](double t) { return 1.0 / (1 + 0.5 * std::cos(M_PI / 2 + t)); };
        for (int i = 0; i < n; i += 2)
            acc += h / 3 * (integrand(i * h) + 4 * integrand((i + 1) * h) + integrand((i + 2) * h));
        CHECK(got == doctest::Approx(acc).epsilon(1e-8));
    }

    SUBCASE("attenuated weight") {
        WeightSpec spec = WeightSpec::attenuated(1.0);
        CHECK(boundary_ray_transform(disk, spec, arc, one, 0) ==
              doctest::Approx(1 - std::exp(-2.0)).epsilon(1e-10));
    }

    SUBCASE("flat chart with k > 0: singular weight") {
        MetricChart flat = flat_chart();
        BoundaryGeodesic line = integrate_boundary_geodesic(flat, {0, 0}, {1, 0}, 1.0);
        CHECK_THROWS_AS(boundary_ray_transform(flat, WeightSpec::trivial(), line, one, 1),
                        std::domain_error);
        // k = 0 never touches the II factor
        CHECK(boundary_ray_transform(flat, WeightSpec::trivial(), line, one, 0) ==
              doctest::Approx(1.0).epsilon(1e-13));
    }
}
