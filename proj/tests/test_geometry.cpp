#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "brtlab/geometry.hpp"

using namespace brt;

namespace {

// All Christoffel symbols from raw metric samples only, central differences
// in every slot; the analytic assembly has to reproduce this.
double christoffel_fd(const MetricChart& chart, const Point& x, int al, int be, int ga) {
    const double h = 1e-5;
    const int m = chart.dim;
    auto G = [&](double x0, Vec xb, int a, int b) -> double {
        if (a == 0 && b == 0) return 1.0;
        if (a == 0 || b == 0) return 0.0;
        return chart.g(x0, xb)(a - 1, b - 1);
    };
    auto dG = [&](int a, int b, int slot) {  // d g_ab / d x^slot
        Point p = x, q = x;
        if (slot == 0) {
            p.x0 += h;
            q.x0 -= h;
        } else {
            p.xb[slot - 1] += h;
            q.xb[slot - 1] -= h;
        }
        return (G(p.x0, p.xb, a, b) - G(q.x0, q.xb, a, b)) / (2 * h);
    };
    // inverse of the block metric at x
    double inv[3][3] = {{0}};
    inv[0][0] = 1.0;
    TMat g = chart.g(x.x0, x.xb);
    if (m == 2) {
        inv[1][1] = 1.0 / g(0, 0);
    } else {
        double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        inv[1][1] = g(1, 1) / det;
        inv[2][2] = g(0, 0) / det;
        inv[1][2] = inv[2][1] = -g(0, 1) / det;
    }
    double sum = 0;
    for (int de = 0; de < m; ++de)
        sum += 0.5 * inv[al][de] * (dG(de, be, ga) + dG(de, ga, be) - dG(be, ga, de));
    return sum;
}

}  // namespace

TEST_CASE("christoffel: flat chart vanishes") {
    MetricChart flat = flat_chart();
    Christoffel c = christoffel(flat, Point{0.2, {1.3, 0}});
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int g = 0; g < 2; ++g) CHECK(c.full(a, b, g) == 0.0);
}

TEST_CASE("christoffel: normal-coordinate identities") {
    // Gamma^i_00 = 0 and Gamma^0_00 = Gamma^0_0i = 0 hold exactly by
    // construction in these coordinates.
    for (const MetricChart& chart :
         {disk_chart(), band_chart(Expr::parse("1+0.5*cos(x1)")), sphere_band_chart()}) {
        Christoffel c = christoffel(chart, Point{0.07, {0.9, 0.4}});
        CHECK(c.full(0, 0, 0) == 0.0);
        for (int i = 1; i < chart.dim; ++i) {
            CHECK(c.full(i, 0, 0) == 0.0);
            CHECK(c.full(0, 0, i) == 0.0);
            CHECK(c.full(0, i, 0) == 0.0);
        }
    }
}

TEST_CASE("christoffel: disk values at the boundary") {
    // g11 = (1-x0)^2: g11,0(0) = -2, so Gamma^0_11 = 1 and Gamma^1_10 = -1.
    Christoffel c = christoffel(disk_chart(), Point{0.0, {1.0, 0}});
    CHECK(c.full(0, 1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.full(1, 1, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(c.full(1, 0, 1) == doctest::Approx(-1.0).epsilon(1e-14));  // symmetry in lower pair
}

TEST_CASE("christoffel: matches finite differences of raw g") {
    struct Probe {
        MetricChart chart;
        Point x;
    };
    const Probe probes[] = {
        {disk_chart(), Point{0.13, {2.1, 0}}},
        {band_chart(Expr::parse("1+0.5*cos(x1)")), Point{0.08, {0.6, 0}}},
        {sphere_band_chart(), Point{0.11, {1.1, 0.7}}},
    };
    for (const auto& [chart, x] : probes) {
        Christoffel c = christoffel(chart, x);
        for (int a = 0; a < chart.dim; ++a)
            for (int b = 0; b < chart.dim; ++b)
                for (int g = 0; g < chart.dim; ++g) {
                    double fd = christoffel_fd(chart, x, a, b, g);
                    CHECK(c.full(a, b, g) ==
                          doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
                }
    }
}

TEST_CASE("christoffel: chart domain is enforced") {
    MetricChart disk = disk_chart();
    CHECK_THROWS_AS(christoffel(disk, Point{0.6, {0, 0}}), ChartError);
    CHECK_THROWS_AS(christoffel(disk, Point{-0.1, {0, 0}}), ChartError);
}

TEST_CASE("second fundamental form") {
    MetricChart flat = flat_chart();
    CHECK(second_fundamental_form(flat, Point{0.0, {0.3, 0}}, {1, 0}, {1, 0}) == 0.0);

    // unit circle has curvature 1
    MetricChart disk = disk_chart();
    CHECK(second_fundamental_form(disk, Point{0.0, {0.5, 0}}, {1, 0}, {1, 0}) ==
          doctest::Approx(1.0).epsilon(1e-14));

    // variable-curvature band: II(unit tangent) = kappa(x1) at the boundary
    Expr kap = Expr::parse("1+0.5*cos(x1)");
    MetricChart band = band_chart(kap);
    for (double x1 : {0.0, 0.7, 2.0, 4.5}) {
        CHECK(second_fundamental_form(band, Point{0.0, {x1, 0}}, {1, 0}, {1, 0}) ==
              doctest::Approx(kap.eval1("x1", x1)).epsilon(1e-13));
    }

    SUBCASE("bilinear, symmetric, and defined off the boundary") {
        Point p{0.09, {1.4, 0.6}};
        MetricChart sb = sphere_band_chart();
        Vec a{0.8, -0.3}, b{0.1, 1.2};
        double ab = second_fundamental_form(sb, p, a, b);
        double ba = second_fundamental_form(sb, p, b, a);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-15));
        Vec a3{3 * a[0], 3 * a[1]};
        CHECK(second_fundamental_form(sb, p, a3, b) == doctest::Approx(3 * ab).epsilon(1e-14));
        // additivity in the first slot
        Vec apb{a[0] + b[0], a[1] + b[1]};
        double bb = second_fundamental_form(sb, p, b, b);
        CHECK(second_fundamental_form(sb, p, apb, b) ==
              doctest::Approx(ab + bb).epsilon(1e-13).scale(std::abs(ab) + std::abs(bb)));
    }
}

TEST_CASE("a_cubic") {
    CHECK(a_cubic(flat_chart(), Point{0.1, {0.2, 0}}, {1, 0}) == 0.0);

    // constant curvature: II is constant along the boundary, so A = 0
    CHECK(a_cubic(disk_chart(), Point{0.0, {1.1, 0}}, {1, 0}) ==
          doctest::Approx(0.0).epsilon(1e-14));

    // variable band: A(sigma') = d/dt II(sigma') along the boundary geodesic
    MetricChart band = band_chart(Expr::parse("1+0.5*cos(x1)"));
    BoundaryGeodesic sig = integrate_boundary_geodesic(band, {0.3, 0}, {1, 0}, 2.0);
    const double dt = 1e-4;
    for (double t : {0.5, 1.0, 1.7}) {
        BoundarySample sm = sig.at(t), sp = sig.at(t + dt), sn = sig.at(t - dt);
        double d_ii = (second_fundamental_form(band, Point{0, sp.x}, sp.v, sp.v) -
                       second_fundamental_form(band, Point{0, sn.x}, sn.v, sn.v)) /
                      (2 * dt);
        double a = a_cubic(band, Point{0, sm.x}, sm.v);
        CHECK(a == doctest::Approx(d_ii).epsilon(1e-6).scale(std::max(1.0, std::abs(d_ii))));
    }
}

TEST_CASE("boundary geodesics") {
    SUBCASE("disk: arclength flow on the circle") {
        BoundaryGeodesic sig = integrate_boundary_geodesic(disk_chart(), {0, 0}, {1, 0}, M_PI);
        CHECK(sig.L == doctest::Approx(M_PI).epsilon(1e-15));
        CHECK(sig.samples.back().x[0] == doctest::Approx(M_PI).epsilon(1e-12));
        // Hermite interpolation is exact for the linear flow
        CHECK(sig.at(0.37).x[0] == doctest::Approx(0.37).epsilon(1e-13));
        CHECK(sig.at(0.37).v[0] == doctest::Approx(1.0).epsilon(1e-13));
    }

    SUBCASE("flat band: straight line") {
        BoundaryGeodesic sig = integrate_boundary_geodesic(flat_chart(), {0.5, 0}, {1, 0}, 2.0);
        CHECK(sig.samples.back().x[0] == doctest::Approx(2.5).epsilon(1e-12));
    }

    SUBCASE("sphere band: tilted great circle closes after 2 pi") {
        MetricChart sb = sphere_band_chart();
        Vec x0{M_PI / 2, 0};
        Vec v0{0.6, 0.8};  // |v|^2 = 0.36 + sin^2(pi/2) * 0.64 = 1
        BoundaryGeodesic sig = integrate_boundary_geodesic(sb, x0, v0, 2 * M_PI);
        const BoundarySample& end = sig.samples.back();
        CHECK(end.x[0] == doctest::Approx(x0[0]).epsilon(1e-6));
        double d2 = std::remainder(end.x[1] - x0[1], 2 * M_PI);
        CHECK(std::abs(d2) < 1e-6);
        CHECK(end.v[0] == doctest::Approx(v0[0]).epsilon(1e-6));
        CHECK(end.v[1] == doctest::Approx(v0[1]).epsilon(1e-6));
    }

    SUBCASE("invariants: unit speed and geodesic residual") {
        MetricChart band = band_chart(Expr::parse("1+0.5*cos(x1)"));
        BoundaryGeodesic sig = integrate_boundary_geodesic(band, {M_PI / 2, 0}, {1, 0}, M_PI);
        GeodesicCheck chk = check_boundary_geodesic(band, sig);
        CHECK(chk.max_speed_err <= 1e-8);
        CHECK(chk.max_residual <= 1e-8);

        MetricChart sb = sphere_band_chart();
        BoundaryGeodesic sig3 =
            integrate_boundary_geodesic(sb, {M_PI / 2, 0}, {0.6, 0.8}, 2 * M_PI);
        GeodesicCheck chk3 = check_boundary_geodesic(sb, sig3);
        CHECK(chk3.max_speed_err <= 1e-8);
        CHECK(chk3.max_residual <= 1e-8);
    }

    SUBCASE("non-unit launch speed is rejected") {
        CHECK_THROWS_AS(integrate_boundary_geodesic(disk_chart(), {0, 0}, {2, 0}, 1.0),
                        std::exception);
    }
}

TEST_CASE("admissibility") {
    MetricChart disk = disk_chart();
    BoundaryGeodesic arc = integrate_boundary_geodesic(disk, {0, 0}, {1, 0}, 1.5);
    AdmissibilityReport rep = is_admissible(disk, arc, TomographySet::full());
    CHECK(rep.admissible);
    CHECK(rep.min_sff == doctest::Approx(1.0).epsilon(1e-12));

    // flat boundary: strict convexity fails
    BoundaryGeodesic line = integrate_boundary_geodesic(flat_chart(), {0, 0}, {1, 0}, 1.0);
    AdmissibilityReport flat_rep = is_admissible(flat_chart(), line, TomographySet::full());
    CHECK_FALSE(flat_rep.admissible);
    CHECK(flat_rep.min_sff == 0.0);

    // variable band: margin is the minimum curvature along sigma
    Expr kap = Expr::parse("1+0.5*cos(x1)");
    MetricChart band = band_chart(kap);
    BoundaryGeodesic sig = integrate_boundary_geodesic(band, {M_PI / 2, 0}, {1, 0}, M_PI);
    AdmissibilityReport band_rep = is_admissible(band, sig, TomographySet::full());
    CHECK(band_rep.admissible);
    CHECK(band_rep.min_sff == doctest::Approx(0.5).epsilon(1e-10));  // kappa(pi) = 1/2

    SUBCASE("direction flip preserves admissibility with symmetric endpoints") {
        BoundaryGeodesic rev =
            integrate_boundary_geodesic(band, sig.samples.back().x, {-1, 0}, M_PI);
        AdmissibilityReport rev_rep = is_admissible(band, rev, TomographySet::full());
        CHECK(rev_rep.admissible == band_rep.admissible);
        CHECK(rev_rep.min_sff == doctest::Approx(band_rep.min_sff).epsilon(1e-8));
    }

    SUBCASE("endpoint outside E is rejected") {
        // E = right half boundary {cos(x1) >= 0}; this arc ends at x1 = 2.5
        // where cos < 0
        TomographySet E{[](const Vec& x) { return std::cos(x[0]); }, 1e-9};
        BoundaryGeodesic long_arc = integrate_boundary_geodesic(disk, {0, 0}, {1, 0}, 2.5);
        AdmissibilityReport r = is_admissible(disk, long_arc, E);
        CHECK(r.start_ok);
        CHECK_FALSE(r.end_ok);
        CHECK_FALSE(r.admissible);
    }
}

TEST_CASE("tomography set membership bands") {
    TomographySet E{[](const Vec& x) { return std::cos(x[0]); }, 1e-9};
    CHECK(E.contains({M_PI / 2, 0}));            // level = 0 on the closure edge
    CHECK_FALSE(E.interior_contains({M_PI / 2, 0}));
    CHECK(E.interior_contains({0.0, 0}));
    CHECK_FALSE(E.contains({M_PI, 0}));
    CHECK(TomographySet::full().interior_contains({123.0, -4.0}));
}

TEST_CASE("rho weight") {
    MetricChart disk = disk_chart();
    BoundaryGeodesic arc = integrate_boundary_geodesic(disk, {0, 0}, {1, 0}, 2.0);
    for (int k : {1, 2, 5})
        CHECK(rho_weight(disk, arc, 1.3, k) == doctest::Approx(1.0).epsilon(1e-10));

    Expr kap = Expr::parse("1+0.5*cos(x1)");
    MetricChart band = band_chart(kap);
    BoundaryGeodesic sig = integrate_boundary_geodesic(band, {M_PI / 2, 0}, {1, 0}, M_PI);

    CHECK(rho_weight(band, sig, 0.0, 3) == doctest::Approx(1.0).epsilon(1e-12));

    // closed form (kappa(t)/kappa(0))^(2k/3); rho_weight itself asserts the
    // quadrature form agrees to 1e-8
    for (double t : {0.4, 1.1, 2.9}) {
        double k_t = kap.eval1("x1", sig.at(t).x[0]);
        double k_0 = kap.eval1("x1", sig.at(0.0).x[0]);
        CHECK(rho_weight(band, sig, t, 1) ==
              doctest::Approx(std::pow(k_t / k_0, 2.0 / 3.0)).epsilon(1e-8));
        CHECK(rho_weight(band, sig, t, 2) ==
              doctest::Approx(std::pow(k_t / k_0, 4.0 / 3.0)).epsilon(1e-8));
        CHECK(rho_closed_form(band, sig, t, 1) ==
              doctest::Approx(rho_weight(band, sig, t, 1)).epsilon(1e-12));
    }
}

TEST_CASE("chart catalog and derivative consistency") {
    // parse_chart round trip of names
    CHECK(parse_chart("disk").name == "disk");
    CHECK(parse_chart("flat").name == "flat");
    CHECK(parse_chart("sphere-band").dim == 3);
    MetricChart band = parse_chart("band:kappa=1+0.5*cos(x1)");
    CHECK(band.name == "band:kappa=1+0.5*cos(x1)");
    CHECK_THROWS_AS(parse_chart("torus"), ChartError);
    CHECK_THROWS_AS(parse_chart("band:kappa=-1"), ChartError);  // needs kappa > 0

    // analytic derivative callbacks vs central differences of g
    const double h = 1e-5;
    for (const MetricChart& chart : {disk_chart(), band, sphere_band_chart()}) {
        const int n = chart.bdim();
        Point x{0.12, {0.8, 0.5}};
        TMat d0 = chart.dg_d0(x.x0, x.xb);
        TMat d00 = chart.dg_d00(x.x0, x.xb);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double fd0 = (chart.g(x.x0 + h, x.xb)(i, j) - chart.g(x.x0 - h, x.xb)(i, j)) / (2 * h);
                CHECK(d0(i, j) == doctest::Approx(fd0).epsilon(1e-6).scale(std::max(1.0, std::abs(fd0))));
                double fd00 = (chart.dg_d0(x.x0 + h, x.xb)(i, j) - chart.dg_d0(x.x0 - h, x.xb)(i, j)) / (2 * h);
                CHECK(d00(i, j) == doctest::Approx(fd00).epsilon(1e-6).scale(std::max(1.0, std::abs(fd00))));
                for (int k = 0; k < n; ++k) {
                    Vec xp = x.xb, xm = x.xb;
                    xp[k] += h;
                    xm[k] -= h;
                    double fdk = (chart.g(x.x0, xp)(i, j) - chart.g(x.x0, xm)(i, j)) / (2 * h);
                    CHECK(chart.dg_dk(x.x0, x.xb, k)(i, j) ==
                          doctest::Approx(fdk).epsilon(1e-6).scale(std::max(1.0, std::abs(fdk))));
                    double fd0k = (chart.dg_d0(x.x0, xp)(i, j) - chart.dg_d0(x.x0, xm)(i, j)) / (2 * h);
                    CHECK(chart.dg_d0k(x.x0, x.xb, k)(i, j) ==
                          doctest::Approx(fd0k).epsilon(1e-6).scale(std::max(1.0, std::abs(fd0k))));
                }
            }
    }
}
