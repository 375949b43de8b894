#include "brtlab/chart.hpp"

#include <algorithm>
#include <memory>

namespace brt {

MetricChart disk_chart() {
    MetricChart c;
    c.dim = 2;
    c.h = 0.5;
    c.name = "disk";
    c.g = [](double x0, const Vec&) {
        TMat m;
        m(0, 0) = (1 - x0) * (1 - x0);
        return m;
    };
    c.dg_d0 = [](double x0, const Vec&) {
        TMat m;
        m(0, 0) = -2 * (1 - x0);
        return m;
    };
    c.dg_d00 = [](double, const Vec&) {
        TMat m;
        m(0, 0) = 2;
        return m;
    };
    c.dg_dk = [](double, const Vec&, int) { return TMat{}; };
    c.dg_d0k = [](double, const Vec&, int) { return TMat{}; };
    c.topology[0] = {true, 2 * M_PI};
    return c;
}

MetricChart band_chart(const Expr& kappa) {
    // Shared state so the five callbacks reuse one compiled kappa and its
    // symbolic derivative.
    struct Band {
        CompiledExpr k, k1;
    };
    auto band = std::make_shared<Band>();
    band->k = kappa.bind({"x1"});
    band->k1 = kappa.derivative("x1").bind({"x1"});

    MetricChart c;
    c.dim = 2;
    c.name = "band:kappa=" + kappa.str();

    // Keep 1 - kappa*x0 > 1/2 throughout the chart.
    double kmax = 0.0, kmin = 1e300;
    for (int i = 0; i < 4096; ++i) {
        double x1 = 2 * M_PI * i / 4096.0;
        double k = band->k(x1);
        kmax = std::max(kmax, k);
        kmin = std::min(kmin, k);
    }
    if (!(kmin > 0))
        throw ChartError("band chart needs kappa > 0, got min " + std::to_string(kmin));
    c.h = std::min(0.45 / kmax, 0.5);

    c.g = [band](double x0, const Vec& xb) {
        double q = 1 - band->k(xb[0]) * x0;
        TMat m;
        m(0, 0) = q * q;
        return m;
    };
    c.dg_d0 = [band](double x0, const Vec& xb) {
        double k = band->k(xb[0]);
        TMat m;
        m(0, 0) = -2 * k * (1 - k * x0);
        return m;
    };
    c.dg_d00 = [band](double, const Vec& xb) {
        double k = band->k(xb[0]);
        TMat m;
        m(0, 0) = 2 * k * k;
        return m;
    };
    c.dg_dk = [band](double x0, const Vec& xb, int) {
        double k = band->k(xb[0]), k1 = band->k1(xb[0]);
        TMat m;
        m(0, 0) = -2 * k1 * x0 * (1 - k * x0);
        return m;
    };
    c.dg_d0k = [band](double x0, const Vec& xb, int) {
        double k = band->k(xb[0]), k1 = band->k1(xb[0]);
        TMat m;
        m(0, 0) = -2 * k1 * (1 - 2 * k * x0);
        return m;
    };
    c.topology[0] = {true, 2 * M_PI};
    return c;
}

MetricChart sphere_band_chart() {
    // g = (1-x0)^2 g_{S^2} with xb = (polar, azimuth); the boundary is the
    // unit sphere, so boundary geodesics are great circles.
    auto sphere = [](const Vec& xb) {
        TMat s;
        s(0, 0) = 1;
        s(1, 1) = std::sin(xb[0]) * std::sin(xb[0]);
        return s;
    };
    auto sphere_d1 = [](const Vec& xb) {
        TMat s;
        s(1, 1) = 2 * std::sin(xb[0]) * std::cos(xb[0]);
        return s;
    };

    MetricChart c;
    c.dim = 3;
    c.h = 0.5;
    c.name = "sphere-band";
    c.g = [sphere](double x0, const Vec& xb) {
        TMat s = sphere(xb);
        double q = (1 - x0) * (1 - x0);
        TMat m;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m(i, j) = q * s(i, j);
        return m;
    };
    c.dg_d0 = [sphere](double x0, const Vec& xb) {
        TMat s = sphere(xb);
        double q = -2 * (1 - x0);
        TMat m;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m(i, j) = q * s(i, j);
        return m;
    };
    c.dg_d00 = [sphere](double, const Vec& xb) {
        TMat s = sphere(xb);
        TMat m;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m(i, j) = 2 * s(i, j);
        return m;
    };
    c.dg_dk = [sphere_d1](double x0, const Vec& xb, int k) {
        if (k != 0) return TMat{};  // no azimuth dependence
        TMat s = sphere_d1(xb);
        double q = (1 - x0) * (1 - x0);
        TMat m;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m(i, j) = q * s(i, j);
        return m;
    };
    c.dg_d0k = [sphere_d1](double x0, const Vec& xb, int k) {
        if (k != 0) return TMat{};
        TMat s = sphere_d1(xb);
        double q = -2 * (1 - x0);
        TMat m;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m(i, j) = q * s(i, j);
        return m;
    };
    c.topology[0] = {false, 0};         // polar angle lives in (0, pi)
    c.topology[1] = {true, 2 * M_PI};   // azimuth
    return c;
}

MetricChart flat_chart() {
    MetricChart c;
    c.dim = 2;
    c.h = 0.5;
    c.name = "flat";
    c.g = [](double, const Vec&) {
        TMat m;
        m(0, 0) = 1;
        return m;
    };
    c.dg_d0 = [](double, const Vec&) { return TMat{}; };
    c.dg_d00 = [](double, const Vec&) { return TMat{}; };
    c.dg_dk = [](double, const Vec&, int) { return TMat{}; };
    c.dg_d0k = [](double, const Vec&, int) { return TMat{}; };
    c.topology[0] = {true, 2 * M_PI};
    return c;
}

MetricChart parse_chart(const std::string& spec) {
    if (spec == "disk") return disk_chart();
    if (spec == "flat") return flat_chart();
    if (spec == "sphere-band") return sphere_band_chart();
    const std::string band_prefix = "band:kappa=";
    if (spec.rfind(band_prefix, 0) == 0)
        return band_chart(Expr::parse(spec.substr(band_prefix.size())));
    throw ChartError("unknown chart '" + spec +
                     "' (expected disk, flat, sphere-band, or band:kappa=<expr>)");
}

}  // namespace brt
