#include "brtlab/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "brtlab/quad.hpp"

namespace brt {

namespace {

// Inverse of the (1x1 or 2x2) tangential metric block.
TMat invert(const TMat& g, int n) {
    TMat inv;
    if (n == 1) {
        if (!(g(0, 0) > 0)) throw ChartError("metric not positive definite");
        inv(0, 0) = 1.0 / g(0, 0);
        return inv;
    }
    double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    if (!(det > 0 && g(0, 0) > 0)) throw ChartError("metric not positive definite");
    inv(0, 0) = g(1, 1) / det;
    inv(1, 1) = g(0, 0) / det;
    inv(0, 1) = -g(0, 1) / det;
    inv(1, 0) = -g(1, 0) / det;
    return inv;
}

double dot_g(const TMat& g, int n, const Vec& a, const Vec& b) {
    double s = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += g(i, j) * a[i] * b[j];
    return s;
}

}  // namespace

double Christoffel::full(int alpha, int beta, int gamma) const {
    if (alpha == 0) {
        if (beta == 0 || gamma == 0) return 0.0;  // G^0_00 = G^0_0i = 0
        return g0ij[beta - 1][gamma - 1];
    }
    if (beta == 0 && gamma == 0) return 0.0;      // G^i_00 = 0
    if (beta == 0) return gi0j[alpha - 1][gamma - 1];
    if (gamma == 0) return gi0j[alpha - 1][beta - 1];
    return gijk[alpha - 1][beta - 1][gamma - 1];
}

Christoffel christoffel(const MetricChart& chart, const Point& x) {
    chart.require_in_domain(x.x0);
    return detail::christoffel_raw(chart, x);
}

Christoffel detail::christoffel_raw(const MetricChart& chart, const Point& x) {
    const int n = chart.bdim();
    TMat g = chart.g(x.x0, x.xb);
    TMat gin = invert(g, n);
    TMat d0 = chart.dg_d0(x.x0, x.xb);
    TMat dk[2];
    for (int k = 0; k < n; ++k) dk[k] = chart.dg_dk(x.x0, x.xb, k);

    Christoffel c;
    c.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            c.g0ij[i][j] = -0.5 * d0(i, j);
            double s = 0;
            for (int k = 0; k < n; ++k) s += gin(i, k) * d0(k, j);
            c.gi0j[i][j] = 0.5 * s;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0;
                for (int l = 0; l < n; ++l)
                    s += gin(i, l) * (dk[k](l, j) + dk[j](l, k) - dk[l](j, k));
                c.gijk[i][j][k] = 0.5 * s;
            }
    return c;
}

double second_fundamental_form(const MetricChart& chart, const Point& x,
                               const Vec& a, const Vec& b) {
    chart.require_in_domain(x.x0);
    TMat d0 = chart.dg_d0(x.x0, x.xb);
    return -0.5 * dot_g(d0, chart.bdim(), a, b);
}

double a_cubic(const MetricChart& chart, const Point& x, const Vec& v) {
    chart.require_in_domain(x.x0);
    const int n = chart.bdim();
    TMat d0 = chart.dg_d0(x.x0, x.xb);
    Christoffel c = christoffel(chart, x);
    double total = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double a_ijk = -0.5 * chart.dg_d0k(x.x0, x.xb, k)(i, j);
                for (int l = 0; l < n; ++l) a_ijk += d0(i, l) * c.gijk[l][k][j];
                total += a_ijk * v[i] * v[j] * v[k];
            }
    return total;
}

BoundarySample BoundaryGeodesic::at(double t) const {
    if (samples.empty()) throw std::runtime_error("empty boundary geodesic");
    if (t <= samples.front().t) return samples.front();
    if (t >= samples.back().t) return samples.back();
    std::size_t lo = 0, hi = samples.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (samples[mid].t <= t) lo = mid;
        else hi = mid;
    }
    const BoundarySample& a = samples[lo];
    const BoundarySample& b = samples[hi];
    double dt = b.t - a.t;
    double u = (t - a.t) / dt;
    // cubic Hermite in position, its derivative for velocity
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    double d00 = 6 * u * (u - 1) / dt, d10 = (1 - u) * (1 - 3 * u);
    double d01 = -6 * u * (u - 1) / dt, d11 = u * (3 * u - 2);
    BoundarySample out;
    out.t = t;
    for (int i = 0; i < 2; ++i) {
        out.x[i] = h00 * a.x[i] + h10 * dt * a.v[i] + h01 * b.x[i] + h11 * dt * b.v[i];
        out.v[i] = d00 * a.x[i] + d10 * a.v[i] + d01 * b.x[i] + d11 * b.v[i];
    }
    return out;
}

namespace {

// RHS of the boundary geodesic equation: x' = v, v' = -Gamma_bar(v, v) with
// Gamma_bar built from the boundary metric g(0, .).
void boundary_rhs(const MetricChart& chart, const Vec& x, const Vec& v, Vec& dv) {
    const int n = chart.bdim();
    TMat g = chart.g(0.0, x);
    TMat gin = invert(g, n);
    TMat dk[2];
    for (int k = 0; k < n; ++k) dk[k] = chart.dg_dk(0.0, x, k);
    for (int i = 0; i < n; ++i) {
        double acc = 0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double gamma = 0;
                for (int l = 0; l < n; ++l)
                    gamma += gin(i, l) * (dk[k](l, j) + dk[j](l, k) - dk[l](j, k));
                acc += 0.5 * gamma * v[j] * v[k];
            }
        dv[i] = -acc;
    }
}

}  // namespace

BoundaryGeodesic integrate_boundary_geodesic(const MetricChart& chart, const Vec& x0,
                                             const Vec& v0, double L, double step) {
    const int n = chart.bdim();
    {
        TMat g = chart.g(0.0, x0);
        double sp = std::sqrt(dot_g(g, n, v0, v0));
        if (std::abs(sp - 1.0) > 1e-9)
            throw std::invalid_argument("boundary geodesic launch is not unit speed (|v|_g = " +
                                        std::to_string(sp) + ")");
    }
    if (step <= 0) step = std::min(1e-3, L / 1e4);

    BoundaryGeodesic out;
    out.L = L;
    out.step = step;
    Vec x = x0, v = v0;
    double t = 0;
    out.samples.push_back({t, x, v});
    auto rk4 = [&](double h) {
        Vec k1v, k2v, k3v, k4v, xt;
        boundary_rhs(chart, x, v, k1v);
        for (int i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * h * v[i];
        Vec vt;
        for (int i = 0; i < n; ++i) vt[i] = v[i] + 0.5 * h * k1v[i];
        boundary_rhs(chart, xt, vt, k2v);
        Vec xt2;
        for (int i = 0; i < n; ++i) xt2[i] = x[i] + 0.5 * h * vt[i];
        Vec vt2;
        for (int i = 0; i < n; ++i) vt2[i] = v[i] + 0.5 * h * k2v[i];
        boundary_rhs(chart, xt2, vt2, k3v);
        Vec xt3;
        for (int i = 0; i < n; ++i) xt3[i] = x[i] + h * vt2[i];
        Vec vt3;
        for (int i = 0; i < n; ++i) vt3[i] = v[i] + h * k3v[i];
        boundary_rhs(chart, xt3, vt3, k4v);
        for (int i = 0; i < n; ++i) {
            x[i] += h / 6.0 * (v[i] + 2 * vt[i] + 2 * vt2[i] + vt3[i]);
            v[i] += h / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
        }
        t += h;
    };
    while (t < L - 1e-15 * std::max(1.0, L)) {
        double h = std::min(step, L - t);
        rk4(h);
        if (L - t < 1e-15 * std::max(1.0, L)) t = L;
        out.samples.push_back({t, x, v});
    }
    out.samples.back().t = L;
    return out;
}

GeodesicCheck check_boundary_geodesic(const MetricChart& chart, const BoundaryGeodesic& sigma) {
    const int n = chart.bdim();
    GeodesicCheck chk;
    for (const auto& s : sigma.samples) {
        TMat g = chart.g(0.0, s.x);
        chk.max_speed_err =
            std::max(chk.max_speed_err, std::abs(std::sqrt(dot_g(g, n, s.v, s.v)) - 1.0));
    }
    // residual |v' + Gamma(v,v)| with v' from a 5-point stencil (O(h^4), good
    // enough to certify 1e-8 at the default step)
    const auto& ss = sigma.samples;
    for (std::size_t i = 2; i + 2 < ss.size(); ++i) {
        double h1 = ss[i].t - ss[i - 1].t, h2 = ss[i + 1].t - ss[i].t;
        if (std::abs(h1 - h2) > 1e-12 * std::max(h1, h2)) continue;  // uniform interior only
        if (i + 2 < ss.size() && std::abs(ss[i + 2].t - ss[i + 1].t - h2) > 1e-12) continue;
        if (std::abs(ss[i - 1].t - ss[i - 2].t - h1) > 1e-12) continue;
        Vec dv, gamma_vv;
        for (int c = 0; c < n; ++c)
            dv[c] = (-ss[i + 2].v[c] + 8 * ss[i + 1].v[c] - 8 * ss[i - 1].v[c] + ss[i - 2].v[c]) /
                    (12 * h1);
        boundary_rhs(chart, ss[i].x, ss[i].v, gamma_vv);  // gives -Gamma(v,v)
        double r = 0;
        for (int c = 0; c < n; ++c) r += (dv[c] - gamma_vv[c]) * (dv[c] - gamma_vv[c]);
        chk.max_residual = std::max(chk.max_residual, std::sqrt(r));
    }
    return chk;
}

TomographySet TomographySet::full() {
    TomographySet e;
    e.level = [](const Vec&) { return 1.0; };
    return e;
}

AdmissibilityReport is_admissible(const MetricChart& chart, const BoundaryGeodesic& sigma,
                                  const TomographySet& E) {
    AdmissibilityReport rep;
    if (sigma.samples.empty()) return rep;
    rep.start_ok = E.contains(sigma.samples.front().x);
    rep.end_ok = E.contains(sigma.samples.back().x);  // closure(int E) up to the tol band
    double min_sff = 1e300;
    for (const auto& s : sigma.samples) {
        double ii = second_fundamental_form(chart, Point{0.0, s.x}, s.v, s.v);
        min_sff = std::min(min_sff, ii);
    }
    rep.min_sff = min_sff;
    rep.admissible = rep.start_ok && rep.end_ok && min_sff > 0;
    return rep;
}

double rho_closed_form(const MetricChart& chart, const BoundaryGeodesic& sigma, double t, int k) {
    BoundarySample s0 = sigma.samples.front();
    BoundarySample st = sigma.at(t);
    double ii0 = second_fundamental_form(chart, Point{0.0, s0.x}, s0.v, s0.v);
    double iit = second_fundamental_form(chart, Point{0.0, st.x}, st.v, st.v);
    if (!(ii0 > 0 && iit > 0))
        throw std::invalid_argument("rho weight needs II > 0 along sigma");
    return std::pow(iit / ii0, 2.0 * k / 3.0);
}

double rho_weight(const MetricChart& chart, const BoundaryGeodesic& sigma, double t, int k) {
    if (t < 0 || t > sigma.L + 1e-12)
        throw std::invalid_argument("rho weight time outside [0, L]");
    const auto& ss = sigma.samples;
    std::size_t m = ss.size();
    std::vector<double> ts(m), ys(m);
    for (std::size_t i = 0; i < m; ++i) {
        ts[i] = ss[i].t;
        double ii = second_fundamental_form(chart, Point{0.0, ss[i].x}, ss[i].v, ss[i].v);
        if (!(ii > 0)) throw std::invalid_argument("rho weight needs II > 0 along sigma");
        double a = a_cubic(chart, Point{0.0, ss[i].x}, ss[i].v);
        ys[i] = 2.0 * a / (3.0 * ii);
    }
    std::vector<double> cum = cum_panels(ts, ys, 0, m - 1);
    // partial panel up to t through the three nearest samples
    std::size_t lo = 0;
    while (lo + 1 < m && ts[lo + 1] <= t) ++lo;
    double integral = cum[lo];
    if (t > ts[lo] && lo + 1 < m) {
        if (m >= 3) {
            std::size_t p = std::min(lo > 0 ? lo - 1 : lo, m - 3);  // (p, p+1, p+2) covers [ts[lo], t]
            integral += quad3(ts[p], ts[p + 1], ts[p + 2], ys[p], ys[p + 1], ys[p + 2], ts[lo], t);
        } else {
            double u = (t - ts[lo]) / (ts[lo + 1] - ts[lo]);
            double yt = ys[lo] + u * (ys[lo + 1] - ys[lo]);
            integral += 0.5 * (t - ts[lo]) * (ys[lo] + yt);
        }
    }
    double quad_form = std::exp(k * integral);
    double closed = rho_closed_form(chart, sigma, t, k);
    if (std::abs(quad_form - closed) > 1e-8 * std::max(1.0, std::abs(closed)))
        throw std::runtime_error("rho quadrature form disagrees with closed form by " +
                                 std::to_string(std::abs(quad_form - closed)));
    return closed;
}

}  // namespace brt
