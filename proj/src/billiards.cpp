#include "brtlab/billiards.hpp"

#include <cmath>
#include <stdexcept>

#include "brtlab/parallel.hpp"
#include "brtlab/quad.hpp"

namespace brt {

const char* to_string(TraceStatus s) {
    switch (s) {
        case TraceStatus::ok: return "ok";
        case TraceStatus::escape: return "escape";
        case TraceStatus::speed_drift: return "speed_drift";
        case TraceStatus::step_underflow: return "step_underflow";
    }
    return "?";
}

double energy(const MetricChart& chart, const PhaseState& s) {
    double ii = second_fundamental_form(chart, s.x, s.v.vb, s.v.vb);
    return 0.5 * s.v.v0 * s.v.v0 + s.x.x0 * ii;
}

namespace {

// Phase vector layout: (x0, xb..., v0, vb...); n tangential components.
struct Ode {
    const MetricChart& chart;
    int n;

    void rhs(const double y[6], double dy[6]) const {
        Point x{y[0], {y[1], n == 2 ? y[2] : 0.0}};
        const double v0 = y[1 + n];
        const double* vb = y + 2 + n;
        Christoffel c = detail::christoffel_raw(chart, x);
        dy[0] = v0;
        for (int i = 0; i < n; ++i) dy[1 + i] = vb[i];
        double a0 = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a0 += c.g0ij[i][j] * vb[i] * vb[j];
        dy[1 + n] = -a0;  // gamma0'' = -II(vb, vb)
        for (int i = 0; i < n; ++i) {
            double acc = 0;
            for (int j = 0; j < n; ++j) {
                acc += 2 * c.gi0j[i][j] * v0 * vb[j];
                for (int k = 0; k < n; ++k) acc += c.gijk[i][j][k] * vb[j] * vb[k];
            }
            dy[2 + n + i] = -acc;
        }
    }

    void rk4(const double y[6], double h, double out[6]) const {
        double k1[6], k2[6], k3[6], k4[6], tmp[6];
        const int m = 2 + 2 * n;
        rhs(y, k1);
        for (int i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (int i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (int i = 0; i < m; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, k4);
        for (int i = 0; i < m; ++i)
            out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }

    double speed(const double y[6]) const {
        TMat g = chart.g(y[0], {y[1], n == 2 ? y[2] : 0.0});
        double s = y[1 + n] * y[1 + n];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += g(i, j) * y[2 + n + i] * y[2 + n + j];
        return std::sqrt(s);
    }
};

PhaseState unpack(const double y[6], double t, int n) {
    PhaseState s;
    s.t = t;
    s.x.x0 = y[0];
    s.x.xb = {y[1], n == 2 ? y[2] : 0.0};
    s.v.v0 = y[1 + n];
    s.v.vb = {y[2 + n], n == 2 ? y[3 + n] : 0.0};
    return s;
}

}  // namespace

BrokenRay trace(const MetricChart& chart, const PhaseState& start, double duration,
                const IntegratorSettings& st) {
    const int n = chart.bdim();
    chart.require_in_domain(start.x.x0);
    Ode ode{chart, n};

    double y[6] = {0, 0, 0, 0, 0, 0};
    y[0] = start.x.x0;
    y[1] = start.x.xb[0];
    if (n == 2) y[2] = start.x.xb[1];
    y[1 + n] = start.v.v0;
    y[2 + n] = start.v.vb[0];
    if (n == 2) y[3 + n] = start.v.vb[1];

    {
        double sp = ode.speed(y);
        if (std::abs(sp - 1.0) > 1e-9)
            throw std::invalid_argument("trace launch is not unit speed (|v|_g = " +
                                        std::to_string(sp) + ")");
    }

    BrokenRay ray;
    ray.duration = duration;
    ray.samples.push_back(unpack(y, 0.0, n));
    ray.segment_starts.push_back(0);

    double t = 0;
    const double t_eps = 1e-15 * std::max(1.0, duration);

    auto segment_step = [&]() {
        PhaseState s = unpack(y, t, n);
        double e = energy(chart, s);
        double ii = second_fundamental_form(chart, s.x, s.v.vb, s.v.vb);
        double h = st.max_step;
        if (ii > 1e-14 && e > 0) h = std::min(h, 2.0 * std::sqrt(2.0 * e) / ii / st.step_divisor);
        return h;
    };

    double h_seg = segment_step();
    while (t < duration - t_eps) {
        if (h_seg < 1e-15) {
            ray.status = TraceStatus::step_underflow;
            return ray;
        }
        double h = std::min(h_seg, duration - t);
        double ynext[6];
        ode.rk4(y, h, ynext);

        if (ynext[0] < 0.0) {
            // reflection inside (t, t + h): bisect the step length
            double a = 0.0, b = h;
            while (b - a > st.event_tol) {
                double mid = 0.5 * (a + b);
                double ymid[6];
                ode.rk4(y, mid, ymid);
                if (ymid[0] < 0.0) b = mid;
                else a = mid;
            }
            double yev[6];
            ode.rk4(y, b, yev);
            double residual = std::abs(yev[0]);
            yev[0] = 0.0;
            t += b;

            ReflectionEvent ev;
            ev.t = t;
            ev.xb = {yev[1], n == 2 ? yev[2] : 0.0};
            ev.v_in = Velocity{yev[1 + n], {yev[2 + n], n == 2 ? yev[3 + n] : 0.0}};
            yev[1 + n] = -yev[1 + n];  // reflection law: flip the normal speed
            ev.v_out = Velocity{yev[1 + n], {yev[2 + n], n == 2 ? yev[3 + n] : 0.0}};
            ev.clamp_residual = residual;
            ray.max_clamp_residual = std::max(ray.max_clamp_residual, residual);
            ray.events.push_back(ev);

            for (int i = 0; i < 2 + 2 * n; ++i) y[i] = yev[i];
            ray.samples.push_back(unpack(y, t, n));
            ray.segment_starts.push_back(ray.samples.size() - 1);
            h_seg = segment_step();
            continue;
        }

        t += h;
        for (int i = 0; i < 2 + 2 * n; ++i) y[i] = ynext[i];
        ray.samples.push_back(unpack(y, t, n));

        if (y[0] >= chart.h * st.escape_frac) {
            ray.status = TraceStatus::escape;
            return ray;
        }
        double drift = std::abs(ode.speed(y) - 1.0);
        ray.max_speed_err = std::max(ray.max_speed_err, drift);
        if (drift > st.speed_tol) {
            ray.status = TraceStatus::speed_drift;
            return ray;
        }
    }
    ray.samples.back().t = duration;
    return ray;
}

std::vector<BounceInterval> bounce_intervals(const MetricChart& chart, const BrokenRay& ray) {
    // zeros of gamma0: the launch if it starts on the boundary, then events
    struct Zero {
        double t;
        Vec xb;
        Velocity v;
    };
    std::vector<Zero> zeros;
    const PhaseState& s0 = ray.samples.front();
    if (s0.x.x0 == 0.0 && s0.v.v0 > 0) zeros.push_back({s0.t, s0.x.xb, s0.v});
    for (const auto& ev : ray.events) zeros.push_back({ev.t, ev.xb, ev.v_out});
    if (zeros.size() < 2)
        throw std::invalid_argument("bounce_intervals needs at least two zeros of gamma0");

    std::vector<BounceInterval> out;
    out.reserve(zeros.size() - 1);
    for (std::size_t i = 0; i + 1 < zeros.size(); ++i) {
        const Zero& z = zeros[i];
        double tau = zeros[i + 1].t - z.t;
        double e = 0.5 * z.v.v0 * z.v.v0;  // x0 = 0 at a zero
        double ii = second_fundamental_form(chart, Point{0.0, z.xb}, z.v.vb, z.v.vb);
        double pred = ii > 0 ? 2.0 * std::sqrt(2.0 * e) / ii : 0.0;
        double dev = pred > 0 ? std::abs(tau / pred - 1.0) : 0.0;
        out.push_back({z.t, tau, pred, dev});
    }
    return out;
}

GlancingFamily launch_glancing(const MetricChart& chart, const BoundaryGeodesic& sigma,
                               const std::vector<double>& epsilons,
                               const IntegratorSettings& settings) {
    const int n = chart.bdim();
    const BoundarySample& s0 = sigma.samples.front();
    GlancingFamily fam;
    fam.members.resize(epsilons.size());
    parallel_for(epsilons.size(), [&](std::size_t idx) {
        FamilyMember& m = fam.members[idx];
        m.eps = epsilons[idx];
        try {
            if (!(m.eps > 0 && m.eps < 1))
                throw std::invalid_argument("launch normal speed must be in (0, 1)");
            PhaseState start;
            start.x = Point{0.0, s0.x};
            double tangential = std::sqrt(1.0 - m.eps * m.eps);
            Velocity v;
            v.v0 = m.eps;
            for (int i = 0; i < n; ++i) v.vb[i] = tangential * s0.v[i];
            start.v = v;
            m.ray = trace(chart, start, sigma.L, settings);
            if (m.ray.status != TraceStatus::ok) {
                m.failed = true;
                m.error = to_string(m.ray.status);
            }
            for (const auto& s : m.ray.samples) {
                m.sup_x0 = std::max(m.sup_x0, s.x.x0);
                m.sup_energy = std::max(m.sup_energy, std::abs(energy(chart, s)));
                BoundarySample ref = sigma.at(s.t);
                double d2 = 0;
                for (int i = 0; i < n; ++i)
                    d2 += (s.x.xb[i] - ref.x[i]) * (s.x.xb[i] - ref.x[i]);
                m.sup_dist = std::max(m.sup_dist, std::sqrt(d2));
            }
        } catch (const std::exception& e) {
            m.failed = true;
            m.error = e.what();
        }
    });
    return fam;
}

DepthCheck depth_integral_check(const MetricChart& chart, const BrokenRay& ray,
                                const std::function<double(double)>& F, int k) {
    DepthCheck out;
    if (!ray.events.empty()) {
        out.T = ray.events.back().t;
    } else {
        // a ray that never leaves the boundary is a zero of gamma0 throughout
        double sup = 0;
        for (const auto& s : ray.samples) sup = std::max(sup, std::abs(s.x.x0));
        if (sup > 1e-12)
            throw std::invalid_argument(
                "depth_integral_check needs a ray ending at a zero of gamma0");
        out.T = ray.duration;
    }

    const auto& ss = ray.samples;
    bool launch_zero = ss.front().x.x0 == 0.0 && ss.front().v.v0 > 0;

    for (std::size_t seg = 0; seg < ray.segment_count(); ++seg) {
        std::size_t i0 = ray.segment_starts[seg];
        std::size_t i1 = ray.segment_end(seg);
        if (i1 <= i0) continue;
        if (ss[i1].t > out.T + 1e-15) break;  // trailing partial segment beyond the last zero

        std::vector<double> ts(i1 - i0 + 1), y_lhs(i1 - i0 + 1), y_rhs(i1 - i0 + 1);
        for (std::size_t i = i0; i <= i1; ++i) {
            const PhaseState& s = ss[i];
            ts[i - i0] = s.t;
            double f = F(s.t);
            y_lhs[i - i0] = std::pow(s.x.x0, k) * f;
            double e = energy(chart, s);
            double ii = second_fundamental_form(chart, s.x, s.v.vb, s.v.vb);
            y_rhs[i - i0] = std::pow(2.0 * e / (3.0 * ii), k) * f;
        }
        out.lhs += quad_panels(ts, y_lhs, 0, ts.size() - 1);
        out.rhs += quad_panels(ts, y_rhs, 0, ts.size() - 1);

        // per-bounce row when the segment is bracketed by zeros of gamma0
        bool opens_at_zero = (seg > 0) || launch_zero;
        if (!opens_at_zero) continue;
        std::vector<double> y_depth(i1 - i0 + 1);
        for (std::size_t i = i0; i <= i1; ++i) y_depth[i - i0] = ss[i].x.x0;
        const PhaseState& z = ss[i0];
        double v = z.v.v0;
        double a = second_fundamental_form(chart, Point{0.0, z.x.xb}, z.v.vb, z.v.vb);
        if (!(a > 0)) continue;
        double tau = ss[i1].t - ss[i0].t;
        DepthCheck::Bounce b;
        b.t0 = z.t;
        b.tau = tau;
        b.integral = quad_panels(ts, y_depth, 0, ts.size() - 1);
        b.predicted = v * v * tau / (3.0 * a);
        b.ratio = std::abs(b.integral - b.predicted) / (tau * tau * tau * tau);
        out.bounces.push_back(b);
    }
    return out;
}

}  // namespace brt
