#include "brtlab/quad.hpp"

namespace brt {

double quad3(double t0, double t1, double t2, double y0, double y1, double y2,
             double a, double b) {
    double u1 = t1 - t0, u2 = t2 - t0;
    double ua = a - t0, ub = b - t0;
    auto node = [&](double s, double p, double q) {
        // integral over [ua, ub] of the Lagrange basis peaking at node s
        double den = (s - p) * (s - q);
        auto F = [&](double u) { return u * u * u / 3.0 - (p + q) * u * u / 2.0 + p * q * u; };
        return (F(ub) - F(ua)) / den;
    };
    return y0 * node(0.0, u1, u2) + y1 * node(u1, 0.0, u2) + y2 * node(u2, 0.0, u1);
}

namespace {

double trapz(const std::vector<double>& t, const std::vector<double>& y, std::size_t i) {
    return 0.5 * (t[i + 1] - t[i]) * (y[i] + y[i + 1]);
}

// Integral over the single interval [t_i, t_i+1] choosing the best available
// quadratic stencil; degrades to trapezoid only in degenerate corners.
double one_interval(const std::vector<double>& t, const std::vector<double>& y,
                    std::size_t i, std::size_t i0, std::size_t i1, double tiny) {
    double d = t[i + 1] - t[i];
    if (d <= tiny) return trapz(t, y, i);
    if (i > i0 && t[i] - t[i - 1] > tiny)
        return quad3(t[i - 1], t[i], t[i + 1], y[i - 1], y[i], y[i + 1], t[i], t[i + 1]);
    if (i + 2 <= i1 && t[i + 2] - t[i + 1] > tiny)
        return quad3(t[i], t[i + 1], t[i + 2], y[i], y[i + 1], y[i + 2], t[i], t[i + 1]);
    return trapz(t, y, i);
}

}  // namespace

double quad_panels(const std::vector<double>& t, const std::vector<double>& y,
                   std::size_t i0, std::size_t i1, double degenerate_frac) {
    if (i1 <= i0) return 0.0;
    if (i1 - i0 == 1) return trapz(t, y, i0);
    double tiny = degenerate_frac * (t[i1] - t[i0]);
    double total = 0.0;
    std::size_t i = i0;
    while (i < i1) {
        if (i + 2 <= i1 && t[i + 1] - t[i] > tiny && t[i + 2] - t[i + 1] > tiny) {
            total += quad3(t[i], t[i + 1], t[i + 2], y[i], y[i + 1], y[i + 2], t[i], t[i + 2]);
            i += 2;
        } else {
            total += one_interval(t, y, i, i0, i1, tiny);
            i += 1;
        }
    }
    return total;
}

std::vector<double> cum_panels(const std::vector<double>& t, const std::vector<double>& y,
                               std::size_t i0, std::size_t i1) {
    std::vector<double> out(i1 - i0 + 1, 0.0);
    if (i1 <= i0) return out;
    double tiny = 1e-9 * (t[i1] - t[i0]);
    std::size_t i = i0;
    while (i < i1) {
        if (i + 2 <= i1 && t[i + 1] - t[i] > tiny && t[i + 2] - t[i + 1] > tiny) {
            out[i + 1 - i0] = out[i - i0] + quad3(t[i], t[i + 1], t[i + 2],
                                                  y[i], y[i + 1], y[i + 2], t[i], t[i + 1]);
            out[i + 2 - i0] = out[i - i0] + quad3(t[i], t[i + 1], t[i + 2],
                                                  y[i], y[i + 1], y[i + 2], t[i], t[i + 2]);
            i += 2;
        } else {
            out[i + 1 - i0] = out[i - i0] + one_interval(t, y, i, i0, i1, tiny);
            i += 1;
        }
    }
    return out;
}

}  // namespace brt
