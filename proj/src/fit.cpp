#include "brtlab/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace brt {

OrderFit fit_order(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3)
        throw std::invalid_argument("fit_order needs at least 3 (eps, error) pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pairs.size());
    for (const auto& [eps, err] : pairs) {
        if (!(eps > 0) || !(err > 0))
            throw std::invalid_argument("fit_order needs positive eps and error");
        double x = std::log(eps), y = std::log(err);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12 * n * sxx)
        throw std::invalid_argument("fit_order: eps values are degenerate");
    OrderFit fit;
    fit.order = (n * sxy - sx * sy) / denom;
    double intercept = (sy - fit.order * sx) / n;
    double ss = 0;
    for (const auto& [eps, err] : pairs) {
        double r = std::log(err) - (intercept + fit.order * std::log(eps));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

Extrapolation extrapolate_limit(const std::vector<std::pair<double, double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("extrapolate_limit: no rows");
    Extrapolation ex;
    if (rows.size() == 1) {
        ex.limit = rows[0].second;
        return ex;
    }
    double scale = 0;
    for (const auto& [e, v] : rows) scale = std::max(scale, std::abs(v));
    std::vector<std::pair<double, double>> gaps;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        double g = std::abs(rows[i + 1].second - rows[i].second);
        if (g > 1e-14 * std::max(1.0, scale)) gaps.push_back({rows[i + 1].first, g});
    }
    const auto& [eN, vN] = rows.back();
    (void)eN;
    double last_gap = std::abs(rows.back().second - rows[rows.size() - 2].second);
    ex.band = last_gap;
    if (gaps.size() < 3) {
        // effectively converged (or too short to fit): take the last value
        ex.limit = vN;
        return ex;
    }
    OrderFit fit = fit_order(gaps);
    ex.order = fit.order;
    ex.residual = fit.residual;
    if (std::abs(fit.order - 1.0) <= 0.3) {
        // halving grid, first-order model: v(eps) = L + C eps
        ex.limit = 2.0 * rows.back().second - rows[rows.size() - 2].second;
        ex.richardson = true;
    } else {
        ex.limit = vN;
    }
    return ex;
}

double neville_extrapolate(const std::vector<std::pair<double, double>>& pts) {
    if (pts.empty()) throw std::invalid_argument("neville_extrapolate: no points");
    std::vector<double> h(pts.size()), p(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        h[i] = pts[i].first;
        p[i] = pts[i].second;
    }
    for (std::size_t m = 1; m < pts.size(); ++m)
        for (std::size_t i = 0; i + m < pts.size(); ++i)
            p[i] = (0.0 - h[i + m]) * p[i] / (h[i] - h[i + m]) +
                   (h[i] - 0.0) * p[i + 1] / (h[i] - h[i + m]);
    return p[0];
}

}  // namespace brt
