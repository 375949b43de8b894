#include "brtlab/reconstruction.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace brt {

double stage_tolerance(int k) {
    switch (k) {
        case 0: return 1e-3;
        case 1: return 1e-2;
        case 2: return 3e-2;
        default: return 1e-1;
    }
}

std::vector<double> halving_epsilons(double eps_max, int count) {
    if (!(eps_max > 0) || count < 1)
        throw std::invalid_argument("halving_epsilons: need eps_max > 0 and count >= 1");
    std::vector<double> eps(static_cast<std::size_t>(count));
    double e = eps_max;
    for (auto& v : eps) {
        v = e;
        e *= 0.5;
    }
    return eps;
}

double truncation_time(const BrokenRay& ray, double L) {
    double T = 0;
    for (const auto& ev : ray.events)
        if (ev.t <= L) T = ev.t;
    return T;
}

namespace {

double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

std::string describe_sigma(const MetricChart& chart, const BoundaryGeodesic& sigma) {
    std::ostringstream os;
    os << chart.name << " sigma(";
    const auto& s0 = sigma.samples.front();
    os << s0.x[0];
    if (chart.bdim() == 2) os << "," << s0.x[1];
    os << "; L=" << sigma.L << ")";
    return os.str();
}

double sup_rho_error(const MetricChart& chart, const BoundaryGeodesic& sigma,
                     const BrokenRay& ray, double E0) {
    double sup = 0;
    for (const auto& s : ray.samples) {
        if (s.t > sigma.L) break;
        double rho_hat = energy(chart, s) / E0;
        double rho = rho_closed_form(chart, sigma, s.t, 1);
        sup = std::max(sup, std::abs(rho_hat - rho));
    }
    return sup;
}

RecoveryReport recover(const MetricChart& chart, const WeightSpec& spec, const ScalarField& f,
                       const BoundaryGeodesic& sigma, const GlancingFamily& family, int k,
                       const TomographySet& E) {
    if (k < 0) throw std::invalid_argument("recover: k must be >= 0");
    if (static_cast<std::size_t>(k) >= f.normal_derivs.size())
        throw std::invalid_argument("recover: field carries normal derivatives up to order " +
                                    std::to_string(f.k_max) + ", need " + std::to_string(k));
    auto adm = is_admissible(chart, sigma, E);
    if (!adm.admissible || !E.interior_contains(sigma.samples.back().x)) {
        std::ostringstream os;
        os << "recover: sigma is not admissible (start in E: " << adm.start_ok
           << ", end in int E: " << E.interior_contains(sigma.samples.back().x)
           << ", min II: " << adm.min_sff << ")";
        throw std::runtime_error(os.str());
    }

    const auto& s0 = sigma.samples.front();
    double II0 = second_fundamental_form(chart, Point{0.0, s0.x}, s0.v, s0.v);

    RecoveryReport rep;
    rep.sigma_id = describe_sigma(chart, sigma);
    rep.k = k;
    rep.stage_tolerance = stage_tolerance(k);

    // (2k+1)!/(6^k k!): the k! of the Taylor remainder divided by the
    // per-bounce depth moment ratio 6^k (k!)^2/(2k+1)!  (== k! for k <= 1).
    double prefactor = factorial(2 * k + 1) / (std::pow(6.0, k) * factorial(k));

    for (const auto& member : family.members) {
        RecoveryRow row;
        row.eps = member.eps;
        if (member.failed) {
            row.failed = true;
            row.error = member.error;
            rep.rows.push_back(row);
            continue;
        }
        const BrokenRay& ray = member.ray;
        if (ray.status != TraceStatus::ok) {
            row.failed = true;
            row.error = to_string(ray.status);
            rep.rows.push_back(row);
            continue;
        }
        double T = truncation_time(ray, sigma.L);
        if (T <= 0) {
            row.failed = true;
            row.error = "no boundary return within L";
            rep.rows.push_back(row);
            continue;
        }
        row.T = T;
        row.energy0 = energy(chart, ray.samples.front());
        row.sup_x0 = member.sup_x0;
        row.sup_rho_err = sup_rho_error(chart, sigma, ray, row.energy0);
        row.raw_brt = broken_ray_transform(chart, spec, f, ray, T);
        row.corrected = k == 0 ? row.raw_brt
                               : weighted_ray_integral(chart, spec, ray, T,
                                                       [&f, k](const PhaseState& st) {
                                                           return taylor_subtract(f, st.x.x0,
                                                                                  st.x.xb, k);
                                                       });
        double scale = prefactor * std::pow(3.0 * std::pow(II0, 2.0 / 3.0) / (2.0 * row.energy0),
                                            k);
        row.estimate = scale * row.corrected;
        rep.rows.push_back(row);
    }

    std::vector<std::pair<double, double>> eps_est;
    for (const auto& row : rep.rows)
        if (!row.failed) eps_est.emplace_back(row.eps, row.estimate);
    if (eps_est.empty()) throw std::runtime_error("recover: every family member failed");

    rep.extrapolation = extrapolate_limit(eps_est);
    rep.target = boundary_ray_transform(chart, spec, sigma, f.normal_derivs[static_cast<std::size_t>(k)], k);
    rep.abs_err = std::abs(rep.extrapolation.limit - rep.target);
    rep.rel_err = std::abs(rep.target) > 1e-12 ? rep.abs_err / std::abs(rep.target) : rep.abs_err;
    rep.within_tolerance = rep.rel_err <= rep.stage_tolerance;

    std::vector<std::pair<double, double>> eps_err;
    for (const auto& [eps, est] : eps_est) {
        double err = std::abs(est - rep.target);
        if (err > 0) eps_err.emplace_back(eps, err);
    }
    if (eps_err.size() >= 3) {
        try {
            rep.error_fit = fit_order(eps_err);
            rep.error_fit_ok = true;
        } catch (const std::exception&) {
            rep.error_fit_ok = false;
        }
    }
    return rep;
}

}  // namespace

RecoveryReport recover_k0(const MetricChart& chart, const WeightSpec& spec, const ScalarField& f,
                          const BoundaryGeodesic& sigma, const GlancingFamily& family,
                          const TomographySet& E) {
    return recover(chart, spec, f, sigma, family, 0, E);
}

RecoveryReport recover_k(const MetricChart& chart, const WeightSpec& spec, const ScalarField& f,
                         const BoundaryGeodesic& sigma, const GlancingFamily& family, int k,
                         const TomographySet& E) {
    if (k < 1) throw std::invalid_argument("recover_k: k must be >= 1 (use recover_k0)");
    return recover(chart, spec, f, sigma, family, k, E);
}

std::vector<RecoveryReport> iterate_corollary(const MetricChart& chart, const WeightSpec& spec,
                                              const ScalarField& f,
                                              const std::vector<BoundaryGeodesic>& sigmas,
                                              int k_max, const std::vector<double>& epsilons,
                                              const TomographySet& E,
                                              const IntegratorSettings& settings) {
    if (k_max < 0 || k_max > f.k_max)
        throw std::invalid_argument("iterate_corollary: k_max outside the field's derivative range");
    std::vector<RecoveryReport> reports;
    for (const auto& sigma : sigmas) {
        auto adm = is_admissible(chart, sigma, E);
        if (!adm.admissible)
            throw std::runtime_error("iterate_corollary: inadmissible geodesic (min II = " +
                                     std::to_string(adm.min_sff) + ")");
        GlancingFamily family = launch_glancing(chart, sigma, epsilons, settings);
        for (int k = 0; k <= k_max; ++k)
            reports.push_back(recover(chart, spec, f, sigma, family, k, E));
    }
    return reports;
}

double pointwise_boundary_value(const MetricChart& chart, const WeightSpec& spec,
                                const ScalarField& f, const Vec& x, const Vec& v,
                                const std::vector<double>& T_list, int i) {
    if (T_list.size() < 2)
        throw std::invalid_argument("pointwise_boundary_value: need at least two averaging times");
    if (i < 0 || static_cast<std::size_t>(i) >= f.normal_derivs.size())
        throw std::invalid_argument("pointwise_boundary_value: derivative order not available");
    Point p{0.0, x};
    Velocity tv{0.0, v};
    double w0 = spec.w(p, tv);
    if (std::abs(w0) < 1e-14)
        throw std::domain_error("pointwise_boundary_value: weight vanishes at the base point");
    double II = second_fundamental_form(chart, p, v, v);
    if (!(II > 0))
        throw std::domain_error("pointwise_boundary_value: boundary not strictly convex at the base point");

    std::vector<std::pair<double, double>> averages;
    for (double T : T_list) {
        if (!(T > 0)) throw std::invalid_argument("pointwise_boundary_value: T must be > 0");
        BoundaryGeodesic sigma = integrate_boundary_geodesic(chart, x, v, T);
        double integral = boundary_ray_transform(chart, spec, sigma,
                                                 f.normal_derivs[static_cast<std::size_t>(i)], i);
        averages.emplace_back(T, integral / T);
    }
    double limit = neville_extrapolate(averages);
    return limit / (w0 * std::pow(II, -static_cast<double>(i) / 3.0));
}

DiagnosticsTable convergence_diagnostics(const MetricChart& chart, const GlancingFamily& family,
                                         const BoundaryGeodesic& sigma) {
    DiagnosticsTable table;
    for (const auto& member : family.members) {
        DiagnosticRow row;
        row.eps = member.eps;
        if (member.failed || member.ray.samples.empty()) {
            row.failed = true;
            table.rows.push_back(row);
            continue;
        }
        row.sup_x0 = member.sup_x0;
        row.sup_dist = member.sup_dist;
        double E0 = energy(chart, member.ray.samples.front());
        double sup_v0 = 0;
        for (const auto& s : member.ray.samples) sup_v0 = std::max(sup_v0, std::abs(s.v.v0));
        row.sup_v0 = sup_v0;
        row.sup_rho_err = sup_rho_error(chart, sigma, member.ray, E0);
        table.rows.push_back(row);
    }

    auto fit_column = [&table](double DiagnosticRow::*col) {
        std::vector<std::pair<double, double>> pairs;
        for (const auto& row : table.rows)
            if (!row.failed && row.*col > 0) pairs.emplace_back(row.eps, row.*col);
        if (pairs.size() < 3) throw std::runtime_error("column not fittable");
        return fit_order(pairs);
    };
    try {
        table.order_x0 = fit_column(&DiagnosticRow::sup_x0);
        table.order_v0 = fit_column(&DiagnosticRow::sup_v0);
        table.order_dist = fit_column(&DiagnosticRow::sup_dist);
        table.order_rho = fit_column(&DiagnosticRow::sup_rho_err);
        table.fits_ok = true;
    } catch (const std::exception&) {
        table.fits_ok = false;
    }
    return table;
}

}  // namespace brt
