#include "brtlab/laplace1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace brt {

namespace {

// int_a^b e^(-lambda s) ds, stable through lambda = 0.
double exp_bin(double lambda, double a, double b) {
    if (std::abs(lambda) < 1e-12) return (b - a) * (1.0 - 0.5 * lambda * (a + b));
    return (std::exp(-lambda * a) - std::exp(-lambda * b)) / lambda;
}

void validate_lambdas(const std::vector<double>& lambdas) {
    if (lambdas.size() < 2) throw std::invalid_argument("moment system: need at least two lambdas");
    for (std::size_t j = 1; j < lambdas.size(); ++j)
        if (!(lambdas[j] > lambdas[j - 1]))
            throw std::invalid_argument("moment system: lambdas must be strictly increasing");
}

}  // namespace

std::vector<double> default_lambda_grid(double L, int count) {
    if (!(L > 0) || count < 2) throw std::invalid_argument("default_lambda_grid: bad arguments");
    std::vector<double> lambdas(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j)
        lambdas[static_cast<std::size_t>(j - 1)] = -20.0 / L + j * (4.0 / L);
    return lambdas;
}

MomentSystem exponential_moments(const MetricChart& chart, const WeightSpec& base,
                                 const ScalarField& f, const BoundaryGeodesic& sigma,
                                 const std::vector<double>& lambdas, const GlancingFamily& family,
                                 int bins) {
    validate_lambdas(lambdas);
    if (chart.bdim() != 1)
        throw std::invalid_argument("exponential_moments: the reflector arc parametrization needs a 1-D boundary");
    MomentSystem ms;
    ms.L = sigma.L;
    ms.lambdas = lambdas;
    ms.bins = bins;
    ms.moments.reserve(lambdas.size());
    for (double lambda : lambdas) {
        WeightSpec spec = base.with_extra_attenuation(lambda);
        RecoveryReport rep = recover_k0(chart, spec, f, sigma, family);
        ms.moments.push_back(rep.extrapolation.limit);
    }
    return ms;
}

MomentSystem forward_moments(double L, const std::vector<double>& c,
                             const std::vector<double>& lambdas) {
    validate_lambdas(lambdas);
    if (!(L > 0) || c.empty()) throw std::invalid_argument("forward_moments: bad arguments");
    MomentSystem ms;
    ms.L = L;
    ms.lambdas = lambdas;
    ms.bins = static_cast<int>(c.size());
    double width = L / static_cast<double>(c.size());
    for (double lambda : lambdas) {
        double m = 0;
        for (std::size_t i = 0; i < c.size(); ++i)
            m += c[i] * exp_bin(lambda, i * width, (i + 1) * width);
        ms.moments.push_back(m);
    }
    return ms;
}

BinnedValues laplace_recover(const MomentSystem& ms, double alpha, double residual_tol) {
    validate_lambdas(ms.lambdas);
    if (ms.moments.size() != ms.lambdas.size())
        throw std::invalid_argument("laplace_recover: one moment per lambda required");
    int nl = static_cast<int>(ms.lambdas.size());
    int n = ms.bins;
    if (n < 1 || n > nl / 2)
        throw std::invalid_argument("laplace_recover: bins must satisfy 1 <= n <= lambdas/2");
    if (!(ms.L > 0)) throw std::invalid_argument("laplace_recover: L must be positive");
    for (double m : ms.moments)
        if (!std::isfinite(m)) throw std::invalid_argument("laplace_recover: non-finite moment");

    double width = ms.L / n;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nl + n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nl + n);
    for (int j = 0; j < nl; ++j) {
        for (int i = 0; i < n; ++i)
            M(j, i) = exp_bin(ms.lambdas[static_cast<std::size_t>(j)], i * width, (i + 1) * width);
        rhs(j) = ms.moments[static_cast<std::size_t>(j)];
    }
    double sq = std::sqrt(alpha);
    for (int i = 0; i < n; ++i) M(nl + i, i) = sq;

    Eigen::VectorXd c = M.colPivHouseholderQr().solve(rhs);
    Eigen::VectorXd fit_residual = M.topRows(nl) * c - rhs.head(nl);

    BinnedValues out;
    out.values.assign(c.data(), c.data() + n);
    out.edges.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) out.edges[static_cast<std::size_t>(i)] = i * width;
    out.residual = fit_residual.norm();
    double scale = std::max(1.0, rhs.head(nl).norm());
    if (out.residual > residual_tol * scale)
        throw std::runtime_error("laplace_recover: moments inconsistent with a " +
                                 std::to_string(n) + "-bin profile (residual " +
                                 std::to_string(out.residual) + ")");
    return out;
}

// ---------------------------------------------------------------------------
// Planar fields and the complex transform

PlanarField PlanarField::two_squares() {
    PlanarField f;
    f.value = [](Cplx z) -> Cplx {
        double x = z.real(), y = z.imag();
        if (x >= 0 && x <= 1 && y >= 0 && y <= 1) return 1.0;
        if (x >= -1 && x <= 0 && y >= -1 && y <= 0) return -1.0;
        return 0.0;
    };
    f.xlo = -1;
    f.xhi = 1;
    f.ylo = -1;
    f.yhi = 1;
    f.breaks_x = {0};
    f.breaks_y = {0};
    return f;
}

PlanarField PlanarField::disk_indicator(double R, Cplx center) {
    return from_profile([R](double r) { return r <= R ? 1.0 : 0.0; }, R, {}, center);
}

PlanarField PlanarField::annulus_witness(Cplx center) {
    // integral: pi - 4 * pi/4 = 0
    return from_profile([](double r) { return (r <= 1 ? 1.0 : 0.0) - 4.0 * (r <= 0.5 ? 1.0 : 0.0); },
                        1.0, {0.5}, center);
}

PlanarField PlanarField::square_indicator(double a) {
    if (!(a > 0)) throw std::invalid_argument("square_indicator: side must be positive");
    PlanarField f;
    f.value = [a](Cplx z) -> Cplx {
        return (z.real() >= 0 && z.real() <= a && z.imag() >= 0 && z.imag() <= a) ? 1.0 : 0.0;
    };
    f.xlo = 0;
    f.xhi = a;
    f.ylo = 0;
    f.yhi = a;
    return f;
}

PlanarField PlanarField::from_profile(std::function<double(double)> profile, double rmax,
                                      std::vector<double> breaks, Cplx center) {
    if (!(rmax > 0)) throw std::invalid_argument("from_profile: rmax must be positive");
    PlanarField f;
    f.radial = true;
    f.center = center;
    f.rmax = rmax;
    f.breaks_r = std::move(breaks);
    std::sort(f.breaks_r.begin(), f.breaks_r.end());
    f.profile = std::move(profile);
    auto prof = f.profile;
    f.value = [prof, center, rmax](Cplx z) -> Cplx {
        double r = std::abs(z - center);
        return r <= rmax ? prof(r) : 0.0;
    };
    f.xlo = center.real() - rmax;
    f.xhi = center.real() + rmax;
    f.ylo = center.imag() - rmax;
    f.yhi = center.imag() + rmax;
    return f;
}

PlanarField scaled(const PlanarField& f, double mu) {
    if (!(mu > 0)) throw std::invalid_argument("scaled: mu must be positive");
    PlanarField out;
    auto val = f.value;
    out.value = [val, mu](Cplx z) { return val(mu * z); };
    out.xlo = f.xlo / mu;
    out.xhi = f.xhi / mu;
    out.ylo = f.ylo / mu;
    out.yhi = f.yhi / mu;
    for (double b : f.breaks_x) out.breaks_x.push_back(b / mu);
    for (double b : f.breaks_y) out.breaks_y.push_back(b / mu);
    if (f.radial) {
        out.radial = true;
        out.center = f.center / mu;
        out.rmax = f.rmax / mu;
        for (double b : f.breaks_r) out.breaks_r.push_back(b / mu);
        auto prof = f.profile;
        out.profile = [prof, mu](double r) { return prof(mu * r); };
    }
    return out;
}

PlanarField translated(const PlanarField& f, Cplx w) {
    PlanarField out;
    auto val = f.value;
    out.value = [val, w](Cplx z) { return val(z - w); };
    out.xlo = f.xlo + w.real();
    out.xhi = f.xhi + w.real();
    out.ylo = f.ylo + w.imag();
    out.yhi = f.yhi + w.imag();
    for (double b : f.breaks_x) out.breaks_x.push_back(b + w.real());
    for (double b : f.breaks_y) out.breaks_y.push_back(b + w.imag());
    if (f.radial) {
        out.radial = true;
        out.center = f.center + w;
        out.rmax = f.rmax;
        out.breaks_r = f.breaks_r;
        out.profile = f.profile;
    }
    return out;
}

namespace {

// Simpson nodes/weights on [a, b]; endpoint nodes are pulled a hair inside so
// indicator-type integrands are sampled on the correct side of a jump line
// that coincides with a panel edge.
struct Rule1D {
    std::vector<double> nodes, weights;
};

Rule1D simpson_rule(double a, double b, int intervals) {
    intervals = std::max(2, intervals + (intervals % 2));
    Rule1D r;
    int n = intervals;
    double h = (b - a) / n;
    r.nodes.resize(static_cast<std::size_t>(n) + 1);
    r.weights.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        r.nodes[static_cast<std::size_t>(i)] = a + i * h;
        double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        r.weights[static_cast<std::size_t>(i)] = w * h / 3.0;
    }
    double nudge = 1e-11 * (b - a);
    r.nodes.front() += nudge;
    r.nodes.back() -= nudge;
    return r;
}

// Panel edges: support box padded 1% with the original edges kept as interior
// jump lines, plus the field's own break lines.
std::vector<double> cell_edges(double lo, double hi, const std::vector<double>& breaks) {
    double pad = 0.01 * (hi - lo);
    std::vector<double> edges{lo - pad, lo};
    for (double b : breaks)
        if (b > lo && b < hi) edges.push_back(b);
    edges.push_back(hi);
    edges.push_back(hi + pad);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [&](double a, double b2) { return std::abs(a - b2) < 1e-14 * (hi - lo); }),
                edges.end());
    return edges;
}

int cell_intervals(double extent, double total, int resolution) {
    int n = static_cast<int>(std::lround(resolution * extent / total));
    return std::clamp(n, 8, resolution);
}

Cplx transform_cartesian(const PlanarField& f, Cplx lambda, int resolution) {
    auto ex = cell_edges(f.xlo, f.xhi, f.breaks_x);
    auto ey = cell_edges(f.ylo, f.yhi, f.breaks_y);
    double wx = ex.back() - ex.front(), wy = ey.back() - ey.front();
    Cplx total = 0;
    for (std::size_t cx = 0; cx + 1 < ex.size(); ++cx) {
        Rule1D rx = simpson_rule(ex[cx], ex[cx + 1], cell_intervals(ex[cx + 1] - ex[cx], wx, resolution));
        std::vector<Cplx> expx(rx.nodes.size());
        for (std::size_t i = 0; i < rx.nodes.size(); ++i)
            expx[i] = std::exp(lambda * rx.nodes[i]);
        for (std::size_t cy = 0; cy + 1 < ey.size(); ++cy) {
            Rule1D ry = simpson_rule(ey[cy], ey[cy + 1],
                                     cell_intervals(ey[cy + 1] - ey[cy], wy, resolution));
            std::vector<Cplx> expy(ry.nodes.size());
            for (std::size_t j = 0; j < ry.nodes.size(); ++j)
                expy[j] = std::exp(lambda * Cplx(0, ry.nodes[j]));
            Cplx cell = 0;
            for (std::size_t i = 0; i < rx.nodes.size(); ++i) {
                Cplx row = 0;
                for (std::size_t j = 0; j < ry.nodes.size(); ++j) {
                    Cplx v = f.value(Cplx(rx.nodes[i], ry.nodes[j]));
                    if (v != 0.0) row += ry.weights[j] * expy[j] * v;
                }
                cell += rx.weights[i] * expx[i] * row;
            }
            total += cell;
        }
    }
    return total;
}

Cplx transform_radial(const PlanarField& f, Cplx lambda, int resolution) {
    // Trapezoid in the angle (machine-exact for the periodic analytic factor),
    // Simpson between profile breaks in the radius.
    std::vector<double> edges{0.0};
    for (double b : f.breaks_r)
        if (b > 0 && b < f.rmax) edges.push_back(b);
    edges.push_back(f.rmax);
    edges.push_back(f.rmax * 1.01);
    std::sort(edges.begin(), edges.end());

    int nphi = std::max(64, resolution / 2);
    std::vector<Cplx> ring(static_cast<std::size_t>(nphi));
    for (int j = 0; j < nphi; ++j) {
        double phi = 2.0 * M_PI * j / nphi;
        ring[static_cast<std::size_t>(j)] = Cplx(std::cos(phi), std::sin(phi));
    }

    Cplx ec = std::exp(lambda * f.center);
    Cplx total = 0;
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
        Rule1D rr = simpson_rule(edges[c], edges[c + 1],
                                 cell_intervals(edges[c + 1] - edges[c], edges.back(), resolution));
        for (std::size_t i = 0; i < rr.nodes.size(); ++i) {
            double r = rr.nodes[i];
            double p = r <= f.rmax ? f.profile(r) : 0.0;
            if (p == 0.0) continue;
            Cplx avg = 0;
            for (int j = 0; j < nphi; ++j) avg += std::exp(lambda * (r * ring[static_cast<std::size_t>(j)]));
            avg /= static_cast<double>(nphi);
            total += rr.weights[i] * p * r * avg;
        }
    }
    return 2.0 * M_PI * ec * total;
}

}  // namespace

Cplx transform_I(const PlanarField& f, Cplx lambda, int resolution) {
    if (!(f.xhi > f.xlo) || !(f.yhi > f.ylo))
        throw std::invalid_argument("transform_I: empty support box");
    if (resolution < 8) throw std::invalid_argument("transform_I: resolution too small");
    return f.radial ? transform_radial(f, lambda, resolution)
                    : transform_cartesian(f, lambda, resolution);
}

Cplx transform_I_checked(const PlanarField& f, Cplx lambda, int resolution, double tol) {
    Cplx coarse = transform_I(f, lambda, resolution);
    Cplx fine = transform_I(f, lambda, 2 * resolution);
    if (std::abs(fine - coarse) > tol)
        throw std::runtime_error("transform_I: quadrature did not settle (refinement moved by " +
                                 std::to_string(std::abs(fine - coarse)) + ")");
    return fine;
}

PlanarField convolve(const PlanarField& f, const PlanarField& g, int inner_per_cell) {
    PlanarField out;
    out.xlo = f.xlo + g.xlo;
    out.xhi = f.xhi + g.xhi;
    out.ylo = f.ylo + g.ylo;
    out.yhi = f.yhi + g.yhi;

    auto sum_breaks = [](double lo1, double hi1, const std::vector<double>& b1, double lo2,
                         double hi2, const std::vector<double>& b2) {
        std::vector<double> e1{lo1, hi1}, e2{lo2, hi2};
        e1.insert(e1.end(), b1.begin(), b1.end());
        e2.insert(e2.end(), b2.begin(), b2.end());
        std::vector<double> sums;
        for (double a : e1)
            for (double b : e2) sums.push_back(a + b);
        std::sort(sums.begin(), sums.end());
        sums.erase(std::unique(sums.begin(), sums.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                   sums.end());
        return std::vector<double>(sums.begin() + 1, sums.end() - 1);  // interior only
    };
    out.breaks_x = sum_breaks(f.xlo, f.xhi, f.breaks_x, g.xlo, g.xhi, g.breaks_x);
    out.breaks_y = sum_breaks(f.ylo, f.yhi, f.breaks_y, g.ylo, g.yhi, g.breaks_y);

    auto fv = f.value;
    auto gv = g.value;
    // integration runs over f's support in w; panels split at f's breaks and
    // at z - (g's breaks), so indicator products stay smooth per panel
    auto axis_edges = [](double lo, double hi, const std::vector<double>& own, double z,
                         double glo, double ghi, const std::vector<double>& gb) {
        std::vector<double> edges{lo, hi};
        for (double b : own)
            if (b > lo && b < hi) edges.push_back(b);
        std::vector<double> gedges{glo, ghi};
        gedges.insert(gedges.end(), gb.begin(), gb.end());
        for (double b : gedges) {
            double e = z - b;
            if (e > lo && e < hi) edges.push_back(e);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-13; }),
                    edges.end());
        return edges;
    };

    double fxlo = f.xlo, fxhi = f.xhi, fylo = f.ylo, fyhi = f.yhi;
    auto fbx = f.breaks_x, fby = f.breaks_y;
    double gxlo = g.xlo, gxhi = g.xhi, gylo = g.ylo, gyhi = g.yhi;
    auto gbx = g.breaks_x, gby = g.breaks_y;

    out.value = [=](Cplx z) -> Cplx {
        auto ex = axis_edges(fxlo, fxhi, fbx, z.real(), gxlo, gxhi, gbx);
        auto ey = axis_edges(fylo, fyhi, fby, z.imag(), gylo, gyhi, gby);
        Cplx total = 0;
        for (std::size_t cx = 0; cx + 1 < ex.size(); ++cx) {
            Rule1D rx = simpson_rule(ex[cx], ex[cx + 1], inner_per_cell);
            for (std::size_t cy = 0; cy + 1 < ey.size(); ++cy) {
                Rule1D ry = simpson_rule(ey[cy], ey[cy + 1], inner_per_cell);
                for (std::size_t i = 0; i < rx.nodes.size(); ++i)
                    for (std::size_t j = 0; j < ry.nodes.size(); ++j) {
                        Cplx w(rx.nodes[i], ry.nodes[j]);
                        Cplx fw = fv(w);
                        if (fw == 0.0) continue;
                        total += rx.weights[i] * ry.weights[j] * fw * gv(z - w);
                    }
            }
        }
        return total;
    };
    return out;
}

IdentityReport check_identities(const PlanarField& f, double mu, Cplx w, const PlanarField& g,
                                const std::vector<Cplx>& lambda_grid, double tol) {
    if (lambda_grid.empty()) throw std::invalid_argument("check_identities: empty lambda grid");
    IdentityReport rep;
    rep.tol = tol;

    PlanarField smu = scaled(f, mu);
    PlanarField tw = translated(f, w);
    PlanarField smu_tw = scaled(translated(f, w), mu);
    PlanarField tw_smu = translated(scaled(f, mu), w / mu);
    PlanarField conv = convolve(f, g);

    for (Cplx lambda : lambda_grid) {
        Cplx base = transform_I(f, lambda);
        rep.scaling_err = std::max(rep.scaling_err,
                                   std::abs(transform_I(smu, lambda) -
                                            transform_I(f, lambda / mu) / (mu * mu)));
        rep.translation_err = std::max(rep.translation_err,
                                       std::abs(transform_I(tw, lambda) - std::exp(lambda * w) * base));

        // S_mu T_w f = T_(w/mu) S_mu f; predict its transform through the two
        // identities applied in either order, then against direct quadrature
        Cplx pred_a = std::exp(lambda * w / mu) * transform_I(f, lambda / mu) / (mu * mu);
        Cplx pred_b = transform_I(tw_smu, lambda);
        Cplx direct = transform_I(smu_tw, lambda);
        rep.composition_err = std::max({rep.composition_err, std::abs(direct - pred_a),
                                        std::abs(pred_b - pred_a)});

        Cplx lhs = transform_I(conv, lambda, 64);
        Cplx rhs = base * transform_I(g, lambda);
        rep.convolution_err = std::max(rep.convolution_err, std::abs(lhs - rhs));
    }
    rep.ok = rep.scaling_err <= tol && rep.translation_err <= tol && rep.composition_err <= tol &&
             rep.convolution_err <= tol;
    return rep;
}

WitnessReport rotsym_kernel_witness(const PlanarField& f, const std::vector<Cplx>& lambda_grid,
                                    double tol) {
    if (lambda_grid.empty()) throw std::invalid_argument("rotsym_kernel_witness: empty lambda grid");
    WitnessReport rep;
    rep.tol = tol;
    rep.mean = transform_I(f, 0.0).real();
    for (Cplx lambda : lambda_grid)
        rep.max_abs = std::max(rep.max_abs, std::abs(transform_I(f, lambda)));
    rep.in_kernel = std::abs(rep.mean) <= tol && rep.max_abs <= tol;
    return rep;
}

WitnessReport rotsym_kernel_witness(const std::function<double(double)>& profile, double rmax,
                                    const std::vector<double>& breaks, Cplx center,
                                    const std::vector<Cplx>& lambda_grid, double tol) {
    return rotsym_kernel_witness(PlanarField::from_profile(profile, rmax, breaks, center),
                                 lambda_grid, tol);
}

double cauchy_riemann_defect(const PlanarField& f, Cplx lambda, double h) {
    if (!(h > 0)) throw std::invalid_argument("cauchy_riemann_defect: h must be positive");
    Cplx d_re = (transform_I(f, lambda + h) - transform_I(f, lambda - h)) / (2 * h);
    Cplx d_im = (transform_I(f, lambda + Cplx(0, h)) - transform_I(f, lambda - Cplx(0, h))) / (2 * h);
    // d/d(conj lambda) = (d_re + i d_im) / 2
    return 0.5 * std::abs(d_re + Cplx(0, 1) * d_im);
}

}  // namespace brt
