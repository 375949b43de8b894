#include "brtlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "brtlab/csv.hpp"
#include "brtlab/parallel.hpp"
#include "brtlab/svg.hpp"

namespace brt {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& v, const std::string& key) {
    const char* begin = v.c_str();
    char* end = nullptr;
    double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw std::invalid_argument("config: bad number for '" + key + "': '" + v + "'");
    return x;
}

int parse_integer(const std::string& v, const std::string& key) {
    double x = parse_number(v, key);
    if (x != std::floor(x)) throw std::invalid_argument("config: '" + key + "' must be an integer");
    return static_cast<int>(x);
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) out.push_back(parse_number(trim(item), key));
    if (out.empty()) throw std::invalid_argument("config: empty list for '" + key + "'");
    return out;
}

std::string join_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt17(v[i]);
    }
    return s;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    auto put = [&os](const char* k, const std::string& v) { os << k << " = " << v << "\n"; };
    auto putd = [&](const char* k, double v) { put(k, fmt17(v)); };
    auto puti = [&](const char* k, int v) { put(k, std::to_string(v)); };
    os << "[experiment]\n";
    put("command", c.command);
    put("chart", c.chart);
    put("sigma", join_list(c.sigma));
    put("E", c.E_level);
    put("field", c.field);
    put("weight", c.weight);
    putd("atten", c.atten);
    puti("k", c.k);
    putd("eps_max", c.eps_max);
    puti("eps_count", c.eps_count);
    putd("eps", c.eps);
    putd("duration", c.duration);
    put("serial", c.serial ? "1" : "0");
    os << "\n[laplace]\n";
    put("mode", c.mode);
    put("planar_field", c.planar_field);
    put("planar_field_g", c.planar_field_g);
    puti("bins", c.bins);
    puti("lambda_count", c.lambda_count);
    putd("mu", c.mu);
    put("shift", fmt17(c.shift_re) + ", " + fmt17(c.shift_im));
    os << "\n[integrator]\n";
    putd("step_divisor", c.integrator.step_divisor);
    putd("max_step", c.integrator.max_step);
    putd("event_tol", c.integrator.event_tol);
    putd("speed_tol", c.integrator.speed_tol);
    putd("escape_frac", c.integrator.escape_frac);
    os << "\n[output]\n";
    put("csv", c.out_csv);
    put("svg", c.out_svg);
    return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unterminated section header");
            section = s.substr(1, s.size() - 2);
            if (section != "experiment" && section != "laplace" && section != "integrator" &&
                section != "output")
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
        std::string q = section + "." + key;
        if (q == "experiment.command") c.command = value;
        else if (q == "experiment.chart") c.chart = value;
        else if (q == "experiment.sigma") c.sigma = parse_list(value, key);
        else if (q == "experiment.E") c.E_level = value;
        else if (q == "experiment.field") c.field = value;
        else if (q == "experiment.weight") c.weight = value;
        else if (q == "experiment.atten") c.atten = parse_number(value, key);
        else if (q == "experiment.k") c.k = parse_integer(value, key);
        else if (q == "experiment.eps_max") c.eps_max = parse_number(value, key);
        else if (q == "experiment.eps_count") c.eps_count = parse_integer(value, key);
        else if (q == "experiment.eps") c.eps = parse_number(value, key);
        else if (q == "experiment.duration") c.duration = parse_number(value, key);
        else if (q == "experiment.serial") c.serial = parse_integer(value, key) != 0;
        else if (q == "laplace.mode") c.mode = value;
        else if (q == "laplace.planar_field") c.planar_field = value;
        else if (q == "laplace.planar_field_g") c.planar_field_g = value;
        else if (q == "laplace.bins") c.bins = parse_integer(value, key);
        else if (q == "laplace.lambda_count") c.lambda_count = parse_integer(value, key);
        else if (q == "laplace.mu") c.mu = parse_number(value, key);
        else if (q == "laplace.shift") {
            auto v = parse_list(value, key);
            if (v.size() != 2) throw std::invalid_argument("config: 'shift' takes two values");
            c.shift_re = v[0];
            c.shift_im = v[1];
        } else if (q == "integrator.step_divisor") c.integrator.step_divisor = parse_number(value, key);
        else if (q == "integrator.max_step") c.integrator.max_step = parse_number(value, key);
        else if (q == "integrator.event_tol") c.integrator.event_tol = parse_number(value, key);
        else if (q == "integrator.speed_tol") c.integrator.speed_tol = parse_number(value, key);
        else if (q == "integrator.escape_frac") c.integrator.escape_frac = parse_number(value, key);
        else if (q == "output.csv") c.out_csv = value;
        else if (q == "output.svg") c.out_svg = value;
        else
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + q + "'");
    }
    return c;
}

ChartEmbedding make_embedding(const std::string& chart_spec, double x1_min, double x1_max) {
    ChartEmbedding e;
    if (chart_spec == "disk") {
        e.map = [](const Point& p) {
            double r = 1.0 - p.x0;
            return std::pair<double, double>{r * std::cos(p.xb[0]), r * std::sin(p.xb[0])};
        };
        return e;
    }
    if (chart_spec == "flat") {
        e.map = [](const Point& p) { return std::pair<double, double>{p.xb[0], p.x0}; };
        return e;
    }
    if (chart_spec == "sphere-band") {
        e.map = [](const Point& p) { return std::pair<double, double>{p.xb[0], p.xb[1]}; };
        return e;
    }
    if (chart_spec.rfind("band:kappa=", 0) == 0) {
        CompiledExpr kappa = Expr::parse(chart_spec.substr(11)).bind({"x1"});
        double margin = 0.05 * std::max(x1_max - x1_min, 1e-6) + 1e-6;
        double s0 = x1_min - margin, s1 = x1_max + margin;
        int n = 4096;
        double h = (s1 - s0) / n;
        auto psi = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) + 1);
        auto cx = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) + 1);
        auto cy = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) + 1);
        (*psi)[0] = 0;
        (*cx)[0] = 0;
        (*cy)[0] = 0;
        // Frenet frame: heading turns at rate kappa, curve follows the heading
        double state[3] = {0, 0, 0};  // psi, cx, cy
        auto rhs = [&kappa](double s, const double* y, double* dy) {
            dy[0] = kappa(s);
            dy[1] = std::cos(y[0]);
            dy[2] = std::sin(y[0]);
        };
        for (int i = 0; i < n; ++i) {
            double s = s0 + i * h;
            double k1[3], k2[3], k3[3], k4[3], tmp[3];
            rhs(s, state, k1);
            for (int j = 0; j < 3; ++j) tmp[j] = state[j] + 0.5 * h * k1[j];
            rhs(s + 0.5 * h, tmp, k2);
            for (int j = 0; j < 3; ++j) tmp[j] = state[j] + 0.5 * h * k2[j];
            rhs(s + 0.5 * h, tmp, k3);
            for (int j = 0; j < 3; ++j) tmp[j] = state[j] + h * k3[j];
            rhs(s + h, tmp, k4);
            for (int j = 0; j < 3; ++j)
                state[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
            (*psi)[static_cast<std::size_t>(i) + 1] = state[0];
            (*cx)[static_cast<std::size_t>(i) + 1] = state[1];
            (*cy)[static_cast<std::size_t>(i) + 1] = state[2];
        }
        e.map = [psi, cx, cy, s0, s1, h, n](const Point& p) {
            double s = std::clamp(p.xb[0], s0, s1);
            double u = (s - s0) / h;
            std::size_t i = std::min(static_cast<std::size_t>(u), static_cast<std::size_t>(n - 1));
            double th = u - static_cast<double>(i);
            auto lerp = [&](const std::vector<double>& t) {
                return (1 - th) * t[i] + th * t[i + 1];
            };
            double ps = lerp(*psi), X = lerp(*cx), Y = lerp(*cy);
            // left normal points into the domain when kappa > 0
            return std::pair<double, double>{X - p.x0 * std::sin(ps), Y + p.x0 * std::cos(ps)};
        };
        return e;
    }
    throw ChartError("no drawing embedding for chart '" + chart_spec + "'");
}

namespace {

// ---------------------------------------------------------------------------
// shared pipeline pieces

void embed_config(CsvWriter& csv, const ExperimentConfig& cfg) {
    std::istringstream in(serialize_config(cfg));
    std::string line;
    csv.comment("run configuration:");
    while (std::getline(in, line)) csv.comment(line);
}

Vec start_of(const ExperimentConfig& cfg, int bdim) {
    std::size_t want = bdim == 1 ? 3 : 5;
    if (cfg.sigma.size() != want)
        throw std::invalid_argument("sigma needs " + std::to_string(want) +
                                    " values (start, direction, length) on this chart");
    Vec x{cfg.sigma[0], 0.0};
    if (bdim == 2) x[1] = cfg.sigma[1];
    return x;
}

// direction components normalized to unit g-length along the boundary
Vec dir_of(const MetricChart& chart, const ExperimentConfig& cfg) {
    int bdim = chart.bdim();
    Vec x = start_of(cfg, bdim);
    Vec d{0.0, 0.0};
    if (bdim == 1) d[0] = cfg.sigma[1];
    else {
        d[0] = cfg.sigma[2];
        d[1] = cfg.sigma[3];
    }
    TMat g = chart.g(0.0, x);
    double norm2 = 0;
    for (int i = 0; i < bdim; ++i)
        for (int j = 0; j < bdim; ++j)
            norm2 += g(i, j) * d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)];
    if (!(norm2 > 0)) throw std::invalid_argument("sigma direction must be nonzero");
    double inv = 1.0 / std::sqrt(norm2);
    d[0] *= inv;
    d[1] *= inv;
    return d;
}

double length_of(const ExperimentConfig& cfg) {
    double L = cfg.sigma.back();
    if (!(L > 0)) throw std::invalid_argument("sigma length must be positive");
    return L;
}

TomographySet tomography_of(const ExperimentConfig& cfg, int bdim) {
    std::vector<std::string> vars{"x1"};
    if (bdim == 2) vars.push_back("x2");
    CompiledExpr level = Expr::parse(cfg.E_level).bind(vars);
    TomographySet E;
    E.level = [level, bdim](const Vec& x) {
        double in[2] = {x[0], x[1]};
        (void)bdim;
        return level.eval(in);
    };
    return E;
}

WeightSpec weight_of(const ExperimentConfig& cfg, int bdim) {
    std::vector<std::string> vars{"x0", "x1"};
    if (bdim == 2) vars.push_back("x2");
    CompiledExpr w = Expr::parse(cfg.weight).bind(vars);
    WeightSpec spec;
    spec.w = [w](const Point& x, const Velocity&) {
        double in[3] = {x.x0, x.xb[0], x.xb[1]};
        return w.eval(in);
    };
    double lambda = cfg.atten;
    spec.a = [lambda](const Point&, const Velocity&) { return -lambda; };
    return spec;
}

PhaseState launch_state(const MetricChart& chart, const ExperimentConfig& cfg) {
    if (!(cfg.eps > 0 && cfg.eps < 1))
        throw std::invalid_argument("eps must lie in (0, 1)");
    Vec x = start_of(cfg, chart.bdim());
    Vec d = dir_of(chart, cfg);
    double tang = std::sqrt(1.0 - cfg.eps * cfg.eps);
    return PhaseState{0.0, Point{0.0, x}, Velocity{cfg.eps, Vec{tang * d[0], tang * d[1]}}};
}

PlanarField planar_by_name(const std::string& name) {
    if (name == "two-squares") return PlanarField::two_squares();
    if (name == "disk") return PlanarField::disk_indicator();
    if (name == "annulus") return PlanarField::annulus_witness();
    if (name.rfind("square:", 0) == 0)
        return PlanarField::square_indicator(parse_number(name.substr(7), "square side"));
    throw std::invalid_argument("unknown planar field '" + name +
                                "' (two-squares, disk, annulus, square:<side>)");
}

std::vector<Cplx> complex_grid16() {
    std::vector<Cplx> grid;
    for (double r : {0.5, 1.0})
        for (int q = 0; q < 8; ++q) grid.push_back(std::polar(r, q * M_PI / 4.0));
    return grid;
}

void draw_ray_svg(const std::string& path, const std::string& chart_spec, const BrokenRay& ray) {
    double x1min = 1e300, x1max = -1e300;
    for (const auto& s : ray.samples) {
        x1min = std::min(x1min, s.x.xb[0]);
        x1max = std::max(x1max, s.x.xb[0]);
    }
    ChartEmbedding emb = make_embedding(chart_spec, x1min, x1max);
    SvgCanvas svg;
    if (chart_spec != "sphere-band") {
        std::vector<std::pair<double, double>> bdry;
        double lo = x1min, hi = x1max;
        if (chart_spec == "disk") {
            lo = 0;
            hi = 2 * M_PI;
        } else {
            double m = 0.05 * std::max(hi - lo, 1e-6);
            lo -= m;
            hi += m;
        }
        for (int i = 0; i <= 512; ++i)
            bdry.push_back(emb.map(Point{0.0, Vec{lo + (hi - lo) * i / 512.0, 0.0}}));
        svg.polyline(bdry, "#202020", 1.5);
    }
    for (std::size_t s = 0; s < ray.segment_count(); ++s) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = ray.segment_starts[s]; i <= ray.segment_end(s); ++i)
            pts.push_back(emb.map(ray.samples[i].x));
        svg.polyline(pts, "#b22222", 1.0);
    }
    svg.write_file(path);
}

// ---------------------------------------------------------------------------
// pipelines (setup already done by the caller; anything thrown here is a
// runtime failure, not a usage error)

int run_trace(const ExperimentConfig& cfg, const MetricChart& chart, const PhaseState& start,
              std::ostream& out) {
    double dur = cfg.duration > 0 ? cfg.duration : length_of(cfg);
    BrokenRay ray = trace(chart, start, dur, cfg.integrator);

    if (!cfg.out_csv.empty()) {
        CsvWriter csv;
        embed_config(csv, cfg);
        csv.comment("units: unit-speed arclength (t), chart coordinates (x), chart frame (v)");
        std::vector<std::string> names{"t", "x0", "x1", "v0", "v1", "is_event"};
        if (chart.bdim() == 2) names = {"t", "x0", "x1", "x2", "v0", "v1", "v2", "is_event"};
        csv.header(names);
        std::size_t next_event = 0;
        for (std::size_t i = 0; i < ray.samples.size(); ++i) {
            const auto& s = ray.samples[i];
            bool ev = next_event + 1 < ray.segment_starts.size() &&
                      i == ray.segment_starts[next_event + 1];
            if (ev) ++next_event;
            std::vector<double> row{s.t, s.x.x0, s.x.xb[0]};
            if (chart.bdim() == 2) row.push_back(s.x.xb[1]);
            row.push_back(s.v.v0);
            row.push_back(s.v.vb[0]);
            if (chart.bdim() == 2) row.push_back(s.v.vb[1]);
            row.push_back(ev ? 1.0 : 0.0);
            csv.row_values(row);
        }
        csv.write_file(cfg.out_csv);
    }
    if (!cfg.out_svg.empty()) draw_ray_svg(cfg.out_svg, cfg.chart, ray);

    out << "trace: " << ray.events.size() << " reflections over t=" << fmt17(ray.duration)
        << ", status " << to_string(ray.status) << ", max speed drift "
        << fmt17(ray.max_speed_err) << "\n";
    if (ray.status == TraceStatus::ok || ray.status == TraceStatus::escape) return 0;
    return 3;
}

int run_brt(const ExperimentConfig& cfg, const MetricChart& chart, const PhaseState& start,
            std::ostream& out) {
    double dur = cfg.duration > 0 ? cfg.duration : length_of(cfg);
    ScalarField f = ScalarField::from_expr(Expr::parse(cfg.field), std::max(cfg.k, 1), chart.bdim());
    WeightSpec spec = weight_of(cfg, chart.bdim());

    BrokenRay ray = trace(chart, start, dur, cfg.integrator);
    if (ray.status != TraceStatus::ok && ray.status != TraceStatus::escape) {
        out << "brt: trace failed with status " << to_string(ray.status) << "\n";
        return 3;
    }
    double value = broken_ray_transform(chart, spec, f, ray);
    double E0 = energy(chart, ray.samples.front());

    if (!cfg.out_csv.empty()) {
        CsvWriter csv;
        embed_config(csv, cfg);
        csv.comment("units: unit-speed arclength");
        csv.header({"integral", "duration", "reflections", "launch_energy", "max_speed_err"});
        csv.row_values({value, ray.duration, static_cast<double>(ray.events.size()), E0,
                        ray.max_speed_err});
        csv.write_file(cfg.out_csv);
    }
    if (!cfg.out_svg.empty()) draw_ray_svg(cfg.out_svg, cfg.chart, ray);

    out << "brt = " << fmt17(value) << " (" << ray.events.size() << " reflections, E(0) = "
        << fmt17(E0) << ")\n";
    return 0;
}

int run_reconstruct(const ExperimentConfig& cfg, const MetricChart& chart, std::ostream& out) {
    Vec x = start_of(cfg, chart.bdim());
    Vec d = dir_of(chart, cfg);
    double L = length_of(cfg);
    BoundaryGeodesic sigma = integrate_boundary_geodesic(chart, x, d, L);
    TomographySet E = tomography_of(cfg, chart.bdim());
    if (cfg.k < 0) throw std::invalid_argument("k must be >= 0");
    ScalarField f = ScalarField::from_expr(Expr::parse(cfg.field), cfg.k, chart.bdim());
    WeightSpec spec = weight_of(cfg, chart.bdim());
    std::vector<double> eps = halving_epsilons(cfg.eps_max, cfg.eps_count);

    GlancingFamily family = launch_glancing(chart, sigma, eps, cfg.integrator);
    RecoveryReport rep = cfg.k == 0 ? recover_k0(chart, spec, f, sigma, family, E)
                                    : recover_k(chart, spec, f, sigma, family, cfg.k, E);

    if (!cfg.out_csv.empty()) {
        CsvWriter csv;
        embed_config(csv, cfg);
        csv.comment("units: unit-speed arclength; estimates in field units x length");
        csv.comment("sigma: " + rep.sigma_id);
        csv.comment("limit = " + fmt17(rep.extrapolation.limit) +
                    ", band = " + fmt17(rep.extrapolation.band) +
                    ", gap order = " + fmt17(rep.extrapolation.order) +
                    (rep.extrapolation.richardson ? " (richardson)" : " (last value)"));
        csv.comment("target = " + fmt17(rep.target) + ", rel_err = " + fmt17(rep.rel_err) +
                    ", tolerance = " + fmt17(rep.stage_tolerance) +
                    (rep.within_tolerance ? ", pass" : ", FAIL"));
        csv.header({"eps", "launch_energy", "truncation_time", "raw_transform",
                    "taylor_corrected", "estimate", "sup_x0", "sup_rho_err", "failed"});
        for (const auto& row : rep.rows)
            csv.row_values({row.eps, row.energy0, row.T, row.raw_brt, row.corrected, row.estimate,
                            row.sup_x0, row.sup_rho_err, row.failed ? 1.0 : 0.0});
        csv.write_file(cfg.out_csv);
    }
    if (!cfg.out_svg.empty()) {
        // draw a mid-family member: visibly glancing but with few enough
        // bounces to read
        for (const auto& m : family.members)
            if (!m.failed && m.eps <= cfg.eps_max * 0.26) {
                draw_ray_svg(cfg.out_svg, cfg.chart, m.ray);
                break;
            }
    }

    out << "k=" << rep.k << ": limit " << fmt17(rep.extrapolation.limit) << " vs target "
        << fmt17(rep.target) << " (rel err " << fmt17(rep.rel_err) << ", tolerance "
        << fmt17(rep.stage_tolerance) << ") " << (rep.within_tolerance ? "PASS" : "FAIL") << "\n";
    return rep.within_tolerance ? 0 : 1;
}

int run_laplace(const ExperimentConfig& cfg, std::ostream& out) {
    CsvWriter csv;
    embed_config(csv, cfg);
    int code = 0;

    if (cfg.mode == "transform") {
        PlanarField f = planar_by_name(cfg.planar_field);
        csv.comment("units: dimensionless");
        csv.header({"re_lambda", "im_lambda", "re_If", "im_If", "abs_If"});
        for (Cplx lambda : complex_grid16()) {
            Cplx v = transform_I_checked(f, lambda, 128, 1e-6);
            csv.row_values({lambda.real(), lambda.imag(), v.real(), v.imag(), std::abs(v)});
            out << "I f(" << fmt17(lambda.real()) << (lambda.imag() < 0 ? "-" : "+")
                << fmt17(std::abs(lambda.imag())) << "i) = " << fmt17(v.real())
                << (v.imag() < 0 ? " - " : " + ") << fmt17(std::abs(v.imag())) << "i\n";
        }
    } else if (cfg.mode == "identities") {
        PlanarField f = planar_by_name(cfg.planar_field);
        PlanarField g = planar_by_name(cfg.planar_field_g);
        IdentityReport rep =
            check_identities(f, cfg.mu, Cplx(cfg.shift_re, cfg.shift_im), g, complex_grid16());
        csv.comment("units: dimensionless");
        csv.header({"scaling_err", "translation_err", "composition_err", "convolution_err",
                    "tolerance", "pass"});
        csv.row_values({rep.scaling_err, rep.translation_err, rep.composition_err,
                        rep.convolution_err, rep.tol, rep.ok ? 1.0 : 0.0});
        out << "identities: scaling " << fmt17(rep.scaling_err) << ", translation "
            << fmt17(rep.translation_err) << ", composition " << fmt17(rep.composition_err)
            << ", convolution " << fmt17(rep.convolution_err) << " (tolerance " << fmt17(rep.tol)
            << ") " << (rep.ok ? "PASS" : "FAIL") << "\n";
        code = rep.ok ? 0 : 1;
    } else if (cfg.mode == "witness") {
        PlanarField f = planar_by_name(cfg.planar_field);
        WitnessReport rep = rotsym_kernel_witness(f, complex_grid16());
        csv.comment("units: dimensionless");
        csv.header({"mean", "max_abs_If", "tolerance", "in_kernel"});
        csv.row_values({rep.mean, rep.max_abs, rep.tol, rep.in_kernel ? 1.0 : 0.0});
        out << "witness: mean " << fmt17(rep.mean) << ", max |If| " << fmt17(rep.max_abs)
            << (rep.in_kernel ? " -- in kernel" : " -- NOT in kernel") << "\n";
        code = rep.in_kernel ? 0 : 1;
    } else if (cfg.mode == "recover") {
        double L = cfg.sigma.back();
        if (!(L > 0)) throw std::invalid_argument("sigma length must be positive");
        if (cfg.bins < 1) throw std::invalid_argument("bins must be >= 1");
        std::vector<double> truth(static_cast<std::size_t>(cfg.bins));
        for (int i = 0; i < cfg.bins; ++i) truth[static_cast<std::size_t>(i)] = i < cfg.bins / 2 ? 1.0 : 0.0;
        MomentSystem ms = forward_moments(L, truth, default_lambda_grid(L, cfg.lambda_count));
        BinnedValues rec = laplace_recover(ms);
        double max_err = 0;
        csv.comment("units: arclength bins over [0, L]");
        csv.header({"bin_lo", "bin_hi", "true_value", "recovered", "abs_err"});
        for (int i = 0; i < cfg.bins; ++i) {
            auto iu = static_cast<std::size_t>(i);
            double err = std::abs(rec.values[iu] - truth[iu]);
            max_err = std::max(max_err, err);
            csv.row_values({rec.edges[iu], rec.edges[iu + 1], truth[iu], rec.values[iu], err});
        }
        out << "laplace recover: max bin error " << fmt17(max_err) << " (residual "
            << fmt17(rec.residual) << ") " << (max_err < 1e-3 ? "PASS" : "FAIL") << "\n";
        code = max_err < 1e-3 ? 0 : 1;
    } else {
        throw std::invalid_argument("unknown laplace mode '" + cfg.mode +
                                    "' (recover, transform, identities, witness)");
    }

    if (!cfg.out_csv.empty()) csv.write_file(cfg.out_csv);
    return code;
}

struct SelftestCheck {
    std::string name;
    double value;
    double tol;
    bool greater;  // pass means value > tol instead of <=
    bool pass;
};

int run_selftest(const ExperimentConfig& cfg, std::ostream& out) {
    std::vector<SelftestCheck> checks;
    auto add = [&checks](const std::string& name, double value, double tol, bool greater = false) {
        checks.push_back({name, value, tol, greater, greater ? value > tol : value <= tol});
    };

    {  // chord geometry in the round disk: reflection times and angles
        MetricChart disk = disk_chart();
        double theta = 0.3;
        PhaseState start{0.0, Point{0.0, Vec{0.0, 0.0}},
                         Velocity{std::sin(theta), Vec{std::cos(theta), 0.0}}};
        BrokenRay ray = trace(disk, start, 10.5 * 2.0 * std::sin(theta));
        double err = ray.events.size() == 10 ? 0.0 : 1.0;
        for (std::size_t i = 0; i < ray.events.size(); ++i) {
            double t_exact = 2.0 * std::sin(theta) * static_cast<double>(i + 1);
            double phi_exact = 2.0 * theta * static_cast<double>(i + 1);
            err = std::max(err, std::abs(ray.events[i].t - t_exact));
            err = std::max(err, std::abs(std::remainder(ray.events[i].xb[0] - phi_exact,
                                                        2.0 * M_PI)));
        }
        add("disk-chord", err, 1e-8);
    }
    {  // bounce-time deviation |tau/tau_pred - 1| scales like E(0)
        MetricChart disk = disk_chart();
        std::vector<std::pair<double, double>> pairs;
        for (int i = 2; i <= 6; ++i) {
            double eps = std::pow(2.0, -i);
            PhaseState start{0.0, Point{0.0, Vec{0.0, 0.0}},
                             Velocity{eps, Vec{std::sqrt(1 - eps * eps), 0.0}}};
            BrokenRay ray = trace(disk, start, 5.0 * eps);
            auto intervals = bounce_intervals(disk, ray);
            pairs.emplace_back(0.5 * eps * eps, intervals.front().deviation);
        }
        add("disk-bounce-order", std::abs(fit_order(pairs).order - 1.0), 0.05);
    }
    {  // energy ratio tracks the curvature power along a varying-kappa band
        MetricChart band = band_chart(Expr::parse("1 + cos(x1)/2"));
        BoundaryGeodesic sigma = integrate_boundary_geodesic(band, Vec{M_PI / 2, 0}, Vec{1, 0},
                                                             M_PI);
        GlancingFamily fam = launch_glancing(band, sigma, {1.0 / 64.0});
        double sup = 0;
        const BrokenRay& ray = fam.members.front().ray;
        double E0 = energy(band, ray.samples.front());
        for (const auto& s : ray.samples) {
            if (s.t > sigma.L) break;
            sup = std::max(sup, std::abs(energy(band, s) / E0 -
                                         rho_closed_form(band, sigma, s.t, 1)));
        }
        add("band-rho-identity", sup, 1e-2);
    }
    {  // half-turn recovery of f == 1 against the arc length pi
        MetricChart disk = disk_chart();
        BoundaryGeodesic sigma = integrate_boundary_geodesic(disk, Vec{0, 0}, Vec{1, 0}, M_PI);
        GlancingFamily fam = launch_glancing(disk, sigma, halving_epsilons(0.05, 5));
        RecoveryReport rep = recover_k0(disk, WeightSpec::trivial(), ScalarField::constant(1.0),
                                        sigma, fam);
        add("disk-k0-halfturn", std::abs(rep.extrapolation.limit - M_PI) / M_PI, 1e-2);
    }
    {  // complex transform: rotational symmetry, controls, bin solve
        add("transform-disk-pi",
            std::abs(transform_I(PlanarField::disk_indicator(), Cplx(1, 0)) - M_PI), 1e-6);
        add("two-squares-control",
            std::abs(transform_I(PlanarField::two_squares(), Cplx(1, 0))), 1e-3, true);
        WitnessReport wr = rotsym_kernel_witness(PlanarField::annulus_witness(), complex_grid16());
        add("annulus-witness", wr.max_abs, 1e-6);

        std::vector<double> truth{1, 1, 1, 1, 0, 0, 0, 0};
        MomentSystem ms = forward_moments(M_PI, truth, default_lambda_grid(M_PI, 32));
        BinnedValues rec = laplace_recover(ms);
        double max_err = 0;
        for (std::size_t i = 0; i < truth.size(); ++i)
            max_err = std::max(max_err, std::abs(rec.values[i] - truth[i]));
        add("laplace-bins", max_err, 1e-3);
    }

    bool all = true;
    for (const auto& c : checks) {
        all = all && c.pass;
        out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " value=" << fmt17(c.value)
            << (c.greater ? " > " : " <= ") << "tol=" << fmt17(c.tol) << "\n";
    }
    out << (all ? "selftest passed" : "selftest FAILED") << " (" << checks.size() << " checks)\n";

    if (!cfg.out_csv.empty()) {
        CsvWriter csv;
        embed_config(csv, cfg);
        csv.comment("units: dimensionless check values");
        csv.header({"check", "value", "tolerance", "pass"});
        for (const auto& c : checks)
            csv.row({c.name, fmt17(c.value), fmt17(c.tol), c.pass ? "1" : "0"});
        csv.write_file(cfg.out_csv);
    }
    return all ? 0 : 1;
}

}  // namespace

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    set_exec_mode(cfg.serial ? ExecMode::serial : ExecMode::parallel);

    if (cfg.command == "selftest") {
        try {
            return run_selftest(cfg, out);
        } catch (const std::exception& e) {
            err << "selftest error: " << e.what() << "\n";
            return 3;
        }
    }
    if (cfg.command == "laplace") {
        // setup errors (unknown fields/modes) surface before any heavy work
        if (cfg.mode == "transform" || cfg.mode == "identities" || cfg.mode == "witness") {
            planar_by_name(cfg.planar_field);
            if (cfg.mode == "identities") planar_by_name(cfg.planar_field_g);
        } else if (cfg.mode != "recover") {
            throw std::invalid_argument("unknown laplace mode '" + cfg.mode + "'");
        }
        try {
            return run_laplace(cfg, out);
        } catch (const std::exception& e) {
            err << "laplace error: " << e.what() << "\n";
            return 3;
        }
    }
    if (cfg.command == "trace" || cfg.command == "brt" || cfg.command == "reconstruct") {
        MetricChart chart = parse_chart(cfg.chart);
        // validate everything the pipeline will parse, so malformed input is
        // reported as a usage error rather than a mid-run failure
        start_of(cfg, chart.bdim());
        dir_of(chart, cfg);
        length_of(cfg);
        if (cfg.command != "trace") {
            Expr::parse(cfg.field);
            Expr::parse(cfg.weight);
        }
        if (cfg.command == "reconstruct") Expr::parse(cfg.E_level);

        try {
            if (cfg.command == "trace") return run_trace(cfg, chart, launch_state(chart, cfg), out);
            if (cfg.command == "brt") return run_brt(cfg, chart, launch_state(chart, cfg), out);
            return run_reconstruct(cfg, chart, out);
        } catch (const std::exception& e) {
            err << cfg.command << " error: " << e.what() << "\n";
            return 3;
        }
    }
    throw std::invalid_argument("unknown command '" + cfg.command +
                                "' (trace, brt, reconstruct, laplace, selftest)");
}

int cli_main(int argc, const char* const* argv) {
    // the config file seeds the defaults; explicit flags then override
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    }
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            std::cerr << "cannot read config file '" << config_path << "'\n";
            return 2;
        }
        std::ostringstream text;
        text << in.rdbuf();
        try {
            cfg = parse_config(text.str());
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return 2;
        }
    }

    CLI::App app{"numerical laboratory for glancing-ray boundary integrals"};
    app.require_subcommand(0, 1);
    std::string config_opt;
    app.add_option("--config", config_opt, "key = value config file (flags override)");

    auto attach = [&cfg, &config_opt](CLI::App* sub) {
        sub->add_option("--config", config_opt, "key = value config file (flags override)");
        sub->add_option("--chart", cfg.chart, "disk | flat | sphere-band | band:kappa=<expr>");
        sub->add_option("--sigma", cfg.sigma,
                        "boundary geodesic: start,dir,L (surfaces) or x1,x2,d1,d2,L")
            ->delimiter(',');
        sub->add_option("--E", cfg.E_level, "tomography predicate expression (>= 0 admits)");
        sub->add_option("--field", cfg.field, "integrand expression in x0, x1[, x2]");
        sub->add_option("--weight", cfg.weight, "weight factor expression in x0, x1[, x2]");
        sub->add_option("--atten", cfg.atten, "constant attenuation lambda (a = -lambda)");
        sub->add_option("--k", cfg.k, "normal derivative order to recover");
        sub->add_option("--eps-max", cfg.eps_max, "largest normal launch speed");
        sub->add_option("--eps-count", cfg.eps_count, "family size (halving grid)");
        sub->add_option("--eps", cfg.eps, "single-ray launch speed (trace/brt)");
        sub->add_option("--duration", cfg.duration, "trace duration (default: sigma length)");
        sub->add_flag("--serial", cfg.serial, "disable the parallel map");
        sub->add_option("--mode", cfg.mode, "laplace mode: recover | transform | identities | witness");
        sub->add_option("--planar-field", cfg.planar_field,
                        "two-squares | disk | annulus | square:<side>");
        sub->add_option("--planar-field-g", cfg.planar_field_g, "second field for identities");
        sub->add_option("--bins", cfg.bins, "bin count for the moment solve");
        sub->add_option("--lambda-count", cfg.lambda_count, "attenuation grid size");
        sub->add_option("--mu", cfg.mu, "scaling identity parameter");
        sub->add_option("--shift-re", cfg.shift_re, "translation identity parameter (real)");
        sub->add_option("--shift-im", cfg.shift_im, "translation identity parameter (imag)");
        sub->add_option("--step-divisor", cfg.integrator.step_divisor,
                        "integrator steps per predicted bounce");
        sub->add_option("--max-step", cfg.integrator.max_step, "integrator step cap");
        sub->add_option("--event-tol", cfg.integrator.event_tol, "reflection time tolerance");
        sub->add_option("--out", cfg.out_csv, "CSV report path");
        sub->add_option("--svg", cfg.out_svg, "trajectory figure path");
    };
    for (const char* name : {"trace", "brt", "reconstruct", "laplace", "selftest"})
        attach(app.add_subcommand(name, std::string("run the ") + name + " pipeline"));

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    auto subs = app.get_subcommands();
    if (!subs.empty()) cfg.command = subs.front()->get_name();
    else if (config_path.empty()) {
        std::cerr << "nothing to do: pass a subcommand or --config\n" << app.help();
        return 2;
    }

    try {
        return run(cfg, std::cout, std::cerr);
    } catch (const ExprError& e) {
        std::cerr << "expression error: " << e.what() << "\n";
        return 2;
    } catch (const ChartError& e) {
        std::cerr << "chart error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace brt
