#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "brtlab/laplace1d.hpp"

namespace brt {

// Single source of truth for a run: serializable to a key = value sections
// file, overridable by command-line flags (flags win).
struct ExperimentConfig {
    std::string command = "selftest";  // trace | brt | reconstruct | laplace | selftest
    std::string chart = "disk";
    // start coords, direction components, length: {x1, dir, L} on surfaces,
    // {x1, x2, d1, d2, L} on 3-D charts
    std::vector<double> sigma{M_PI / 2, 1.0, M_PI};
    std::string E_level = "1";  // tomography predicate >= 0, in x1[, x2]
    std::string field = "x0";
    std::string weight = "1";  // position-dependent factor of the weight
    double atten = 0;          // constant attenuation: a = -atten
    int k = 0;
    double eps_max = 0.1;
    int eps_count = 9;
    double eps = 0.03125;  // single-ray commands
    double duration = 0;   // trace/brt; 0 means the sigma length
    bool serial = false;

    std::string mode = "transform";  // laplace: recover | transform | identities | witness
    std::string planar_field = "two-squares";
    std::string planar_field_g = "square:0.5";
    int bins = 8;
    int lambda_count = 32;
    double mu = 2.0;
    double shift_re = 0.25, shift_im = 0.125;

    IntegratorSettings integrator;

    std::string out_csv;
    std::string out_svg;
};

// key = value sections; parse(serialize(c)) reproduces c exactly (doubles at
// 17 digits).  Unknown keys or malformed lines throw std::invalid_argument.
std::string serialize_config(const ExperimentConfig& c);
ExperimentConfig parse_config(const std::string& text);

// Map from chart coordinates to drawing coordinates: polar for the disk,
// a curvature-integrated (Frenet) embedding for bands, the coordinate plane
// otherwise.
struct ChartEmbedding {
    std::function<std::pair<double, double>(const Point&)> map;
};
ChartEmbedding make_embedding(const std::string& chart_spec, double x1_min, double x1_max);

// Execute the configured pipeline; returns the process exit code
// (0 ok, 1 declared tolerance violated, 3 runtime failure).  Setup problems
// (bad expressions, unknown charts) propagate as exceptions so the CLI can
// map them to exit code 2.
int run(const ExperimentConfig& c, std::ostream& out, std::ostream& err);

// Full command-line entry point (lives in the library so tests can call it
// in-process).
int cli_main(int argc, const char* const* argv);

}  // namespace brt
