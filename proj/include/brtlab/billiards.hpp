#pragma once

#include <functional>
#include <string>
#include <vector>

#include "brtlab/geometry.hpp"

namespace brt {

struct PhaseState {
    double t = 0;
    Point x;
    Velocity v;
};

struct ReflectionEvent {
    double t;
    Vec xb;
    Velocity v_in, v_out;     // v_out flips the sign of v0, tangential parts equal
    double clamp_residual;    // |x0| left over after event location
};

enum class TraceStatus { ok, escape, speed_drift, step_underflow };

const char* to_string(TraceStatus s);

struct BrokenRay {
    std::vector<PhaseState> samples;       // event samples carry the outgoing velocity
    std::vector<ReflectionEvent> events;
    std::vector<std::size_t> segment_starts;  // sample index opening each geodesic segment
    double duration = 0;
    TraceStatus status = TraceStatus::ok;
    double max_speed_err = 0;
    double max_clamp_residual = 0;

    // sample index closing segment s (the next segment's opening sample)
    std::size_t segment_end(std::size_t s) const {
        return s + 1 < segment_starts.size() ? segment_starts[s + 1] : samples.size() - 1;
    }
    std::size_t segment_count() const { return segment_starts.size(); }
};

struct IntegratorSettings {
    double step_divisor = 64;   // step = predicted bounce time / divisor
    double max_step = 1e-3;
    double event_tol = 1e-13;   // bisection time tolerance for x0 = 0
    double speed_tol = 1e-6;    // |v|_g drift treated as an error
    double escape_frac = 1.0 - 1e-6;  // abort at x0 >= h * escape_frac
};

// Integrate the broken ray from `start` for `duration`: geodesic ODE between
// reflections, bisection onto x0 = 0, reflection law v0 -> -v0.  Unit speed
// is monitored, never renormalized.
BrokenRay trace(const MetricChart& chart, const PhaseState& start, double duration,
                const IntegratorSettings& settings = {});

// E = 1/2 (v0)^2 + x0 * II(vb, vb) evaluated at (x0, xb).
double energy(const MetricChart& chart, const PhaseState& s);

struct BounceInterval {
    double t0, tau;       // adjacent zeros of gamma^0 at t0 and t0 + tau
    double tau_predicted; // 2 sqrt(2 E(t0)) / II(gamma'(t0))
    double deviation;     // |tau / tau_predicted - 1|
};

// Zeros of gamma^0 are the launch (when it starts on the boundary) and the
// reflection events; requires at least two zeros.
std::vector<BounceInterval> bounce_intervals(const MetricChart& chart, const BrokenRay& ray);

struct FamilyMember {
    double eps;
    BrokenRay ray;
    bool failed = false;
    std::string error;
    double sup_x0 = 0, sup_energy = 0, sup_dist = 0;  // convergence diagnostics vs sigma
};

struct GlancingFamily {
    std::vector<FamilyMember> members;  // ordered by decreasing eps
};

// Rays launched from sigma(0) with normal speed eps and tangential part
// sqrt(1 - eps^2) sigma'(0), traced for duration L.  Members are independent
// and run through the parallel map; failures are recorded per member.
GlancingFamily launch_glancing(const MetricChart& chart, const BoundaryGeodesic& sigma,
                               const std::vector<double>& epsilons,
                               const IntegratorSettings& settings = {});

struct DepthCheck {
    double lhs = 0, rhs = 0;  // int gamma0^k F  vs  int (2E / 3 II)^k F
    struct Bounce {
        double t0, tau;
        double integral;   // int gamma0 over the bounce
        double predicted;  // v^2 tau / (3 a)
        double ratio;      // |integral - predicted| / tau^4
    };
    std::vector<Bounce> bounces;
    double T = 0;  // integration cut at the last zero of gamma0
};

// Global and per-bounce forms of the depth average: the pair (lhs, rhs) for
// exponent k over [0, T], T the last zero, plus the per-bounce O(tau^4) rows.
DepthCheck depth_integral_check(const MetricChart& chart, const BrokenRay& ray,
                                const std::function<double(double)>& F, int k = 1);

}  // namespace brt
