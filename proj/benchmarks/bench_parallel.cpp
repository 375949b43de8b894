// Times the glancing-family tracer with the parallel map on and off.  The
// two runs must agree bit for bit (slot-per-index writes); the table shows
// what the dynamic schedule buys on an uneven eps grid.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "brtlab/parallel.hpp"
#include "brtlab/reconstruction.hpp"

using namespace brt;

namespace {

double time_family(const MetricChart& chart, const BoundaryGeodesic& sigma,
                   const std::vector<double>& eps, ExecMode mode, GlancingFamily& out) {
    set_exec_mode(mode);
    auto t0 = std::chrono::steady_clock::now();
    out = launch_glancing(chart, sigma, eps);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool identical(const GlancingFamily& a, const GlancingFamily& b) {
    if (a.members.size() != b.members.size()) return false;
    for (std::size_t m = 0; m < a.members.size(); ++m) {
        const auto& ra = a.members[m].ray;
        const auto& rb = b.members[m].ray;
        if (ra.samples.size() != rb.samples.size()) return false;
        for (std::size_t i = 0; i < ra.samples.size(); ++i) {
            if (ra.samples[i].t != rb.samples[i].t) return false;
            if (ra.samples[i].x.x0 != rb.samples[i].x.x0) return false;
            if (ra.samples[i].x.xb != rb.samples[i].x.xb) return false;
            if (ra.samples[i].v.v0 != rb.samples[i].v.v0) return false;
            if (ra.samples[i].v.vb != rb.samples[i].v.vb) return false;
        }
    }
    return true;
}

}  // namespace

int main() {
    MetricChart band = band_chart(Expr::parse("1+0.5*cos(x1)"));
    BoundaryGeodesic sigma = integrate_boundary_geodesic(band, {M_PI / 2, 0.0}, {1.0, 0.0}, M_PI);

    std::printf("%8s %6s %10s %10s %8s %6s\n", "members", "eps", "serial[s]", "parallel", "speedup",
                "match");
    bool all_match = true;
    for (int count : {4, 7, 9}) {
        std::vector<double> eps = halving_epsilons(1.0 / 16, count);
        GlancingFamily fs, fp;
        double ts = time_family(band, sigma, eps, ExecMode::serial, fs);
        double tp = time_family(band, sigma, eps, ExecMode::parallel, fp);
        bool match = identical(fs, fp);
        all_match = all_match && match;
        std::printf("%8d 2^%-4.0f %10.3f %10.3f %7.2fx %6s\n", count, std::log2(eps.back()), ts,
                    tp, ts / tp, match ? "yes" : "NO");
    }
    set_exec_mode(ExecMode::parallel);
    if (!all_match) {
        std::printf("serial and parallel runs disagree\n");
        return 1;
    }
    return 0;
}
