#include "brtlab/parallel.hpp"

#include <atomic>

namespace brt {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::parallel};
}

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }
void set_exec_mode(ExecMode m) { g_mode.store(m, std::memory_order_relaxed); }

void detail::parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t),
                               ExecMode mode) {
#ifdef BRT_HAVE_OPENMP
    if (mode == ExecMode::parallel && n > 1) {
        // dynamic schedule: members at the small end of an eps grid cost far
        // more than the large end; slot-per-index writes keep output
        // independent of the schedule
#pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(ctx, static_cast<std::size_t>(i));
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace brt
