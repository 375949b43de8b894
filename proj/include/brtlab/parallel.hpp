#pragma once

#include <cstddef>
#include <type_traits>

namespace brt {

// Parallelism is a pure map over independent work items (family members,
// lambda grids); every item writes only its own slot, so serial and parallel
// runs are bit-identical.  The serial path is kept as the reference
// implementation for tests and benchmarking.
enum class ExecMode { serial, parallel };

ExecMode exec_mode();
void set_exec_mode(ExecMode m);

namespace detail {
void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t), ExecMode mode);
}

template <typename F>
void parallel_for(std::size_t n, F&& body, ExecMode mode) {
    using Fn = std::remove_reference_t<F>;
    detail::parallel_for_impl(
        n, &body, [](void* ctx, std::size_t i) { (*static_cast<Fn*>(ctx))(i); }, mode);
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
    parallel_for(n, body, exec_mode());
}

}  // namespace brt
