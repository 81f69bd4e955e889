#pragma once

#include <cstddef>
#include <vector>

namespace stmod::par {

enum class Mode { serial, parallel };

// Process-wide execution mode; parallel kernels fall back to the serial
// reference when set to Mode::serial. Outputs are bit-identical either way.
Mode mode();
void set_mode(Mode m);

int thread_count();
void set_thread_count(int n);

namespace detail {
void run_indexed(std::size_t n, void* ctx, void (*body)(void*, std::size_t));
}

// Parallel loop over [0, n). The body must only write to index-owned state;
// iteration order is unspecified but the index set is exact.
template <class F>
void for_index(std::size_t n, F&& f) {
    detail::run_indexed(n, &f, [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); });
}

// Deterministic map: out[i] = f(i) regardless of mode or thread count.
template <class T, class F>
std::vector<T> map_index(std::size_t n, F&& f) {
    std::vector<T> out(n);
    for_index(n, [&](std::size_t i) { out[i] = f(i); });
    return out;
}

}  // namespace stmod::par
