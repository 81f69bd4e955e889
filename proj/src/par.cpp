#include "stmod/par.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stmod::par {

namespace {
std::atomic<Mode> g_mode{Mode::parallel};
std::atomic<int> g_threads{0};  // 0 = library default

Mode initial_mode() {
    if (const char* e = std::getenv("STMOD_SERIAL"); e && e[0] == '1') return Mode::serial;
    return Mode::parallel;
}
struct Init {
    Init() { g_mode.store(initial_mode()); }
} g_init;
}  // namespace

Mode mode() { return g_mode.load(); }
void set_mode(Mode m) { g_mode.store(m); }

int thread_count() {
#ifdef _OPENMP
    int n = g_threads.load();
    return n > 0 ? n : omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_count(int n) { g_threads.store(n); }

namespace detail {

void run_indexed(std::size_t n, void* ctx, void (*body)(void*, std::size_t)) {
#ifdef _OPENMP
    if (mode() == Mode::parallel && n > 1) {
        const int nt = thread_count();
#pragma omp parallel for schedule(static) num_threads(nt)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(ctx, static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace detail
}  // namespace stmod::par
