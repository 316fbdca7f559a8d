// Shared small utilities: complex alias, deterministic RNG helpers,
// and a static-partition parallel_for capped by TILESCOPE_THREADS.
#pragma once

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace tfa {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Thread cap: min(hardware, TILESCOPE_THREADS if set). At least 1.
inline unsigned thread_cap() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("TILESCOPE_THREADS")) {
        long v = std::atol(env);
        if (v >= 1 && static_cast<unsigned long>(v) < hw) hw = static_cast<unsigned>(v);
    }
    return hw;
}

/// Runs fn(i) for i in [0,n). Each index is processed by exactly one
/// thread and writes only to its own outputs, so results do not depend
/// on the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const unsigned nt = thread_cap();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nt) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Reduce a vector of partial sums with a fixed pairwise tree so the
/// result is bit-stable regardless of how the partials were produced.
inline cplx pairwise_reduce(std::vector<cplx> v) {
    if (v.empty()) return {0.0, 0.0};
    std::size_t n = v.size();
    while (n > 1) {
        std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i + half < n; ++i) v[i] += v[i + half];
        n = half;
    }
    return v[0];
}

// Deterministic draws: mt19937_64 plus hand-rolled mappings, since the
// std distributions are not bit-portable across library versions.
inline double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * u01(rng);
}

inline cplx unit_phase(std::mt19937_64& rng) {
    double t = 2.0 * kPi * u01(rng);
    return {std::cos(t), std::sin(t)};
}

}  // namespace tfa
