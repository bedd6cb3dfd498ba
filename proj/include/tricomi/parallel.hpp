#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace tricomi {

inline std::atomic<int>& thread_count_ref() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_thread_count(int n) { thread_count_ref() = std::max(1, n); }
inline int thread_count() { return thread_count_ref().load(); }

// Work is cut into chunks whose boundaries depend only on n, so per-chunk
// partial results are identical for any thread count.
inline constexpr std::size_t kChunk = 4096;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

template <class F>
void parallel_chunks(std::size_t n, F&& f) {
    std::size_t nc = chunk_count(n);
    int nt = std::min<int>(thread_count(), int(nc));
    if (nt <= 1) {
        for (std::size_t c = 0; c < nc; ++c) f(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t c = t; c < nc; c += nt) f(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        });
    }
    for (auto& th : pool) th.join();
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
    parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) f(i);
    });
}

// Sum of f(i); partials are combined in chunk order.
template <class T, class F>
T parallel_sum(std::size_t n, F&& f) {
    std::vector<T> part(chunk_count(n), T{});
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        T s{};
        for (std::size_t i = b; i < e; ++i) s += f(i);
        part[c] = s;
    });
    T s{};
    for (auto& v : part) s += v;
    return s;
}

// Max of non-negative f(i); a NaN anywhere is returned as NaN.
template <class F>
double parallel_max(std::size_t n, F&& f) {
    std::vector<double> part(chunk_count(n), 0.0);
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        double s = 0;
        for (std::size_t i = b; i < e; ++i) {
            double v = f(i);
            if (v != v) {
                s = v;
                break;
            }
            s = std::max(s, v);
        }
        part[c] = s;
    });
    double s = 0;
    for (double v : part) {
        if (v != v) return v;
        s = std::max(s, v);
    }
    return s;
}

}  // namespace tricomi
