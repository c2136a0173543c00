#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace prw {

// Paths per RNG chunk. Fixed: chunk boundaries are part of the reproducibility
// contract (see rng.hpp), so this must not depend on worker count.
inline constexpr uint64_t kChunkPaths = 32768;

inline uint64_t chunk_count(uint64_t n_total) {
    return (n_total + kChunkPaths - 1) / kChunkPaths;
}

inline uint64_t chunk_size(uint64_t chunk, uint64_t n_total) {
    const uint64_t lo = chunk * kChunkPaths;
    return lo >= n_total ? 0 : (n_total - lo < kChunkPaths ? n_total - lo : kChunkPaths);
}

// Evaluates fn(chunk_index) for every chunk and returns the results indexed
// by chunk. Work is stolen off an atomic counter, but since each slot is
// written by exactly one invocation the result vector is independent of the
// worker count; callers must reduce it in index order.
template <class T, class Fn>
std::vector<T> run_chunks(uint64_t n_chunks, unsigned workers, Fn&& fn) {
    std::vector<T> results(n_chunks);
    if (n_chunks == 0) return results;
    if (workers <= 1 || n_chunks == 1) {
        for (uint64_t c = 0; c < n_chunks; ++c) results[c] = fn(c);
        return results;
    }
    const unsigned n_threads =
        static_cast<unsigned>(std::min<uint64_t>(workers, n_chunks));
    std::atomic<uint64_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const uint64_t c = next.fetch_add(1);
                if (c >= n_chunks || failed.load()) return;
                try {
                    results[c] = fn(c);
                } catch (...) {
                    if (!failed.exchange(true)) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

} // namespace prw
