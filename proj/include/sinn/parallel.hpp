#ifndef SINN_PARALLEL_HPP
#define SINN_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace sinn {

// Worker-thread count for trajectory-level parallelism. 0 or 1 = serial.
// Every parallel_for call site writes disjoint per-index state, so results
// are independent of the thread count.
inline int& thread_count() {
    static int n = 0;
    return n;
}

inline void set_threads(int n) { thread_count() = n < 0 ? 0 : n; }

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int threads = thread_count();
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t chunk = std::max<std::size_t>(1, n / (static_cast<std::size_t>(threads) * 8));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const std::size_t end = std::min(begin + chunk, n);
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

} // namespace sinn

#endif
