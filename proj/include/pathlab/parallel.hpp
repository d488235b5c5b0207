#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pathlab {

inline int thread_count() {
    if (const char* env = std::getenv("PATHLAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {
inline bool& inside_parallel_section() {
    static thread_local bool inside = false;
    return inside;
}
} // namespace detail

// Runs fn(block, begin, end) over a fixed decomposition of [0, n) into
// n_blocks contiguous blocks. Blocks are claimed by worker threads through an
// atomic counter; callers store per-block results and combine them in block
// order, which keeps every reduction independent of the thread schedule.
// Nested calls (an inner Monte Carlo loop inside an outer one) run serially
// on the worker that reached them.
inline void for_blocks(std::size_t n, std::size_t n_blocks,
                       const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (n_blocks > n) n_blocks = n;
    const int workers = std::min<int>(thread_count(), static_cast<int>(n_blocks));
    if (workers <= 1 || detail::inside_parallel_section()) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            fn(b, b * n / n_blocks, (b + 1) * n / n_blocks);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        detail::inside_parallel_section() = true;
        try {
            for (;;) {
                std::size_t b = next.fetch_add(1);
                if (b >= n_blocks) break;
                fn(b, b * n / n_blocks, (b + 1) * n / n_blocks);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n_blocks); // stop handing out blocks
        }
        detail::inside_parallel_section() = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Compensated (Kahan) accumulator; used for scheduling-independent sums.
struct Accumulator {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

} // namespace pathlab
