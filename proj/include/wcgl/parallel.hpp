#pragma once
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wcgl {

// Runs body(i) for i in [0, n) on `threads` workers. Each index writes only
// its own output slot, and callers reduce sequentially afterwards, so results
// are independent of the worker count and of scheduling. Exceptions are
// captured and the first one rethrown on the calling thread.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
    if (n == 0) return;
    if (threads < 1) threads = 1;
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (nw == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace wcgl
