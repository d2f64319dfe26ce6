#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace rssbound {

// Runs fn(i) for i in [0, n). Each index is processed exactly once and
// writes only its own output slot, so results are identical for any thread
// count. Thread count 0 means hardware concurrency.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
    if (n == 0) {
        return;
    }
    unsigned want = threads ? threads : std::thread::hardware_concurrency();
    if (want < 2 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    if (want > n) {
        want = static_cast<unsigned>(n);
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) {
                    error = std::current_exception();
                }
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(want - 1);
    for (unsigned t = 1; t < want; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    if (failed.load() && error) {
        std::rethrow_exception(error);
    }
}

}  // namespace rssbound
