#include "kpzlab/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kpzlab {

namespace {
std::atomic<unsigned> g_threads{0};

unsigned default_threads() {
    if (const char* env = std::getenv("LAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return unsigned(v);
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}
}  // namespace

unsigned worker_threads() {
    unsigned t = g_threads.load();
    return t ? t : default_threads();
}

void set_worker_threads(unsigned n) { g_threads.store(n); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const unsigned workers = std::min<std::size_t>(worker_threads(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex m;
    std::size_t failed_index = count;
    std::exception_ptr failure;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace kpzlab
