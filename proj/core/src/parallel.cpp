#include "corgs/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace corgs {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) {
    g_threads.store(std::max(1, n));
}

int num_threads() {
    return g_threads.load();
}

void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), n_tasks);
    if (workers <= 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) {
            fn(t);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        try {
            for (std::size_t t = next.fetch_add(1); t < n_tasks; t = next.fetch_add(1)) {
                fn(t);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) {
                error = std::current_exception();
            }
            next.store(n_tasks);
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace corgs
