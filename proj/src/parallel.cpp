#include "blowup/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace blowup {

namespace {
std::atomic<int> g_threads{0};
}

int default_threads() {
    if (const char* env = std::getenv("BLOWUP_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (const std::exception&) {
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_threads(int n) { g_threads = n; }

int threads() {
    int t = g_threads.load();
    return t >= 1 ? t : default_threads();
}

void parallel_for(size_t count, const std::function<void(size_t)>& body, int nthreads) {
    if (count == 0) return;
    int nt = nthreads >= 1 ? nthreads : threads();
    nt = static_cast<int>(std::min<size_t>(static_cast<size_t>(nt), count));
    std::vector<std::exception_ptr> errors(count);
    if (nt <= 1) {
        for (size_t i = 0; i < count; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t)
            pool.emplace_back([&] {
                for (size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace blowup
