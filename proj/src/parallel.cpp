#include "hinf/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace hinf {

std::size_t resolve_threads(std::size_t n) {
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    constexpr std::size_t kMinChunk = 16;
    const std::size_t workers = std::min(resolve_threads(threads), (count + kMinChunk - 1) / kMinChunk);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::size_t> errorIndex(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                    errorIndex[w] = i;
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    // Chunks are ordered, so the first failing worker holds the lowest index.
    for (std::size_t w = 0; w < workers; ++w)
        if (errors[w]) std::rethrow_exception(errors[w]);
}

} // namespace hinf
