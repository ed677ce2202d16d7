#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace infbound {

//! Worker count from INFBOUND_WORKERS, else the hardware concurrency.
inline int default_worker_count()
{
    if (const char* env = std::getenv("INFBOUND_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w > 0)
                return w;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Calls body(i) for i in [0, count), split into contiguous blocks.
 * body must only write to slots owned by i; the first exception is rethrown.
 */
template <typename Body>
void parallel_for(std::size_t count, int workers, Body&& body)
{
    const std::size_t w = std::min<std::size_t>(std::max(1, workers), count);
    if (w <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = count * t / w;
        const std::size_t end = count * (t + 1) / w;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i)
                    body(i);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace infbound
