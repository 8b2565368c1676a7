#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace leglab {

inline int default_jobs()
{
    return int(std::max(1u, std::thread::hardware_concurrency()));
}

// fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first exception.
template <typename F>
void parallel_for(long n, int jobs, F&& fn)
{
    const int nthreads = int(std::max<long>(1, std::min<long>(jobs, n)));
    if (nthreads == 1) {
        for (long i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto work = [&] {
        for (long i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!err)
                    err = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 1; k < nthreads; ++k)
        pool.emplace_back(work);
    work();
    for (auto& th : pool)
        th.join();
    if (err)
        std::rethrow_exception(err);
}

}  // namespace leglab
