#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace amliq {

// Chunked parallel_for over [begin, end). jobs <= 1 runs inline (the common
// case on small machines); otherwise spawns jobs-1 helper threads. The first
// exception thrown by any chunk is rethrown on the caller.
inline void parallel_for(int begin, int end, int jobs,
                         const std::function<void(int)>& body) {
    const int n = end - begin;
    if (n <= 0) return;
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int k = begin; k < end; ++k) body(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<size_t>(jobs));
    auto run = [&](int worker) {
        try {
            for (int k = begin + worker; k < end; k += jobs) body(k);
        } catch (...) {
            errs[static_cast<size_t>(worker)] = std::current_exception();
        }
    };
    pool.reserve(static_cast<size_t>(jobs) - 1);
    for (int w = 1; w < jobs; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

inline int default_jobs() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace amliq
