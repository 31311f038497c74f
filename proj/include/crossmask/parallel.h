// Ordered parallel map: results land at the index of their input, so output
// order never depends on scheduling.

#ifndef CROSSMASK_PARALLEL_H_
#define CROSSMASK_PARALLEL_H_

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace crossmask {

// Calls fn(i) for i in [0, n) across `workers` threads (contiguous slices)
// and stores the result at out[i]. The first exception thrown by any worker
// is rethrown on the calling thread.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(size_t n, size_t workers, Fn&& fn) {
  std::vector<Result> out(n);
  workers = std::max<size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          for (size_t i = begin; i < end; ++i) out[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace crossmask

#endif  // CROSSMASK_PARALLEL_H_
