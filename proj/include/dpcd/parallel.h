#ifndef DPCD_PARALLEL_H_
#define DPCD_PARALLEL_H_

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "dpcd/frame.h"

namespace dpcd {

// Runs fn(i) for i in [0, n) over contiguous static chunks. Each index must
// write only its own output slot, which keeps results independent of the
// thread count. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  const Index workers = std::clamp<Index>(threads, 1, std::max<Index>(n, 1));
  if (workers == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) {
      const Index begin = n * w / workers;
      const Index end = n * (w + 1) / workers;
      pool.emplace_back([&, w, begin, end] {
        try {
          for (Index i = begin; i < end; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dpcd

#endif  // DPCD_PARALLEL_H_
