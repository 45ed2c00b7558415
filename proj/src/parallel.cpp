#include "blockrg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace blockrg {

void parallel_for_chunks(int n_chunks, int threads, const std::function<void(int)>& fn) {
  if (n_chunks <= 0) return;
  threads = std::max(1, std::min(threads, n_chunks));
  if (threads == 1) {
    for (int i = 0; i < n_chunks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n_chunks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

int fixed_chunks(std::uint64_t total, int max_chunks, std::vector<std::uint64_t>& bounds) {
  int n = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(max_chunks),
                                                   total ? total : 1));
  n = std::max(n, 1);
  bounds.resize(static_cast<size_t>(n) + 1);
  for (int i = 0; i <= n; ++i)
    bounds[static_cast<size_t>(i)] = total * static_cast<std::uint64_t>(i) / static_cast<std::uint64_t>(n);
  return n;
}

}  // namespace blockrg
