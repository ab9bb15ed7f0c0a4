#include "ompn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ompn {

namespace {

std::atomic<int> g_max_threads{0};

int hardware_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
  const int cap = g_max_threads.load();
  const int hw = hardware_threads();
  if (cap <= 0) return hw;
  return std::min(cap, hw) < 1 ? 1 : std::min(cap, hw);
}

namespace detail {

void parallel_for_impl(std::size_t begin, std::size_t end, std::size_t grain,
                       RangeFn fn, void* ctx) {
  if (begin >= end) return;
  if (grain == 0) grain = 1;
  const std::size_t total = end - begin;
  const int budget = max_threads();
  const std::size_t nblocks = (total + grain - 1) / grain;
  const int workers =
      static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(budget), nblocks));

  if (workers <= 1) {
    fn(begin, end, ctx);
    return;
  }

  // Workers pull contiguous blocks off a shared counter.  Block boundaries
  // depend only on `grain`, never on the worker count, so any index-addressed
  // output is identical for every thread budget.
  std::atomic<std::size_t> next_block{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto body = [&]() {
    for (;;) {
      const std::size_t b = next_block.fetch_add(1);
      if (b >= nblocks) return;
      const std::size_t lo = begin + b * grain;
      const std::size_t hi = std::min(end, lo + grain);
      try {
        fn(lo, hi, ctx);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

}  // namespace ompn
