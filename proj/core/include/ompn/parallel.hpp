#pragma once

#include <cstddef>

namespace ompn {

/// Sets the process-wide upper bound on worker threads (0 restores the
/// hardware default).  Thread count never affects results anywhere in the
/// library; it only affects wall time.
void set_max_threads(int n);

/// Current effective thread budget (>= 1).
int max_threads();

namespace detail {

using RangeFn = void (*)(std::size_t, std::size_t, void*);

void parallel_for_impl(std::size_t begin, std::size_t end, std::size_t grain,
                       RangeFn fn, void* ctx);

}  // namespace detail

/// Runs fn(index) for every index in [begin, end), splitting the range into
/// contiguous blocks of at most `grain` indices that are distributed over the
/// thread budget.  Callers must make writes index-addressed so that results
/// are independent of scheduling order.
template <class F>
void parallel_for(std::size_t begin, std::size_t end, std::size_t grain, F&& f) {
  auto thunk = [](std::size_t b, std::size_t e, void* ctx) {
    auto& fn = *static_cast<F*>(ctx);
    for (std::size_t i = b; i < e; ++i) fn(i);
  };
  detail::parallel_for_impl(begin, end, grain, thunk, &f);
}

}  // namespace ompn
