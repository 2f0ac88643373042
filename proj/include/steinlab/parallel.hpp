#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace steinlab {

namespace detail {
inline std::atomic<unsigned>& worker_count_storage() {
  static std::atomic<unsigned> count{1};
  return count;
}
}  // namespace detail

/// Number of workers used by `parallel_for`. Defaults to 1.
inline unsigned worker_count() { return detail::worker_count_storage().load(); }
inline void set_worker_count(unsigned n) { detail::worker_count_storage().store(std::max(1u, n)); }

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// only affect which thread computes an index, never the result for it.
/// The first exception (by chunk order) is rethrown after all workers join.
template <class Body>
void parallel_for(std::ptrdiff_t n, Body&& body, unsigned workers = worker_count()) {
  if (n <= 0) return;
  const auto chunks = static_cast<std::ptrdiff_t>(std::min<std::ptrdiff_t>(std::max(1u, workers), n));
  if (chunks == 1) {
    body(std::ptrdiff_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(chunks - 1));
  auto run = [&](std::ptrdiff_t c) {
    const std::ptrdiff_t begin = n * c / chunks;
    const std::ptrdiff_t end = n * (c + 1) / chunks;
    try {
      body(begin, end);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  for (std::ptrdiff_t c = 1; c < chunks; ++c) threads.emplace_back(run, c);
  run(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace steinlab
