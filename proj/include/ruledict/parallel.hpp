#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace ruledict {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// results[i] = body(i, state) for i in [0, n). Each worker owns one state
/// built by make_state(); work is handed out one index at a time, so the
/// result vector does not depend on the thread count.
template <class MakeState, class Body>
auto parallel_map(std::size_t n, unsigned threads, MakeState make_state, Body body) {
  using State = std::invoke_result_t<MakeState&>;
  using Result = std::invoke_result_t<Body&, std::size_t, State&>;
  std::vector<Result> results(n);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n));
  if (workers <= 1) {
    State state = make_state();
    for (std::size_t i = 0; i < n; ++i) results[i] = body(i, state);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    try {
      State state = make_state();
      for (std::size_t i = next++; i < n; i = next++) results[i] = body(i, state);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = n;
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  pool.clear();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace ruledict
