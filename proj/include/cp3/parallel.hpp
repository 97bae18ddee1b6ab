#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace cp3 {

// Resolves a thread count: explicit request > CP3_THREADS env var > hardware.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CP3_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(begin, end) over [0, n) split into at most `threads` contiguous
// chunks. The partition depends only on n and threads, never on timing, so
// any per-chunk state seeded by index stays reproducible. Exceptions from
// workers are rethrown on the calling thread (first chunk wins).
template <typename Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn) {
  if (n <= 0) return;
  threads = std::max(1, threads);
  const std::int64_t chunks = std::min<std::int64_t>(threads, n);
  if (chunks == 1) {
    fn(std::int64_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(chunks));
  const std::int64_t base = n / chunks, rem = n % chunks;
  std::int64_t begin = 0;
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t len = base + (c < rem ? 1 : 0);
    const std::int64_t end = begin + len;
    pool.emplace_back([&fn, &errors, c, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cp3
