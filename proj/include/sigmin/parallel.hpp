#ifndef SIGMIN_PARALLEL_HPP
#define SIGMIN_PARALLEL_HPP

#include <cstddef>
#include <thread>
#include <vector>

namespace sigmin {

inline int resolve_threads(int requested) {
  return requested < 1 ? 1 : requested;
}

// Runs body(begin, end) over contiguous partitions of [0, count).
// Partition boundaries depend only on count and threads, never on timing,
// so any row-independent body is deterministic for a fixed thread count.
template <class F>
void parallel_for_blocks(std::size_t count, int threads, F&& body) {
  threads = resolve_threads(threads);
  if (threads == 1 || count < 2) {
    if (count > 0) body(static_cast<std::size_t>(0), count);
    return;
  }
  std::size_t nt = static_cast<std::size_t>(threads);
  if (nt > count) nt = count;
  std::size_t chunk = count / nt;
  std::size_t rem = count % nt;
  std::vector<std::thread> workers;
  workers.reserve(nt - 1);
  std::size_t begin = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t len = chunk + (t < rem ? 1 : 0);
    std::size_t end = begin + len;
    if (t + 1 == nt) {
      body(begin, end);
    } else {
      workers.emplace_back([&body, begin, end] { body(begin, end); });
    }
    begin = end;
  }
  for (auto& w : workers) w.join();
}

}  // namespace sigmin

#endif
