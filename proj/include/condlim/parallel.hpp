#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace condlim {

// Runs body(block) for block in [0, blocks) on up to `workers` threads.
// Callers write into per-block slots and merge in block order, so results do
// not depend on the worker count.
template <typename Body>
void parallel_blocks(std::int64_t blocks, int workers, Body&& body) {
  workers = std::max(1, workers);
  if (workers == 1 || blocks <= 1) {
    for (std::int64_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  int used = static_cast<int>(std::min<std::int64_t>(workers, blocks));
  for (int w = 0; w < used; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t b = next++; b < blocks; b = next++) body(b);
    });
  }
  for (auto& th : pool) th.join();
}

int default_workers();

}  // namespace condlim
