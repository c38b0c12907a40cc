#pragma once

#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace artic {

// Error taxonomy. The CLI maps these onto exit codes:
// config/input/dimension -> 2, divergence -> 3, I/O -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInputError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DegenerateError : Error {
  using Error::Error;
};
struct NoDepthError : Error {
  using Error::Error;
};
struct InsufficientDepthError : Error {
  using Error::Error;
};
struct VisibilityError : Error {
  using Error::Error;
};
struct DivergenceError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// Splits [0, n) into contiguous chunks, one worker thread per chunk.
// Workers must write to disjoint state; any cross-chunk reduction has to
// happen after the join, in chunk-index order, or determinism is lost.
template <typename Fn>
void parallel_chunks(int n, int num_workers, Fn&& fn) {
  if (n <= 0) return;
  int workers = num_workers > 0 ? num_workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > n) workers = n;
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = begin + chunk < n ? begin + chunk : n;
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace artic
