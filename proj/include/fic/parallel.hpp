#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fic {

// Runs fn(chunk_index, begin, end) over [0, total) in fixed-size chunks.
// Chunk boundaries depend only on (total, chunk_size), never on the thread
// count, so callers that combine per-chunk outputs in chunk-index order get
// identical results for 1 or N threads.
template <typename Fn>
inline void for_each_chunk(std::int64_t total, std::int64_t chunk_size, int threads, Fn&& fn) {
  if (total <= 0) return;
  if (chunk_size <= 0) chunk_size = total;
  const std::int64_t n_chunks = (total + chunk_size - 1) / chunk_size;
  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t b = c * chunk_size;
    fn(c, b, std::min(total, b + chunk_size));
  };
  if (threads <= 1 || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const int n_workers = static_cast<int>(std::min<std::int64_t>(threads, n_chunks));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::int64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) run_chunk(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_chunks);
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Running mean / standard-error accumulator. merge() in chunk-index order is
// the contract that keeps reductions independent of the execution schedule.
struct MomentAccumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t count = 0;

  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++count;
  }
  void merge(const MomentAccumulator& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    count += o.count;
  }
  double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
  double variance() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double v = (sumsq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1);
    return v > 0.0 ? v : 0.0;
  }
  double se_of_mean() const {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

inline constexpr std::int64_t kDefaultChunk = 4096;

}  // namespace fic
