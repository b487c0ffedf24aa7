#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lne {

namespace detail {

inline std::size_t threads_from_env() {
  if (const char* env = std::getenv("LIGHTNE_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> n{threads_from_env()};
  return n;
}

}  // namespace detail

/// Worker count used by every parallel loop in the library.
inline std::size_t num_workers() { return detail::thread_setting().load(); }

/// Overrides the worker count; 0 restores the LIGHTNE_THREADS / hardware default.
inline void set_num_workers(std::size_t n) {
  detail::thread_setting().store(n == 0 ? detail::threads_from_env() : n);
}

/// Runs fn(i) for every i in [begin, end). Work is handed out in chunks of
/// `grain` indices from a shared counter. The first exception thrown by any
/// worker stops further chunks and is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, std::size_t grain = 1024) {
  if (end <= begin) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t total = end - begin;
  const std::size_t chunks = (total + grain - 1) / grain;
  const std::size_t workers = std::min(num_workers(), chunks);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= chunks) return;
      std::size_t lo = begin + c * grain;
      std::size_t hi = std::min(end, lo + grain);
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// Calls fn(chunk_index, lo, hi) over fixed-size chunks. Chunk boundaries
/// depend only on `chunk` so per-chunk partial results can be combined in
/// index order for thread-count-independent reductions.
template <typename Fn>
void parallel_chunks(std::size_t begin, std::size_t end, std::size_t chunk, Fn&& fn) {
  if (end <= begin) return;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t chunks = (end - begin + chunk - 1) / chunk;
  parallel_for(
      0, chunks,
      [&](std::size_t c) {
        std::size_t lo = begin + c * chunk;
        fn(c, lo, std::min(end, lo + chunk));
      },
      1);
}

/// Number of chunks parallel_chunks will produce.
inline std::size_t chunk_count(std::size_t size, std::size_t chunk) {
  return chunk == 0 ? 0 : (size + chunk - 1) / chunk;
}

}  // namespace lne
