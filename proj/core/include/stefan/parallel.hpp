#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stefan::parallel {

// Process-wide worker count used by every data-parallel loop.
// Results never depend on it: work is split into fixed-size chunks and
// reductions run over chunks in index order.
void set_threads(unsigned n) noexcept;
unsigned threads() noexcept;

// Half-open index range handed to a chunk body.
struct Chunk {
  std::size_t index;
  std::size_t begin;
  std::size_t end;
};

inline std::size_t chunk_count(std::size_t n_items, std::size_t chunk_size) {
  return chunk_size == 0 ? 0 : (n_items + chunk_size - 1) / chunk_size;
}

// Runs body(Chunk) for every chunk of [0, n_items). Chunk boundaries depend
// only on n_items and chunk_size.
template <class Body>
void for_each_chunk(std::size_t n_items, std::size_t chunk_size, Body&& body) {
  const std::size_t n_chunks = chunk_count(n_items, chunk_size);
  if (n_chunks == 0) return;
  auto run = [&](std::size_t c) {
    const std::size_t begin = c * chunk_size;
    body(Chunk{c, begin, std::min(n_items, begin + chunk_size)});
  };
  const std::size_t workers = std::min<std::size_t>(threads(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
      try {
        run(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// Chunked map-reduce: partial(Chunk) -> T per chunk, folded left to right.
template <class T, class Partial, class Combine>
T reduce_chunks(std::size_t n_items, std::size_t chunk_size, T init, Partial&& partial,
                Combine&& combine) {
  std::vector<T> parts(chunk_count(n_items, chunk_size), init);
  for_each_chunk(n_items, chunk_size, [&](const Chunk& c) { parts[c.index] = partial(c); });
  T acc = std::move(init);
  for (auto& p : parts) acc = combine(std::move(acc), std::move(p));
  return acc;
}

}  // namespace stefan::parallel
