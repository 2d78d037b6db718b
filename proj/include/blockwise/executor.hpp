// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

// Thread pool and the chunked parallel_for.
//
// Every participant runs the same claim loop: take a block of iterations from
// a shared counter, run them, repeat until the counter passes N. The caller
// is participant 0, so a pool built for T participants owns T - 1 threads.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "blockwise/config.hpp"
#include "blockwise/errors.hpp"

namespace blockwise {

inline constexpr std::size_t kCacheLine = 64;

enum class IdlePolicy {
  kBlock,  // park on a futex between batches
  kSpin,   // busy-wait; lower wake latency, burns a core per worker
};

struct PoolOptions {
  std::size_t participants = 1;
  /// Core per participant (index 0 is the caller). Empty disables pinning.
  std::vector<int> pin_cores;
  /// Also pin the constructing thread to pin_cores[0].
  bool pin_caller = false;
  IdlePolicy idle = IdlePolicy::kBlock;
};

/// Options for `topology.worker_count` participants pinned per
/// topology.pin_plan(). Pinning is skipped when topology.pinning is false or
/// BLOCKWISE_NO_PIN=1 is set.
PoolOptions pool_options(const Topology& topology, PinOrder order = PinOrder::kCompact,
                         IdlePolicy idle = IdlePolicy::kBlock);

/// True when BLOCKWISE_NO_PIN=1.
bool pinning_disabled_by_env();

/// Non-owning callable reference.
template <typename Signature>
class FunctionRef;

template <typename R, typename... Args>
class FunctionRef<R(Args...)> {
 public:
  template <typename F>
    requires(!std::is_same_v<std::remove_cvref_t<F>, FunctionRef>)
  FunctionRef(F& f)  // NOLINT(google-explicit-constructor)
      : object_(static_cast<void*>(std::addressof(f))),
        call_([](void* o, Args... args) -> R {
          return (*static_cast<F*>(o))(std::forward<Args>(args)...);
        }) {}

  R operator()(Args... args) const { return call_(object_, std::forward<Args>(args)...); }

 private:
  void* object_;
  R (*call_)(void*, Args...);
};

class ThreadPool {
 public:
  explicit ThreadPool(std::size_t participants, IdlePolicy idle = IdlePolicy::kBlock);
  explicit ThreadPool(PoolOptions options);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t participants() const { return participants_; }
  IdlePolicy idle_policy() const { return idle_; }
  bool running() const { return !stopped_.load(std::memory_order_acquire); }
  /// Threads (caller included) whose affinity was set successfully.
  std::size_t pinned_count() const { return pinned_; }

  /// Runs body(participant) once on every participant and returns when all
  /// have finished. Batches on one pool are serialized. The first exception
  /// thrown by any participant is rethrown here after the others finish.
  void broadcast(FunctionRef<void(std::size_t)> body);

  /// Joins the workers. Further broadcasts throw UsageError. Idempotent.
  void shutdown();

 private:
  void worker_loop(std::size_t index);
  void run_body(std::size_t index);

  std::size_t participants_;
  IdlePolicy idle_;
  std::size_t pinned_ = 0;
  std::vector<std::thread> threads_;

  std::mutex batch_mutex_;
  FunctionRef<void(std::size_t)>* job_ = nullptr;
  std::exception_ptr error_;
  std::atomic<bool> error_set_{false};

  alignas(kCacheLine) std::atomic<std::uint64_t> generation_{0};
  alignas(kCacheLine) std::atomic<std::size_t> pending_{0};
  alignas(kCacheLine) std::atomic<bool> stopped_{false};
};

/// Shared claim counter. Fetch-and-add is the only way fixed-size claims
/// advance it; guided claims use compare-exchange so each chunk is sized
/// from the exact remainder it is carved from.
class alignas(kCacheLine) ClaimCounter {
 public:
  ClaimCounter() = default;
  explicit ClaimCounter(std::uint64_t start) : value_(start) {}

  /// Returns the previous value and advances by `block`.
  std::uint64_t claim(std::uint64_t block) {
    return value_.fetch_add(block, std::memory_order_relaxed);
  }

  /// Advances from `expected` to `expected + block`; on failure `expected`
  /// receives the current value.
  bool try_claim(std::uint64_t& expected, std::uint64_t block) {
    return value_.compare_exchange_weak(expected, expected + block, std::memory_order_relaxed,
                                        std::memory_order_relaxed);
  }

  std::uint64_t load() const { return value_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> value_{0};
};

inline std::uint64_t claim(ClaimCounter& counter, std::uint64_t block) {
  return counter.claim(block);
}

/// Guided chunk: 0 when nothing remains, 1 once fewer than 4*T iterations
/// remain, otherwise floor(remaining * 0.5 / T) (at least 1).
constexpr std::uint64_t next_chunk_guided(std::uint64_t remaining, std::size_t participants) {
  if (remaining == 0) return 0;
  const std::uint64_t t = participants == 0 ? 1 : participants;
  if (remaining < 4 * t) return 1;
  return std::max<std::uint64_t>(1, remaining / (2 * t));
}

struct FixedBlock {
  std::uint64_t block_size = 1;
};

struct Guided {
  /// Divisor T; 0 means the pool's participant count.
  std::size_t participants = 0;
};

/// A block size picked by the cost model; clamped to [1, N] at run time.
struct CostModelChoice {
  std::uint64_t block_size = 1;
};

using ChunkingStrategy = std::variant<FixedBlock, Guided, CostModelChoice>;

/// "fixed", "guided" or "cost-model".
std::string strategy_name(const ChunkingStrategy& strategy);

/// Fixed block size for the strategy (0 for guided).
std::uint64_t strategy_block(const ChunkingStrategy& strategy);

struct Chunk {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::size_t participant = 0;
};

struct RunStats {
  std::uint64_t successful_claims = 0;
  std::uint64_t terminal_claims = 0;
  std::vector<std::uint64_t> per_participant;  // iterations run by each participant
  std::int64_t elapsed_ns = 0;
  std::vector<Chunk> chunks;  // sorted by begin; only with RunOptions::record_chunks

  std::uint64_t iterations() const {
    std::uint64_t n = 0;
    for (auto c : per_participant) n += c;
    return n;
  }
};

struct RunOptions {
  bool record_chunks = false;
};

namespace detail {

struct alignas(kCacheLine) ParticipantTally {
  std::uint64_t successful = 0;
  std::uint64_t terminal = 0;
  std::uint64_t iterations = 0;
  std::vector<Chunk> chunks;
};

struct FailureSlot {
  std::atomic<bool> failed{false};
  std::exception_ptr error;

  void record(std::exception_ptr e) {
    bool expected = false;
    if (failed.compare_exchange_strong(expected, true, std::memory_order_acq_rel)) error = e;
  }
  bool is_set() const { return failed.load(std::memory_order_relaxed); }
};

template <typename Task>
void run_chunk(Task& task, std::uint64_t begin, std::uint64_t end, FailureSlot& failure) {
  if (failure.is_set()) return;
  try {
    for (std::uint64_t i = begin; i < end; ++i) task(i);
  } catch (...) {
    failure.record(std::current_exception());
  }
}

}  // namespace detail

/// Calls task(i) exactly once for every i in [0, n) and returns after every
/// call has completed. If a task throws, the remaining chunks are still
/// claimed but not run, and the first exception is rethrown once all
/// participants are idle.
template <typename Task>
RunStats parallel_for(ThreadPool& pool, std::uint64_t n, const ChunkingStrategy& strategy,
                      Task&& task, RunOptions options = {}) {
  if (!pool.running()) throw UsageError("parallel_for on a pool that was shut down");
  const std::size_t p = pool.participants();

  ClaimCounter counter;
  std::vector<detail::ParticipantTally> tally(p);
  detail::FailureSlot failure;

  const bool guided = std::holds_alternative<Guided>(strategy);
  const std::size_t guided_t = guided && std::get<Guided>(strategy).participants != 0
                                   ? std::get<Guided>(strategy).participants
                                   : p;
  // Blocks larger than N claim the same single chunk; clamping keeps the
  // counter's overshoot (at most P blocks past N) far from wrapping.
  const std::uint64_t block =
      std::clamp<std::uint64_t>(strategy_block(strategy), 1, std::max<std::uint64_t>(n, 1));

  auto record = [&](detail::ParticipantTally& mine, std::uint64_t begin, std::uint64_t end,
                    std::size_t who) {
    ++mine.successful;
    mine.iterations += end - begin;
    if (options.record_chunks) mine.chunks.push_back(Chunk{begin, end, who});
  };

  auto thread_task = [&](std::size_t who) {
    auto& mine = tally[who];
    if (guided) {
      std::uint64_t begin = counter.load();
      for (;;) {
        if (begin >= n) {
          ++mine.terminal;
          break;
        }
        const std::uint64_t chunk = next_chunk_guided(n - begin, guided_t);
        if (!counter.try_claim(begin, chunk)) continue;
        record(mine, begin, begin + chunk, who);
        detail::run_chunk(task, begin, begin + chunk, failure);
        begin = counter.load();
      }
    } else {
      std::uint64_t begin;
      while ((begin = counter.claim(block)) < n) {
        const std::uint64_t end = std::min(n, begin + block);
        record(mine, begin, end, who);
        detail::run_chunk(task, begin, end, failure);
      }
      ++mine.terminal;
    }
  };

  const auto start = std::chrono::steady_clock::now();
  pool.broadcast(thread_task);
  const auto stop = std::chrono::steady_clock::now();

  RunStats stats;
  stats.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
  stats.per_participant.reserve(p);
  for (auto& t : tally) {
    stats.successful_claims += t.successful;
    stats.terminal_claims += t.terminal;
    stats.per_participant.push_back(t.iterations);
    if (options.record_chunks)
      stats.chunks.insert(stats.chunks.end(), t.chunks.begin(), t.chunks.end());
  }
  if (options.record_chunks)
    std::sort(stats.chunks.begin(), stats.chunks.end(),
              [](const Chunk& a, const Chunk& b) { return a.begin < b.begin; });
  if (failure.is_set()) std::rethrow_exception(failure.error);
  return stats;
}

}  // namespace blockwise
