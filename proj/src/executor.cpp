// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include "blockwise/executor.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif
#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace blockwise {

namespace {

inline void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
  _mm_pause();
#else
  std::this_thread::yield();
#endif
}

bool pin_native(std::thread::native_handle_type handle, int core) {
#if defined(__linux__)
  if (core < 0 || core >= CPU_SETSIZE) return false;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core, &set);
  return pthread_setaffinity_np(handle, sizeof(set), &set) == 0;
#else
  (void)handle;
  (void)core;
  return false;
#endif
}

void warn_pin(std::size_t participant, int core) {
  std::fprintf(stderr, "blockwise: warning: could not pin participant %zu to core %d; running unpinned\n",
               participant, core);
}

}  // namespace

bool pinning_disabled_by_env() {
  const char* v = std::getenv("BLOCKWISE_NO_PIN");
  return v != nullptr && std::strcmp(v, "1") == 0;
}

PoolOptions pool_options(const Topology& topology, PinOrder order, IdlePolicy idle) {
  PoolOptions o;
  o.participants = std::max<std::size_t>(1, topology.worker_count);
  o.idle = idle;
  if (topology.pinning && !pinning_disabled_by_env()) {
    o.pin_cores = topology.pin_plan(o.participants, order);
    o.pin_caller = true;
  }
  return o;
}

std::string strategy_name(const ChunkingStrategy& strategy) {
  switch (strategy.index()) {
    case 0: return "fixed";
    case 1: return "guided";
    default: return "cost-model";
  }
}

std::uint64_t strategy_block(const ChunkingStrategy& strategy) {
  if (auto* f = std::get_if<FixedBlock>(&strategy)) return f->block_size;
  if (auto* c = std::get_if<CostModelChoice>(&strategy)) return c->block_size;
  return 0;
}

ThreadPool::ThreadPool(std::size_t participants, IdlePolicy idle)
    : ThreadPool(PoolOptions{participants, {}, false, idle}) {}

ThreadPool::ThreadPool(PoolOptions options)
    : participants_(std::max<std::size_t>(1, options.participants)), idle_(options.idle) {
  if (pinning_disabled_by_env()) options.pin_cores.clear();
  const bool pin = options.pin_cores.size() >= participants_;

  if (pin && options.pin_caller) {
#if defined(__linux__)
    if (pin_native(pthread_self(), options.pin_cores[0]))
      ++pinned_;
    else
      warn_pin(0, options.pin_cores[0]);
#endif
  }
  threads_.reserve(participants_ - 1);
  for (std::size_t i = 1; i < participants_; ++i) {
    threads_.emplace_back([this, i] { worker_loop(i); });
    if (pin) {
      if (pin_native(threads_.back().native_handle(), options.pin_cores[i]))
        ++pinned_;
      else
        warn_pin(i, options.pin_cores[i]);
    }
  }
}

ThreadPool::~ThreadPool() { shutdown(); }

void ThreadPool::shutdown() {
  std::lock_guard lock(batch_mutex_);
  if (stopped_.exchange(true, std::memory_order_acq_rel)) return;
  generation_.fetch_add(1, std::memory_order_release);
  generation_.notify_all();
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void ThreadPool::run_body(std::size_t index) {
  try {
    (*job_)(index);
  } catch (...) {
    bool expected = false;
    if (error_set_.compare_exchange_strong(expected, true, std::memory_order_acq_rel))
      error_ = std::current_exception();
  }
}

void ThreadPool::broadcast(FunctionRef<void(std::size_t)> body) {
  std::lock_guard lock(batch_mutex_);
  if (stopped_.load(std::memory_order_acquire)) throw UsageError("broadcast on a pool that was shut down");

  job_ = &body;
  error_ = nullptr;
  error_set_.store(false, std::memory_order_relaxed);
  pending_.store(participants_ - 1, std::memory_order_relaxed);
  generation_.fetch_add(1, std::memory_order_release);
  if (idle_ == IdlePolicy::kBlock) generation_.notify_all();

  run_body(0);

  for (;;) {
    std::size_t left = pending_.load(std::memory_order_acquire);
    if (left == 0) break;
    if (idle_ == IdlePolicy::kBlock)
      pending_.wait(left, std::memory_order_acquire);
    else
      cpu_relax();
  }
  job_ = nullptr;
  if (error_set_.load(std::memory_order_acquire)) std::rethrow_exception(error_);
}

void ThreadPool::worker_loop(std::size_t index) {
  std::uint64_t seen = 0;
  for (;;) {
    std::uint64_t now = generation_.load(std::memory_order_acquire);
    while (now == seen) {
      if (idle_ == IdlePolicy::kBlock)
        generation_.wait(seen, std::memory_order_acquire);
      else
        cpu_relax();
      now = generation_.load(std::memory_order_acquire);
    }
    seen = now;
    if (stopped_.load(std::memory_order_acquire)) return;

    run_body(index);

    if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1 && idle_ == IdlePolicy::kBlock)
      pending_.notify_all();
  }
}

}  // namespace blockwise
