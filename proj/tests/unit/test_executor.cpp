// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <stdexcept>
#include <thread>

#include "blockwise/executor.hpp"

namespace blockwise {
namespace {

std::vector<ChunkingStrategy> all_strategies(std::uint64_t block) {
  return {FixedBlock{block}, Guided{}, CostModelChoice{block}};
}

TEST(Claim, FreshCounter) {
  ClaimCounter c;
  EXPECT_EQ(claim(c, 4), 0u);
  EXPECT_EQ(c.load(), 4u);
}

TEST(Claim, TwoConcurrentClaims) {
  for (int trial = 0; trial < 200; ++trial) {
    ClaimCounter c;
    std::uint64_t a = 0, b = 0;
    std::thread t1([&] { a = claim(c, 3); });
    std::thread t2([&] { b = claim(c, 3); });
    t1.join();
    t2.join();
    EXPECT_EQ(std::min(a, b), 0u);
    EXPECT_EQ(std::max(a, b), 3u);
    EXPECT_EQ(c.load(), 6u);
  }
}

TEST(Claim, EndClampedByCaller) {
  ClaimCounter c(9);
  EXPECT_EQ(claim(c, 5), 9u);
  EXPECT_EQ(std::min<std::uint64_t>(10, 9 + 5), 10u);
}

TEST(GuidedChunk, Examples) {
  EXPECT_EQ(next_chunk_guided(1000, 8), 62u);
  EXPECT_EQ(next_chunk_guided(31, 8), 1u);
  EXPECT_EQ(next_chunk_guided(0, 8), 0u);
  EXPECT_EQ(next_chunk_guided(32, 8), 2u);
  static_assert(next_chunk_guided(1000, 8) == 62);
}

TEST(GuidedChunk, NeverExceedsRemaining) {
  for (std::uint64_t t = 1; t <= 64; ++t)
    for (std::uint64_t r = 0; r <= 5000; ++r) {
      const auto c = next_chunk_guided(r, t);
      ASSERT_LE(c, r);
      if (r > 0) ASSERT_GE(c, 1u);
    }
}

TEST(ParallelFor, EmptyRange) {
  ThreadPool pool(3);
  for (const auto& s : all_strategies(4)) {
    std::atomic<int> calls{0};
    RunStats st = parallel_for(pool, 0, s, [&](std::uint64_t) { ++calls; });
    EXPECT_EQ(calls.load(), 0);
    EXPECT_EQ(st.successful_claims, 0u);
    EXPECT_EQ(st.terminal_claims, 3u);
  }
}

TEST(ParallelFor, TenByThreeSingleParticipant) {
  ThreadPool pool(1);
  RunStats st = parallel_for(pool, 10, FixedBlock{3}, [](std::uint64_t) {}, {.record_chunks = true});
  EXPECT_EQ(st.successful_claims, 4u);
  EXPECT_EQ(st.terminal_claims, 1u);
  ASSERT_EQ(st.chunks.size(), 4u);
  const std::uint64_t expect[4][2] = {{0, 3}, {3, 6}, {6, 9}, {9, 10}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(st.chunks[i].begin, expect[i][0]);
    EXPECT_EQ(st.chunks[i].end, expect[i][1]);
  }
}

TEST(ParallelFor, OneBlockCoversEverything) {
  ThreadPool pool(8);
  RunStats st = parallel_for(pool, 1024, FixedBlock{1024}, [](std::uint64_t) {});
  EXPECT_EQ(st.successful_claims, 1u);
  EXPECT_EQ(st.terminal_claims, 8u);
  EXPECT_EQ(std::count(st.per_participant.begin(), st.per_participant.end(), 1024u), 1);
  EXPECT_EQ(st.iterations(), 1024u);
}

TEST(ParallelFor, HugeBlocksDoNotWrapTheCounter) {
  ThreadPool pool(4);
  std::vector<std::atomic<int>> hits(5);
  RunStats st = parallel_for(pool, 5, FixedBlock{std::uint64_t{1} << 63},
                             [&](std::uint64_t i) { hits[i].fetch_add(1); });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_EQ(st.successful_claims, 1u);
}

// Property: every index runs once, chunks tile [0, N), fixed claims match
// ceil(N/B), and guided chunk sizes never grow.
TEST(ParallelFor, ExactlyOnceProperty) {
  std::mt19937_64 rng(2026);
  std::vector<std::unique_ptr<ThreadPool>> pools;
  for (std::size_t p = 1; p <= 8; ++p) pools.push_back(std::make_unique<ThreadPool>(p));

  for (int trial = 0; trial < 300; ++trial) {
    const std::uint64_t n = rng() % 4097;
    const std::size_t p = 1 + rng() % 8;
    const std::uint64_t block = 1 + rng() % 300;
    for (const auto& s : all_strategies(block)) {
      std::vector<std::atomic<std::uint32_t>> tally(n);
      RunStats st = parallel_for(
          *pools[p - 1], n, s, [&](std::uint64_t i) { tally[i].fetch_add(1, std::memory_order_relaxed); },
          {.record_chunks = true});
      for (std::uint64_t i = 0; i < n; ++i) ASSERT_EQ(tally[i].load(), 1u) << "index " << i;
      ASSERT_EQ(st.iterations(), n);
      ASSERT_EQ(st.terminal_claims, p);

      std::uint64_t expect_begin = 0;
      for (const auto& c : st.chunks) {
        ASSERT_EQ(c.begin, expect_begin);
        ASSERT_GT(c.end, c.begin);
        expect_begin = c.end;
      }
      ASSERT_EQ(expect_begin, n);

      if (!std::holds_alternative<Guided>(s)) {
        const std::uint64_t b = std::min<std::uint64_t>(block, std::max<std::uint64_t>(n, 1));
        ASSERT_EQ(st.successful_claims, (n + b - 1) / b);
      } else {
        // Chunks sorted by begin are also in claim order for guided runs,
        // since every claim starts where the previous one ended.
        for (std::size_t i = 1; i < st.chunks.size(); ++i)
          ASSERT_LE(st.chunks[i].end - st.chunks[i].begin, st.chunks[i - 1].end - st.chunks[i - 1].begin);
      }
    }
  }
}

TEST(ParallelFor, GuidedSingleParticipantTrace) {
  ThreadPool pool(1);
  RunStats st = parallel_for(pool, 1000, Guided{8}, [](std::uint64_t) {}, {.record_chunks = true});
  std::uint64_t remaining = 1000;
  for (const auto& c : st.chunks) {
    EXPECT_EQ(c.end - c.begin, next_chunk_guided(remaining, 8));
    remaining -= c.end - c.begin;
  }
  EXPECT_EQ(remaining, 0u);
  EXPECT_EQ(st.chunks.front().end, 62u);
}

TEST(ParallelFor, CompletionBarrier) {
  ThreadPool pool(4);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint64_t n = 1 + rng() % 512;
    std::vector<std::uint64_t> out(n, 0);  // plain writes; the barrier must publish them
    const std::uint64_t token = rng();
    const auto strategies = all_strategies(1 + rng() % 16);
    parallel_for(pool, n, strategies[trial % 3], [&](std::uint64_t i) { out[i] = token ^ i; });
    ASSERT_EQ(out[n - 1], token ^ (n - 1));
  }
}

TEST(ParallelFor, FirstFailurePropagatesAfterQuiescence) {
  ThreadPool pool(4);
  for (const auto& s : all_strategies(7)) {
    std::atomic<int> ran{0};
    EXPECT_THROW(parallel_for(pool, 500, s,
                              [&](std::uint64_t i) {
                                ++ran;
                                if (i == 100) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
    EXPECT_LE(ran.load(), 500);
    // The pool stays usable.
    std::atomic<int> after{0};
    parallel_for(pool, 64, s, [&](std::uint64_t) { ++after; });
    EXPECT_EQ(after.load(), 64);
  }
}

TEST(ThreadPool, ShutdownIsIdempotentAndFinal) {
  ThreadPool pool(3);
  pool.shutdown();
  pool.shutdown();
  EXPECT_FALSE(pool.running());
  EXPECT_THROW(parallel_for(pool, 4, FixedBlock{1}, [](std::uint64_t) {}), UsageError);
}

TEST(ThreadPool, BroadcastReachesEveryParticipant) {
  for (IdlePolicy idle : {IdlePolicy::kBlock, IdlePolicy::kSpin}) {
    ThreadPool pool(5, idle);
    for (int round = 0; round < 50; ++round) {
      std::vector<int> seen(5, 0);
      auto body = [&](std::size_t who) { seen[who] += 1; };
      pool.broadcast(body);
      EXPECT_EQ(seen, std::vector<int>(5, 1));
    }
  }
}

TEST(ThreadPool, PinningRespectsEnvironmentAndTopology) {
  Topology t;
  t.core_groups = {{0, {0}}};
  t.worker_count = 2;
  t.pinning = false;
  PoolOptions o = pool_options(t);
  EXPECT_EQ(o.participants, 2u);
  EXPECT_TRUE(o.pin_cores.empty());
}

TEST(Strategy, NamesAndBlocks) {
  EXPECT_EQ(strategy_name(FixedBlock{4}), "fixed");
  EXPECT_EQ(strategy_name(Guided{}), "guided");
  EXPECT_EQ(strategy_name(CostModelChoice{9}), "cost-model");
  EXPECT_EQ(strategy_block(Guided{}), 0u);
  EXPECT_EQ(strategy_block(CostModelChoice{9}), 9u);
}

}  // namespace
}  // namespace blockwise
