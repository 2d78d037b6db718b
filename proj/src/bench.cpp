// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include "blockwise/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace blockwise {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t nanos_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

}  // namespace

Aggregate aggregate(std::span<const std::int64_t> samples) {
  if (samples.empty()) throw ValidationError("cannot aggregate an empty sample list");
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  Aggregate a;
  a.median = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                        : (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2])) / 2.0;
  a.min = static_cast<double>(sorted.front());
  long double sum = 0;
  for (auto s : samples) sum += s;
  a.mean = static_cast<double>(sum / static_cast<long double>(n));
  return a;
}

std::vector<std::int64_t> SweepResult::elapsed() const {
  std::vector<std::int64_t> out;
  out.reserve(reps.size());
  for (const auto& r : reps) out.push_back(r.elapsed_ns);
  return out;
}

Measurement measure_once(ThreadPool& pool, const UnitTask& task, const ChunkingStrategy& strategy) {
  const auto start = Clock::now();
  RunStats stats = parallel_for(pool, task.spec().iterations, strategy, task);
  Measurement m;
  m.elapsed_ns = nanos_since(start);
  m.stats = std::move(stats);
  return m;
}

std::vector<SweepResult> run_sweep(const SweepSpec& spec, const Topology& topology,
                                   const SweepOptions& options) {
  validate(spec);
  validate(topology);
  std::vector<SweepResult> results;
  results.reserve(spec.thread_counts.size() * spec.block_sizes.size());

  try {
    Arena arena = init_arena(spec.workload, options.seed, options.arena_cap);
    UnitTask task(arena, options.computation_cap);
    for (std::size_t threads : spec.thread_counts) {
      const Topology run_topo = topology.with_workers(threads);
      ThreadPool pool(pool_options(run_topo, options.order, options.idle));
      const std::size_t groups = topology.groups_spanned(threads, options.order);
      for (std::uint64_t block : spec.block_sizes) {
        const ChunkingStrategy strategy = FixedBlock{block};
        for (std::size_t i = 0; i < spec.warmups; ++i) measure_once(pool, task, strategy);

        SweepResult r;
        r.groups = groups;
        r.threads = threads;
        r.workload = spec.workload;
        r.strategy = strategy_name(strategy);
        r.block_size = block;
        for (std::size_t i = 0; i < spec.repetitions; ++i) {
          Measurement m = measure_once(pool, task, strategy);
          r.reps.push_back({m.elapsed_ns, m.stats.successful_claims, m.stats.terminal_claims});
        }
        const auto elapsed = r.elapsed();
        r.summary = aggregate(elapsed);
        results.push_back(std::move(r));
        if (options.on_result) options.on_result(results.back());
      }
    }
  } catch (const std::exception& e) {
    throw SweepError(std::string("sweep failed: ") + e.what(), std::move(results));
  }
  return results;
}

std::map<std::size_t, std::uint64_t> best_block(std::span<const SweepResult> results) {
  if (results.empty()) throw ValidationError("best_block needs at least one result");
  const WorkloadSpec& w = results.front().workload;
  std::map<std::size_t, std::pair<double, std::uint64_t>> best;
  for (const auto& r : results) {
    if (!(r.workload == w)) throw ValidationError("best_block expects a single workload");
    auto [it, inserted] = best.try_emplace(r.threads, r.summary.median, r.block_size);
    if (inserted) continue;
    auto& [median, block] = it->second;
    if (r.summary.median < median || (r.summary.median == median && r.block_size < block)) {
      median = r.summary.median;
      block = r.block_size;
    }
  }
  std::map<std::size_t, std::uint64_t> out;
  for (const auto& [threads, cell] : best) out[threads] = cell.second;
  return out;
}

FaaLatencySample measure_faa_latency(ThreadPool& pool, std::uint64_t claims, std::uint64_t min_claims) {
  if (claims < min_claims)
    throw ValidationError("faa benchmark needs at least " + std::to_string(min_claims) + " claims");

  const std::size_t p = pool.participants();
  struct alignas(kCacheLine) Local {
    std::uint64_t claims = 0;
    std::int64_t elapsed_ns = 0;
  };
  std::vector<Local> local(p);
  alignas(kCacheLine) std::atomic<std::uint64_t> counter{0};

  auto hammer = [&](std::size_t who) {
    const auto start = Clock::now();
    std::uint64_t mine = 0;
    while (counter.fetch_add(1) < claims) ++mine;
    local[who].elapsed_ns = nanos_since(start);
    local[who].claims = mine;
  };

  const auto start = Clock::now();
  pool.broadcast(hammer);
  FaaLatencySample s;
  s.elapsed_ns = nanos_since(start);
  s.participants = p;
  for (const auto& l : local) {
    s.claims += l.claims;
    s.per_participant_ns.push_back(l.claims == 0 ? 0.0
                                                 : static_cast<double>(l.elapsed_ns) / static_cast<double>(l.claims));
  }
  s.latency_ns = static_cast<double>(s.elapsed_ns) * static_cast<double>(p) / static_cast<double>(s.claims);
  return s;
}

CostEstimate estimate_cost(std::uint64_t iterations, std::uint64_t block_size, double faa_latency,
                           double work_per_iteration, std::size_t threads) {
  if (iterations == 0 || block_size == 0 || threads == 0 || !(faa_latency > 0) || !(work_per_iteration > 0))
    throw ValidationError("estimate_cost needs positive inputs");
  CostEstimate e;
  e.iterations = iterations;
  e.block_size = block_size;
  e.faa_latency = faa_latency;
  e.work_per_iteration = work_per_iteration;
  e.threads = threads;
  const std::uint64_t claims = iterations / block_size + (iterations % block_size != 0);
  e.claim_cost = static_cast<double>(claims) * faa_latency;
  e.work_cost = static_cast<double>(iterations) * work_per_iteration / static_cast<double>(threads);
  e.total = e.claim_cost + e.work_cost;
  return e;
}

double amdahl_speedup(double parallel_fraction, std::size_t threads) {
  if (!(parallel_fraction >= 0 && parallel_fraction <= 1))
    throw ValidationError("parallel fraction must lie in [0, 1]");
  if (threads < 1) throw ValidationError("thread count must be >= 1");
  return 1.0 / ((1.0 - parallel_fraction) + parallel_fraction / static_cast<double>(threads));
}

StrategySpec parse_strategy(std::string_view text, const Weights& weights) {
  if (text == "guided") return Guided{};
  if (text == "cost-model") return CostModelStrategy{weights};
  if (text.starts_with("fixed:")) {
    std::uint64_t b = parse_count_literal(text.substr(6));
    if (b < 1) throw ValidationError("fixed block size must be >= 1");
    return FixedBlock{b};
  }
  throw ParseError("unknown strategy '" + std::string(text) + "' (use guided, cost-model or fixed:<B>)");
}

std::string to_string(const StrategySpec& strategy) {
  if (auto* f = std::get_if<FixedBlock>(&strategy)) return "fixed:" + std::to_string(f->block_size);
  if (std::holds_alternative<Guided>(strategy)) return "guided";
  return "cost-model";
}

Features features_for(const Topology& topology, std::size_t threads, const WorkloadSpec& workload,
                      PinOrder order) {
  return normalize(topology.groups_spanned(threads, order), threads, workload);
}

std::uint64_t cost_model_block(const Weights& weights, const Topology& topology, std::size_t threads,
                               const WorkloadSpec& workload, PinOrder order) {
  PredictOptions o;
  o.iteration_cap = workload.iterations;
  o.on_singularity = SingularityMode::kClampToMax;
  return predict(weights, features_for(topology, threads, workload, order), o);
}

ChunkingStrategy resolve_strategy(const StrategySpec& spec, const Topology& topology, std::size_t threads,
                                  const WorkloadSpec& workload, PinOrder order) {
  if (auto* f = std::get_if<FixedBlock>(&spec)) return *f;
  if (auto* g = std::get_if<Guided>(&spec)) return *g;
  const auto& c = std::get<CostModelStrategy>(spec);
  return CostModelChoice{cost_model_block(c.weights, topology, threads, workload, order)};
}

ComparisonTable compare_strategies(std::span<const WorkloadSpec> variants, const Topology& topology,
                                   std::span<const StrategySpec> strategies, const CompareOptions& options) {
  if (strategies.size() < 2) throw ValidationError("compare_strategies needs at least two strategies");
  if (variants.empty()) throw ValidationError("compare_strategies needs at least one workload");
  if (options.repetitions < 1) throw ValidationError("repetitions must be >= 1");
  validate(topology);

  ComparisonTable table;
  table.threads = options.threads;
  table.groups = topology.groups_spanned(options.threads, options.order);
  for (const auto& s : strategies) table.strategies.push_back(to_string(s));

  ThreadPool pool(pool_options(topology.with_workers(options.threads), options.order, options.idle));
  for (const auto& workload : variants) {
    validate(workload);
    Arena arena = init_arena(workload, options.seed, options.arena_cap);
    UnitTask task(arena, options.computation_cap);

    ComparisonRow row;
    row.workload = workload;
    for (const auto& s : strategies) {
      const ChunkingStrategy chosen = resolve_strategy(s, topology, options.threads, workload, options.order);
      if (std::holds_alternative<CostModelChoice>(chosen) && !row.cost_model_block)
        row.cost_model_block = strategy_block(chosen);
      for (std::size_t i = 0; i < options.warmups; ++i) measure_once(pool, task, chosen);
      ComparisonCell cell;
      cell.block_size = strategy_block(chosen);
      for (std::size_t i = 0; i < options.repetitions; ++i)
        cell.elapsed_ns.push_back(measure_once(pool, task, chosen).elapsed_ns);
      cell.summary = aggregate(cell.elapsed_ns);
      row.cells.push_back(std::move(cell));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace blockwise
