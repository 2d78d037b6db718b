// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

// Benchmark harness: single measurements, block-size sweeps, strategy
// comparisons, the fetch-and-add micro-benchmark, and the table emitters.
//
// Times are monotonic nanoseconds. Latency trends are reported, never
// asserted: they depend on the host.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "blockwise/config.hpp"
#include "blockwise/costmodel.hpp"
#include "blockwise/errors.hpp"
#include "blockwise/executor.hpp"
#include "blockwise/workload.hpp"

namespace blockwise {

struct Aggregate {
  double median = 0;
  double min = 0;
  double mean = 0;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

/// Median (mean of the two middle values for even counts), min and mean.
/// Throws ValidationError on an empty list.
Aggregate aggregate(std::span<const std::int64_t> samples);

struct RepRecord {
  std::int64_t elapsed_ns = 0;
  std::uint64_t successful_claims = 0;
  std::uint64_t terminal_claims = 0;
};

struct SweepResult {
  std::size_t groups = 1;  // core groups spanned by the participants
  std::size_t threads = 1;
  WorkloadSpec workload;
  std::string strategy = "fixed";
  std::uint64_t block_size = 1;
  std::vector<RepRecord> reps;
  Aggregate summary;

  std::vector<std::int64_t> elapsed() const;
};

struct Measurement {
  std::int64_t elapsed_ns = 0;
  RunStats stats;
};

/// One timed parallel_for of the unit task. Arena setup is not timed.
Measurement measure_once(ThreadPool& pool, const UnitTask& task, const ChunkingStrategy& strategy);

struct HarnessOptions {
  std::uint64_t seed = 42;
  IdlePolicy idle = IdlePolicy::kBlock;
  PinOrder order = PinOrder::kCompact;
  std::uint64_t computation_cap = kDefaultComputationCap;
  std::uint64_t arena_cap = kDefaultArenaCap;
};

struct SweepOptions : HarnessOptions {
  /// Called after each finished cell, in result order.
  std::function<void(const SweepResult&)> on_result;
};

/// Thrown by run_sweep when a measurement fails; carries the finished cells.
class SweepError : public Error {
 public:
  SweepError(const std::string& what, std::vector<SweepResult> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<SweepResult>& partial() const { return partial_; }

 private:
  std::vector<SweepResult> partial_;
};

/// Every (thread_count, block_size) cell with fixed blocks: warmups discarded,
/// repetitions kept. Results are ordered by thread count, then block size.
std::vector<SweepResult> run_sweep(const SweepSpec& spec, const Topology& topology,
                                   const SweepOptions& options = {});

/// Block size with the lowest median for each thread count; ties go to the
/// smaller block. Throws ValidationError on empty input or mixed workloads.
std::map<std::size_t, std::uint64_t> best_block(std::span<const SweepResult> results);

inline constexpr std::uint64_t kDefaultFaaClaims = 100000;

struct FaaLatencySample {
  std::size_t participants = 1;
  std::uint64_t claims = 0;                 // successful fetch-and-adds
  std::int64_t elapsed_ns = 0;
  std::vector<double> per_participant_ns;   // each participant's mean cost per claim
  double latency_ns = 0;                    // elapsed * participants / claims
};

/// All participants of `pool` hammer one counter with fetch_add(1) until
/// `claims` increments have succeeded. Throws ValidationError when claims is
/// below `min_claims`.
FaaLatencySample measure_faa_latency(ThreadPool& pool, std::uint64_t claims = kDefaultFaaClaims,
                                     std::uint64_t min_claims = kDefaultFaaClaims);

struct CostEstimate {
  std::uint64_t iterations = 0;
  std::uint64_t block_size = 0;
  double faa_latency = 0;
  double work_per_iteration = 0;
  std::size_t threads = 0;
  double claim_cost = 0;  // ceil(N/B) * L
  double work_cost = 0;   // N * work / T
  double total = 0;
};

/// ceil(N/B)*L + N*work/T. Throws ValidationError unless every input is
/// positive.
CostEstimate estimate_cost(std::uint64_t iterations, std::uint64_t block_size, double faa_latency,
                           double work_per_iteration, std::size_t threads);

/// 1 / ((1 - p) + p / t). Throws ValidationError unless 0 <= p <= 1, t >= 1.
double amdahl_speedup(double parallel_fraction, std::size_t threads);

struct CostModelStrategy {
  Weights weights = Weights::published();
};

using StrategySpec = std::variant<FixedBlock, Guided, CostModelStrategy>;

/// "fixed:<B>", "guided" or "cost-model"; cost-model uses `weights`.
StrategySpec parse_strategy(std::string_view text, const Weights& weights = Weights::published());
std::string to_string(const StrategySpec& strategy);

/// Features for a run of `threads` participants on `topology`.
Features features_for(const Topology& topology, std::size_t threads, const WorkloadSpec& workload,
                      PinOrder order = PinOrder::kCompact);

/// Cost-model block for the run, clamped to [1, N]; a singular denominator
/// falls back to N.
std::uint64_t cost_model_block(const Weights& weights, const Topology& topology, std::size_t threads,
                               const WorkloadSpec& workload, PinOrder order = PinOrder::kCompact);

ChunkingStrategy resolve_strategy(const StrategySpec& spec, const Topology& topology,
                                  std::size_t threads, const WorkloadSpec& workload,
                                  PinOrder order = PinOrder::kCompact);

struct CompareOptions : HarnessOptions {
  std::size_t threads = 8;
  std::size_t repetitions = kDefaultRepetitions;
  std::size_t warmups = kDefaultWarmups;
};

struct ComparisonCell {
  std::uint64_t block_size = 0;  // 0 for guided
  std::vector<std::int64_t> elapsed_ns;
  Aggregate summary;
};

struct ComparisonRow {
  WorkloadSpec workload;
  std::vector<ComparisonCell> cells;  // one per strategy
  std::optional<std::uint64_t> cost_model_block;
};

struct ComparisonTable {
  std::size_t threads = 0;
  std::size_t groups = 1;
  std::vector<std::string> strategies;
  std::vector<ComparisonRow> rows;
};

/// One row per workload variant with the median latency of every strategy
/// and the cost model's block size. Needs at least two strategies.
ComparisonTable compare_strategies(std::span<const WorkloadSpec> variants, const Topology& topology,
                                   std::span<const StrategySpec> strategies,
                                   const CompareOptions& options = {});

// Emitters. The CSV carries one line per repetition:
// groups,threads,unit_read,unit_write,unit_comp,iterations,strategy,block_size,rep,elapsed_ns,successful_claims,terminal_claims
inline constexpr std::string_view kResultsCsvHeader =
    "groups,threads,unit_read,unit_write,unit_comp,iterations,strategy,block_size,rep,elapsed_ns,"
    "successful_claims,terminal_claims";

void write_results_csv(std::ostream& out, std::span<const SweepResult> results);
/// Regroups repetitions by configuration and recomputes the aggregates.
std::vector<SweepResult> read_results_csv(std::istream& in);
/// Block sizes down, thread counts across, median per cell; the best cell of
/// each column is bold.
void write_results_markdown(std::ostream& out, std::span<const SweepResult> results);
void write_results_json_lines(std::ostream& out, std::span<const SweepResult> results);
/// JSON summary with the best block size per thread count.
void write_summary(std::ostream& out, std::span<const SweepResult> results);

void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
void write_comparison_markdown(std::ostream& out, const ComparisonTable& table);
void write_comparison_json_lines(std::ostream& out, const ComparisonTable& table);

}  // namespace blockwise
