// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration: machine topology, workload parameters, sweep plans and
// their JSON file formats.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace blockwise {

/// Cores sharing one L3 cache.
struct CoreGroup {
  int group_id = 0;
  std::vector<int> core_ids;

  friend bool operator==(const CoreGroup&, const CoreGroup&) = default;
};

enum class PinOrder {
  kCompact,  // fill group 0, then group 1, ...
  kSpread,   // round-robin over groups
};

struct Topology {
  std::vector<CoreGroup> core_groups;
  std::size_t worker_count = 1;  // participants T, caller included
  bool pinning = true;

  std::size_t group_count() const { return core_groups.size(); }
  std::size_t core_count() const;

  /// Core for each of the first `participants` workers. Cores are reused
  /// round-robin once every listed core has been handed out.
  std::vector<int> pin_plan(std::size_t participants,
                            PinOrder order = PinOrder::kCompact) const;

  /// Number of distinct groups touched by pin_plan(participants, order).
  std::size_t groups_spanned(std::size_t participants,
                             PinOrder order = PinOrder::kCompact) const;

  /// Same topology with a different worker count.
  Topology with_workers(std::size_t workers) const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

/// Throws ValidationError on an empty group list, an empty group, a negative
/// or duplicate core id, or worker_count == 0.
void validate(const Topology& topology);

Topology parse_topology(std::string_view text);
Topology load_topology(const std::filesystem::path& path);
std::string to_text(const Topology& topology);
void write_topology(const std::filesystem::path& path, const Topology& topology);

/// Reads the OS view of logical cores and L3 sharing. Never throws; falls back
/// to one group holding every core.
Topology detect_topology();

/// Detection against an explicit sysfs-style root (`<root>/cpu<N>/cache/...`).
/// Exposed for tests.
Topology detect_topology_from(const std::filesystem::path& cpu_root);

inline constexpr std::uint64_t kDefaultIterations = 1024;

/// Work done by one task invocation plus the iteration count N.
struct WorkloadSpec {
  std::uint64_t unit_read = 0;   // bytes read per invocation
  std::uint64_t unit_write = 0;  // bytes written per invocation
  std::uint64_t unit_comp = 1;   // increments spread over the reads
  std::uint64_t iterations = kDefaultIterations;

  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

void validate(const WorkloadSpec& spec);

inline constexpr std::size_t kDefaultRepetitions = 9;
inline constexpr std::size_t kDefaultWarmups = 2;

struct SweepSpec {
  WorkloadSpec workload;
  std::vector<std::uint64_t> block_sizes;
  std::vector<std::size_t> thread_counts;
  std::size_t repetitions = kDefaultRepetitions;
  std::size_t warmups = kDefaultWarmups;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

void validate(const SweepSpec& spec);

SweepSpec parse_sweep(std::string_view text);
SweepSpec load_sweep(const std::filesystem::path& path);
std::string to_text(const SweepSpec& spec);

/// Parses `<int>`, `<int>^<int>` or `<int>e<int>` (the last meaning
/// base * 10^exp) into an exact count. Values above 2^63-1 are rejected.
std::uint64_t parse_count_literal(std::string_view text);

}  // namespace blockwise
