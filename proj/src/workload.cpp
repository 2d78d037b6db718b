// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include "blockwise/workload.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "blockwise/errors.hpp"

namespace blockwise {

std::span<const std::uint8_t> Arena::read_region(std::uint64_t iteration) const {
  return std::span<const std::uint8_t>(read_).subspan(iteration * spec_.unit_read, spec_.unit_read);
}

std::span<std::uint8_t> Arena::write_region(std::uint64_t iteration) {
  return std::span<std::uint8_t>(write_).subspan(iteration * spec_.unit_write, spec_.unit_write);
}

std::span<const std::uint8_t> Arena::write_region(std::uint64_t iteration) const {
  return std::span<const std::uint8_t>(write_).subspan(iteration * spec_.unit_write,
                                                       spec_.unit_write);
}

void Arena::clear_writes() { std::fill(write_.begin(), write_.end(), 0); }

Arena init_arena(const WorkloadSpec& spec, std::uint64_t seed, std::uint64_t cap_bytes) {
  const std::uint64_t widest = std::max(spec.unit_read, spec.unit_write);
  const bool overflow = widest != 0 && spec.iterations > std::numeric_limits<std::uint64_t>::max() / widest;
  if (overflow || spec.iterations * widest > cap_bytes) {
    throw SizingError("arena of iterations * max(unit_read, unit_write) = " +
                      std::to_string(spec.iterations) + " * " + std::to_string(widest) +
                      " bytes exceeds the cap of " + std::to_string(cap_bytes) + " bytes");
  }
  Arena arena;
  arena.spec_ = spec;
  arena.read_.resize(spec.iterations * spec.unit_read);
  arena.write_.assign(spec.iterations * spec.unit_write, 0);
  Lcg64 rng(seed);
  for (auto& b : arena.read_) b = rng.next_byte();
  return arena;
}

std::uint64_t effective_work(const WorkloadSpec& spec) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = spec.unit_read;
  for (std::uint64_t term : {spec.unit_write, spec.unit_comp}) {
    if (total > kMax - term) return kMax;
    total += term;
  }
  return total;
}

UnitTask::UnitTask(Arena& arena, std::uint64_t computation_cap)
    : arena_(&arena),
      requested_per_read_(arena.spec().unit_read == 0 ? 0
                                                      : arena.spec().unit_comp / arena.spec().unit_read),
      executed_per_read_(std::min(requested_per_read_, computation_cap)) {}

void UnitTask::operator()(std::uint64_t iteration) const {
  NullProbe probe;
  run(iteration, probe);
}

void run_unit_task(const UnitTask& task, std::uint64_t iteration) { task(iteration); }

}  // namespace blockwise
