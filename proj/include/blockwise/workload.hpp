// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

// The configurable unit task and the byte arenas it reads and writes.
//
// Iteration i owns read bytes [i*unit_read, (i+1)*unit_read) and write bytes
// [i*unit_write, (i+1)*unit_write), so distinct iterations can run
// concurrently without synchronization.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "blockwise/config.hpp"

namespace blockwise {

inline constexpr std::uint64_t kDefaultArenaCap = std::uint64_t{1} << 30;  // 1 GiB
inline constexpr std::uint64_t kDefaultComputationCap = std::uint64_t{1} << 16;

/// 64-bit LCG (Knuth's MMIX constants); each step emits its top byte.
class Lcg64 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint8_t next_byte() {
    state_ = state_ * kMultiplier + kIncrement;
    return static_cast<std::uint8_t>(state_ >> 56);
  }

 private:
  std::uint64_t state_;
};

class Arena {
 public:
  Arena() = default;

  const WorkloadSpec& spec() const { return spec_; }

  std::span<const std::uint8_t> read_region(std::uint64_t iteration) const;
  std::span<std::uint8_t> write_region(std::uint64_t iteration);
  std::span<const std::uint8_t> write_region(std::uint64_t iteration) const;

  std::span<const std::uint8_t> read_buffer() const { return read_; }
  std::span<const std::uint8_t> write_buffer() const { return write_; }

  /// Zeroes the write buffer; the read buffer keeps its seeded contents.
  void clear_writes();

 private:
  friend Arena init_arena(const WorkloadSpec&, std::uint64_t, std::uint64_t);

  WorkloadSpec spec_;
  std::vector<std::uint8_t> read_;
  std::vector<std::uint8_t> write_;
};

/// Allocates both buffers, fills the read buffer from Lcg64(seed) and zeroes
/// the write buffer. Throws SizingError when iterations * max(unit_read,
/// unit_write) exceeds `cap_bytes`.
Arena init_arena(const WorkloadSpec& spec, std::uint64_t seed,
                 std::uint64_t cap_bytes = kDefaultArenaCap);

/// unit_read + unit_write + unit_comp, saturating at 2^64-1.
std::uint64_t effective_work(const WorkloadSpec& spec);

/// Counts byte loads and stores made by the kernel. The default probe is a
/// no-op and compiles away.
struct NullProbe {
  void on_read() {}
  void on_write() {}
};

struct CountingProbe {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  void on_read() { ++reads; }
  void on_write() { ++writes; }
};

namespace detail {

// Keeps `integer += 1` from being folded into a single add.
inline void opaque(std::uint8_t& value) {
#if defined(__GNUC__) || defined(__clang__)
  asm volatile("" : "+r"(value));
#else
  static volatile std::uint8_t sink;
  sink = value;
  value = sink;
#endif
}

}  // namespace detail

/// One invocation of the unit task over explicit regions: read each byte,
/// bump it `per_read` times, append it to the write region while room
/// remains, then pad the rest of the write region with the last value.
template <typename Probe = NullProbe>
void unit_task_kernel(std::span<const std::uint8_t> read_at, std::span<std::uint8_t> write_at,
                      std::uint64_t per_read, Probe& probe) {
  std::uint64_t write_count = 0;
  std::uint8_t integer = 0;
  const std::uint64_t unit_write = write_at.size();
  for (std::uint64_t i = 0; i < read_at.size(); ++i) {
    integer = read_at[i];
    probe.on_read();
    for (std::uint64_t j = 0; j < per_read; ++j) {
      integer += 1;
      detail::opaque(integer);
    }
    if (write_count < unit_write) {
      write_at[write_count++] = integer;
      probe.on_write();
    }
  }
  while (write_count < unit_write) {
    write_at[write_count++] = integer;
    probe.on_write();
  }
}

/// The unit task bound to an arena. Calls for distinct iterations may run
/// concurrently; the same iteration twice at once is a caller error.
class UnitTask {
 public:
  UnitTask(Arena& arena, std::uint64_t computation_cap = kDefaultComputationCap);

  const WorkloadSpec& spec() const { return arena_->spec(); }

  /// unit_comp / unit_read as requested (0 when unit_read == 0).
  std::uint64_t per_read_computation() const { return requested_per_read_; }
  /// The increment count actually executed, min(requested, cap).
  std::uint64_t executed_per_read() const { return executed_per_read_; }
  bool capped() const { return executed_per_read_ != requested_per_read_; }

  void operator()(std::uint64_t iteration) const;

  template <typename Probe>
  void run(std::uint64_t iteration, Probe& probe) const {
    unit_task_kernel(arena_->read_region(iteration), arena_->write_region(iteration),
                     executed_per_read_, probe);
  }

 private:
  Arena* arena_;
  std::uint64_t requested_per_read_;
  std::uint64_t executed_per_read_;
};

/// Free-function form of UnitTask::operator().
void run_unit_task(const UnitTask& task, std::uint64_t iteration);

}  // namespace blockwise
