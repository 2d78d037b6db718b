// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

// Block-size cost model.
//
//   B = (alpha*G + delta0) / (beta0*T + beta1*R + beta2*W + beta3*C + delta1)
//
// over normalized features G = 100*groups, T = participants,
// R = log2(unit_read), W = log2(unit_write), C = log2(unit_comp)/10.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockwise/config.hpp"

namespace blockwise {

struct Features {
  double groups = 0;   // G
  double threads = 0;  // T
  double read = 0;     // R
  double write = 0;    // W
  double comp = 0;     // C

  friend bool operator==(const Features&, const Features&) = default;
};

/// Throws DomainError unless groups, threads, unit_read, unit_write >= 1 and
/// unit_comp >= 2.
Features normalize(std::size_t groups, std::size_t threads, const WorkloadSpec& spec);

struct Weights {
  static constexpr std::size_t kCount = 7;

  double alpha = 0;
  double delta0 = 0;
  double beta0 = 0;
  double beta1 = 0;
  double beta2 = 0;
  double beta3 = 0;
  double delta1 = 0;

  /// Compiled-in trained weights, selectable by the name "published".
  static Weights published();

  /// Order: alpha, delta0, beta0, beta1, beta2, beta3, delta1.
  std::array<double, kCount> to_array() const;
  static Weights from_array(const std::array<double, kCount>& a);

  friend bool operator==(const Weights&, const Weights&) = default;
};

inline constexpr double kDefaultSingularityEpsilon = 1e-6;

enum class SingularityMode {
  kThrow,       // SingularityError
  kClampToMax,  // return the cap (or UINT64_MAX when uncapped)
};

struct PredictOptions {
  std::optional<std::uint64_t> iteration_cap;  // N; upper clamp
  double epsilon = kDefaultSingularityEpsilon;
  SingularityMode on_singularity = SingularityMode::kThrow;
};

double numerator(const Weights& w, const Features& f);
double denominator(const Weights& w, const Features& f);

/// Unrounded ratio. Throws SingularityError when |denominator| < epsilon.
double predict_raw(const Weights& w, const Features& f, double epsilon = kDefaultSingularityEpsilon);

/// clamp(floor(predict_raw), 1, iteration_cap).
std::uint64_t predict(const Weights& w, const Features& f, const PredictOptions& options = {});

struct TrainingRow {
  Features features;
  double block = 1;  // observed best block size
};

using TrainingSet = std::vector<TrainingRow>;

/// Sum of squared residuals of the unrounded prediction. Throws
/// ValidationError on empty data, SingularityError on a singular row.
double loss(const Weights& w, std::span<const TrainingRow> data,
            double epsilon = kDefaultSingularityEpsilon);

/// Analytic gradient of loss() in Weights::to_array() order.
std::array<double, Weights::kCount> loss_gradient(const Weights& w, std::span<const TrainingRow> data,
                                                  double epsilon = kDefaultSingularityEpsilon);

struct FitConfig {
  double step_size = 1.0;       // first trial step of the line search
  std::size_t max_epochs = 200000;
  double tolerance = 1e-12;     // stop when the relative loss drop falls below this
  double armijo = 1e-4;         // sufficient-decrease constant
  std::size_t trace_stride = 100;
};

struct TracePoint {
  std::size_t epoch = 0;
  double loss = 0;
};

struct FitResult {
  Weights weights;
  double initial_loss = 0;
  double final_loss = 0;
  std::size_t epochs = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

/// Full-batch gradient descent with backtracking line search. Only
/// loss-decreasing steps are accepted, so final_loss <= initial_loss.
/// Throws FitError when a row produces a non-finite gradient.
FitResult fit(std::span<const TrainingRow> data, const Weights& init, const FitConfig& config = {});

/// Seeded random starting point: uniform [-1, 1) for every weight, with
/// delta1 shifted to [1, 2) so the denominator starts positive.
Weights random_weights(std::uint64_t seed);

/// CSV with header `G,T,R,W,C,B`. With `raw` the columns hold raw counts
/// (groups, threads, bytes, bytes, increments; power literals such as 1024^3
/// accepted) and are normalized on load; otherwise they are already
/// normalized features.
TrainingSet read_training_csv(std::istream& in, bool raw);
TrainingSet load_training_csv(const std::filesystem::path& path, bool raw);
void write_training_csv(std::ostream& out, std::span<const TrainingRow> data);

struct FitMetadata {
  double loss = 0;
  std::size_t epochs = 0;
  std::optional<std::uint64_t> seed;
};

struct WeightsFile {
  Weights weights;
  std::optional<FitMetadata> fit;
};

/// JSON object with the seven named weights and an optional "fit" block.
/// Doubles are written with round-trip precision.
std::string to_text(const WeightsFile& file);
WeightsFile parse_weights(std::string_view text);
WeightsFile load_weights(const std::filesystem::path& path);
void save_weights(const std::filesystem::path& path, const WeightsFile& file);

/// "published" or a weights file path.
Weights resolve_weights(std::string_view source);

}  // namespace blockwise
