// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include "blockwise/costmodel.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <random>
#include <sstream>

#include "blockwise/errors.hpp"
#include "json.hpp"

namespace blockwise {

using json = nlohmann::json;

Features normalize(std::size_t groups, std::size_t threads, const WorkloadSpec& spec) {
  if (groups < 1) throw DomainError("core group count must be >= 1");
  if (threads < 1) throw DomainError("thread count must be >= 1");
  if (spec.unit_read < 1) throw DomainError("unit_read must be >= 1 to take log2");
  if (spec.unit_write < 1) throw DomainError("unit_write must be >= 1 to take log2");
  if (spec.unit_comp < 2) throw DomainError("unit_comp must be >= 2 to take log2");
  return Features{
      100.0 * static_cast<double>(groups),
      static_cast<double>(threads),
      std::log2(static_cast<double>(spec.unit_read)),
      std::log2(static_cast<double>(spec.unit_write)),
      std::log2(static_cast<double>(spec.unit_comp)) / 10.0,
  };
}

Weights Weights::published() {
  Weights w;
  w.alpha = -61.84;
  w.delta0 = 1558.31;
  w.beta0 = -10.48;
  w.beta1 = -33.71;
  w.beta2 = -34.50;
  w.beta3 = -26.84;
  w.delta1 = 693.13;
  return w;
}

std::array<double, Weights::kCount> Weights::to_array() const {
  return {alpha, delta0, beta0, beta1, beta2, beta3, delta1};
}

Weights Weights::from_array(const std::array<double, kCount>& a) {
  Weights w;
  w.alpha = a[0];
  w.delta0 = a[1];
  w.beta0 = a[2];
  w.beta1 = a[3];
  w.beta2 = a[4];
  w.beta3 = a[5];
  w.delta1 = a[6];
  return w;
}

double numerator(const Weights& w, const Features& f) { return w.alpha * f.groups + w.delta0; }

double denominator(const Weights& w, const Features& f) {
  return w.beta0 * f.threads + w.beta1 * f.read + w.beta2 * f.write + w.beta3 * f.comp + w.delta1;
}

double predict_raw(const Weights& w, const Features& f, double epsilon) {
  const double den = denominator(w, f);
  if (!(std::abs(den) >= epsilon)) {
    std::ostringstream msg;
    msg << "cost model denominator " << den << " is within " << epsilon << " of zero";
    throw SingularityError(msg.str());
  }
  return numerator(w, f) / den;
}

std::uint64_t predict(const Weights& w, const Features& f, const PredictOptions& options) {
  const std::uint64_t cap = options.iteration_cap.value_or(std::numeric_limits<std::uint64_t>::max());
  const std::uint64_t hi = std::max<std::uint64_t>(cap, 1);
  double raw;
  try {
    raw = predict_raw(w, f, options.epsilon);
  } catch (const SingularityError&) {
    if (options.on_singularity == SingularityMode::kClampToMax) return hi;
    throw;
  }
  const double b = std::floor(raw);
  if (!(b >= 1.0)) return 1;
  if (b >= static_cast<double>(hi)) return hi;
  return static_cast<std::uint64_t>(b);
}

double loss(const Weights& w, std::span<const TrainingRow> data, double epsilon) {
  if (data.empty()) throw ValidationError("loss needs at least one training row");
  double total = 0;
  for (const auto& row : data) {
    const double r = row.block - predict_raw(w, row.features, epsilon);
    total += r * r;
  }
  return total;
}

namespace {

std::string describe_row(std::size_t index, const TrainingRow& row) {
  std::ostringstream s;
  s << "row " << index << " (G=" << row.features.groups << ", T=" << row.features.threads
    << ", R=" << row.features.read << ", W=" << row.features.write << ", C=" << row.features.comp
    << ", B=" << row.block << ")";
  return s.str();
}

std::array<double, Weights::kCount> gradient_checked(const Weights& w, std::span<const TrainingRow> data,
                                                     double epsilon) {
  if (data.empty()) throw ValidationError("gradient needs at least one training row");
  std::array<double, Weights::kCount> g{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = data[i].features;
    const double num = numerator(w, f);
    const double den = denominator(w, f);
    if (!(std::abs(den) >= epsilon))
      throw SingularityError("cost model denominator is singular at " + describe_row(i, data[i]));
    const double residual = num / den - data[i].block;
    // d/dnum and d/dden of residual^2
    const double dnum = 2.0 * residual / den;
    const double dden = -2.0 * residual * num / (den * den);
    const std::array<double, Weights::kCount> row{
        dnum * f.groups, dnum, dden * f.threads, dden * f.read, dden * f.write, dden * f.comp, dden};
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!std::isfinite(row[k])) throw FitError("non-finite gradient at " + describe_row(i, data[i]));
      g[k] += row[k];
    }
  }
  return g;
}

double try_loss(const Weights& w, std::span<const TrainingRow> data, double epsilon) {
  try {
    const double l = loss(w, data, epsilon);
    return std::isfinite(l) ? l : std::numeric_limits<double>::infinity();
  } catch (const SingularityError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

std::array<double, Weights::kCount> loss_gradient(const Weights& w, std::span<const TrainingRow> data,
                                                  double epsilon) {
  return gradient_checked(w, data, epsilon);
}

FitResult fit(std::span<const TrainingRow> data, const Weights& init, const FitConfig& config) {
  if (data.empty()) throw ValidationError("fit needs at least one training row");

  FitResult result;
  auto w = init.to_array();
  double current = loss(init, data);
  result.initial_loss = current;
  result.trace.push_back({0, current});

  double step = config.step_size;
  std::size_t epoch = 0;
  for (; epoch < config.max_epochs; ++epoch) {
    const auto g = gradient_checked(Weights::from_array(w), data, kDefaultSingularityEpsilon);
    double gg = 0;
    for (double x : g) gg += x * x;
    if (gg == 0) {
      result.converged = true;
      break;
    }

    // Backtracking from twice the last accepted step.
    double trial = step * 2;
    double next_loss = current;
    std::array<double, Weights::kCount> next{};
    bool accepted = false;
    while (trial > 1e-300) {
      for (std::size_t k = 0; k < w.size(); ++k) next[k] = w[k] - trial * g[k];
      next_loss = try_loss(Weights::from_array(next), data, kDefaultSingularityEpsilon);
      if (next_loss <= current - config.armijo * trial * gg) {
        accepted = true;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }

    const double drop = current - next_loss;
    w = next;
    step = trial;
    current = next_loss;
    if (config.trace_stride != 0 && (epoch + 1) % config.trace_stride == 0)
      result.trace.push_back({epoch + 1, current});
    if (drop <= config.tolerance * std::max(current, std::numeric_limits<double>::min())) {
      ++epoch;
      result.converged = true;
      break;
    }
  }

  result.weights = Weights::from_array(w);
  result.final_loss = current;
  result.epochs = epoch;
  if (result.trace.back().epoch != epoch) result.trace.push_back({epoch, current});
  return result;
}

Weights random_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };  // [0, 1)
  std::array<double, Weights::kCount> a{};
  for (auto& x : a) x = 2.0 * unit() - 1.0;
  a[6] = 1.0 + unit();
  return Weights::from_array(a);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) {
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_real(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError("training CSV line " + std::to_string(line_no) + ": bad number '" + cell + "'");
  }
}

}  // namespace

TrainingSet read_training_csv(std::istream& in, bool raw) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  TrainingSet rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    auto cells = split_csv(line);
    if (!header) {
      if (cells != std::vector<std::string>{"G", "T", "R", "W", "C", "B"})
        throw ParseError("training CSV must start with header G,T,R,W,C,B");
      header = true;
      continue;
    }
    if (cells.size() != 6)
      throw ParseError("training CSV line " + std::to_string(line_no) + ": expected 6 columns");
    TrainingRow row;
    if (raw) {
      try {
        WorkloadSpec spec;
        spec.unit_read = parse_count_literal(cells[2]);
        spec.unit_write = parse_count_literal(cells[3]);
        spec.unit_comp = parse_count_literal(cells[4]);
        row.features = normalize(parse_count_literal(cells[0]), parse_count_literal(cells[1]), spec);
      } catch (const Error& e) {
        throw ParseError("training CSV line " + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      row.features = Features{parse_real(cells[0], line_no), parse_real(cells[1], line_no),
                              parse_real(cells[2], line_no), parse_real(cells[3], line_no),
                              parse_real(cells[4], line_no)};
    }
    row.block = parse_real(cells[5], line_no);
    if (!(row.block >= 1) || std::floor(row.block) != row.block)
      throw ValidationError("training CSV line " + std::to_string(line_no) +
                            ": B must be an integer >= 1");
    rows.push_back(row);
  }
  if (!header) throw ParseError("training CSV is empty");
  return rows;
}

TrainingSet load_training_csv(const std::filesystem::path& path, bool raw) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_training_csv(in, raw);
}

void write_training_csv(std::ostream& out, std::span<const TrainingRow> data) {
  out << "G,T,R,W,C,B\n";
  auto saved = out.precision(17);
  for (const auto& r : data)
    out << r.features.groups << ',' << r.features.threads << ',' << r.features.read << ','
        << r.features.write << ',' << r.features.comp << ',' << r.block << '\n';
  out.precision(saved);
}

std::string to_text(const WeightsFile& file) {
  const auto& w = file.weights;
  json j = {{"alpha", w.alpha}, {"delta0", w.delta0}, {"beta0", w.beta0}, {"beta1", w.beta1},
            {"beta2", w.beta2}, {"beta3", w.beta3},   {"delta1", w.delta1}};
  if (file.fit) {
    json meta = {{"loss", file.fit->loss}, {"epochs", file.fit->epochs}};
    meta["seed"] = file.fit->seed ? json(*file.fit->seed) : json(nullptr);
    j["fit"] = meta;
  }
  return j.dump(2) + "\n";
}

WeightsFile parse_weights(std::string_view text) {
  WeightsFile file;
  try {
    json j = json::parse(text.begin(), text.end());
    auto& w = file.weights;
    w.alpha = j.at("alpha").get<double>();
    w.delta0 = j.at("delta0").get<double>();
    w.beta0 = j.at("beta0").get<double>();
    w.beta1 = j.at("beta1").get<double>();
    w.beta2 = j.at("beta2").get<double>();
    w.beta3 = j.at("beta3").get<double>();
    w.delta1 = j.at("delta1").get<double>();
    if (j.contains("fit")) {
      const auto& m = j.at("fit");
      FitMetadata meta;
      meta.loss = m.at("loss").get<double>();
      meta.epochs = m.at("epochs").get<std::size_t>();
      if (m.contains("seed") && !m.at("seed").is_null()) meta.seed = m.at("seed").get<std::uint64_t>();
      file.fit = meta;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("weights: ") + e.what());
  }
  return file;
}

WeightsFile load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_weights(buf.str());
}

void save_weights(const std::filesystem::path& path, const WeightsFile& file) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << to_text(file);
}

Weights resolve_weights(std::string_view source) {
  if (source == "published") return Weights::published();
  return load_weights(std::filesystem::path(source)).weights;
}

}  // namespace blockwise
