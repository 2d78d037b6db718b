// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include "blockwise/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "blockwise/errors.hpp"
#include "json.hpp"

namespace blockwise {

using json = nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

// Counts may be written as JSON integers or as literal strings ("2^60").
std::uint64_t count_value(const json& v, const char* key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    auto x = v.get<std::int64_t>();
    if (x < 0) throw ValidationError(std::string(key) + " must be non-negative");
    return static_cast<std::uint64_t>(x);
  }
  if (v.is_string()) return parse_count_literal(v.get<std::string>());
  throw ParseError(std::string(key) + ": expected an integer");
}

std::uint64_t count_field(const json& j, const char* key) { return count_value(j.at(key), key); }

template <typename T>
std::vector<T> count_list(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ParseError(std::string(key) + ": expected a list");
  std::vector<T> out;
  for (const auto& item : v) out.push_back(static_cast<T>(count_value(item, key)));
  return out;
}

template <typename T>
bool strictly_increasing(const std::vector<T>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](T a, T b) { return a >= b; }) ==
         v.end();
}

}  // namespace

std::size_t Topology::core_count() const {
  std::size_t n = 0;
  for (const auto& g : core_groups) n += g.core_ids.size();
  return n;
}

std::vector<int> Topology::pin_plan(std::size_t participants, PinOrder order) const {
  std::vector<int> cores;
  if (order == PinOrder::kCompact) {
    for (const auto& g : core_groups)
      cores.insert(cores.end(), g.core_ids.begin(), g.core_ids.end());
  } else {
    std::size_t widest = 0;
    for (const auto& g : core_groups) widest = std::max(widest, g.core_ids.size());
    for (std::size_t i = 0; i < widest; ++i)
      for (const auto& g : core_groups)
        if (i < g.core_ids.size()) cores.push_back(g.core_ids[i]);
  }
  std::vector<int> plan;
  if (cores.empty()) return plan;
  plan.reserve(participants);
  for (std::size_t i = 0; i < participants; ++i) plan.push_back(cores[i % cores.size()]);
  return plan;
}

std::size_t Topology::groups_spanned(std::size_t participants, PinOrder order) const {
  std::set<int> used;
  for (int core : pin_plan(participants, order)) {
    for (const auto& g : core_groups) {
      if (std::find(g.core_ids.begin(), g.core_ids.end(), core) != g.core_ids.end()) {
        used.insert(g.group_id);
        break;
      }
    }
  }
  return std::max<std::size_t>(used.size(), 1);
}

Topology Topology::with_workers(std::size_t workers) const {
  Topology t = *this;
  t.worker_count = workers;
  return t;
}

void validate(const Topology& topology) {
  if (topology.core_groups.empty()) throw ValidationError("topology has no core groups");
  if (topology.worker_count == 0) throw ValidationError("worker count must be >= 1");
  std::set<int> seen;
  for (const auto& g : topology.core_groups) {
    if (g.core_ids.empty())
      throw ValidationError("core group " + std::to_string(g.group_id) + " is empty");
    for (int id : g.core_ids) {
      if (id < 0) throw ValidationError("negative core id " + std::to_string(id));
      if (!seen.insert(id).second)
        throw ValidationError("duplicate core id " + std::to_string(id));
    }
  }
}

Topology parse_topology(std::string_view text) {
  json j = parse_json(text, "topology");
  Topology t;
  try {
    const auto& groups = j.at("groups");
    if (!groups.is_array()) throw ParseError("topology: groups must be a list of lists");
    int next_id = 0;
    for (const auto& g : groups) {
      if (!g.is_array()) throw ParseError("topology: groups must be a list of lists");
      CoreGroup group{next_id++, g.get<std::vector<int>>()};
      t.core_groups.push_back(std::move(group));
    }
    if (j.contains("workers")) {
      auto w = j.at("workers").get<std::int64_t>();
      if (w < 1) throw ValidationError("worker count must be >= 1");
      t.worker_count = static_cast<std::size_t>(w);
    } else {
      t.worker_count = t.core_count();
    }
    t.pinning = j.value("pin", true);
  } catch (const json::exception& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
  validate(t);
  return t;
}

Topology load_topology(const std::filesystem::path& path) {
  return parse_topology(read_file(path));
}

std::string to_text(const Topology& topology) {
  json groups = json::array();
  for (const auto& g : topology.core_groups) groups.push_back(g.core_ids);
  json j = {{"groups", groups}, {"workers", topology.worker_count}, {"pin", topology.pinning}};
  return j.dump(2) + "\n";
}

void write_topology(const std::filesystem::path& path, const Topology& topology) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << to_text(topology);
}

void validate(const WorkloadSpec& spec) {
  if (spec.iterations < 1) throw ValidationError("iterations must be >= 1");
  if (spec.unit_comp < 1) throw ValidationError("unit_comp must be >= 1");
  if (spec.unit_read == 0) {
    if (spec.unit_write != 0)
      throw ValidationError("unit_write > 0 requires unit_read > 0");
  } else if (spec.unit_comp < spec.unit_read) {
    throw ValidationError("unit_comp must be >= unit_read so every read gets >= 1 increment");
  }
}

void validate(const SweepSpec& spec) {
  validate(spec.workload);
  if (spec.block_sizes.empty()) throw ValidationError("block_sizes is empty");
  if (spec.thread_counts.empty()) throw ValidationError("thread_counts is empty");
  if (!strictly_increasing(spec.block_sizes))
    throw ValidationError("block_sizes must be strictly increasing");
  if (!strictly_increasing(spec.thread_counts))
    throw ValidationError("thread_counts must be strictly increasing");
  if (spec.block_sizes.front() < 1) throw ValidationError("block sizes must be >= 1");
  if (spec.thread_counts.front() < 1) throw ValidationError("thread counts must be >= 1");
  if (spec.repetitions < 1) throw ValidationError("repetitions must be >= 1");
}

SweepSpec parse_sweep(std::string_view text) {
  json j = parse_json(text, "sweep");
  SweepSpec s;
  try {
    s.workload.unit_read = count_field(j, "unit_read");
    s.workload.unit_write = count_field(j, "unit_write");
    s.workload.unit_comp = count_field(j, "unit_comp");
    if (j.contains("iterations")) s.workload.iterations = count_field(j, "iterations");
    s.block_sizes = count_list<std::uint64_t>(j, "block_sizes");
    s.thread_counts = count_list<std::size_t>(j, "thread_counts");
    if (j.contains("repetitions")) s.repetitions = count_field(j, "repetitions");
    if (j.contains("warmups")) s.warmups = count_field(j, "warmups");
  } catch (const json::exception& e) {
    throw ParseError(std::string("sweep: ") + e.what());
  }
  validate(s);
  return s;
}

SweepSpec load_sweep(const std::filesystem::path& path) { return parse_sweep(read_file(path)); }

std::string to_text(const SweepSpec& spec) {
  json j = {{"unit_read", spec.workload.unit_read},
            {"unit_write", spec.workload.unit_write},
            {"unit_comp", spec.workload.unit_comp},
            {"iterations", spec.workload.iterations},
            {"block_sizes", spec.block_sizes},
            {"thread_counts", spec.thread_counts},
            {"repetitions", spec.repetitions},
            {"warmups", spec.warmups}};
  return j.dump(2) + "\n";
}

std::uint64_t parse_count_literal(std::string_view text) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::int64_t>::max();
  auto number = [&](std::string_view part) {
    std::uint64_t v = 0;
    if (part.empty()) throw ParseError("malformed count literal '" + std::string(text) + "'");
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec == std::errc::result_out_of_range || (ec == std::errc() && v > kMax))
      throw ParseError("count literal '" + std::string(text) + "' exceeds 2^63-1");
    if (ec != std::errc() || ptr != part.data() + part.size())
      throw ParseError("malformed count literal '" + std::string(text) + "'");
    return v;
  };
  auto power = [&](std::uint64_t base, std::uint64_t exp) {
    std::uint64_t v = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
      if (base != 0 && v > kMax / base)
        throw ParseError("count literal '" + std::string(text) + "' exceeds 2^63-1");
      v *= base;
      if (v == 0 || v == 1) break;  // 0^k and 1^k settle immediately
    }
    return v;
  };

  if (auto caret = text.find('^'); caret != std::string_view::npos)
    return power(number(text.substr(0, caret)), number(text.substr(caret + 1)));
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::uint64_t mantissa = number(text.substr(0, e));
    std::uint64_t scale = power(10, number(text.substr(e + 1)));
    if (mantissa != 0 && scale > kMax / mantissa)
      throw ParseError("count literal '" + std::string(text) + "' exceeds 2^63-1");
    return mantissa * scale;
  }
  return number(text);
}

}  // namespace blockwise
