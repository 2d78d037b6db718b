// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "blockwise/bench.hpp"
#include "json.hpp"

namespace blockwise {

using json = nlohmann::json;

namespace {

std::string format_ns(double v) {
  char buf[64];
  if (v == std::floor(v))
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

json workload_json(const WorkloadSpec& w) {
  return {{"unit_read", w.unit_read},
          {"unit_write", w.unit_write},
          {"unit_comp", w.unit_comp},
          {"iterations", w.iterations}};
}

json aggregate_json(const Aggregate& a) {
  return {{"median", a.median}, {"min", a.min}, {"mean", a.mean}};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) cells.push_back(cell);
  return cells;
}

std::uint64_t to_u64(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("results CSV line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const SweepResult> results) {
  out << kResultsCsvHeader << '\n';
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.reps.size(); ++i) {
      const auto& rep = r.reps[i];
      out << r.groups << ',' << r.threads << ',' << r.workload.unit_read << ',' << r.workload.unit_write
          << ',' << r.workload.unit_comp << ',' << r.workload.iterations << ',' << r.strategy << ','
          << r.block_size << ',' << i << ',' << rep.elapsed_ns << ',' << rep.successful_claims << ','
          << rep.terminal_claims << '\n';
    }
  }
}

std::vector<SweepResult> read_results_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<SweepResult> results;
  using Key = std::tuple<std::size_t, std::size_t, std::uint64_t, std::uint64_t, std::uint64_t,
                         std::uint64_t, std::string, std::uint64_t>;
  std::map<Key, std::size_t> index;
  std::vector<std::map<std::uint64_t, RepRecord>> reps;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kResultsCsvHeader) throw ParseError("results CSV has an unexpected header");
      header = true;
      continue;
    }
    auto c = split(line);
    if (c.size() != 12) throw ParseError("results CSV line " + std::to_string(line_no) + ": expected 12 columns");
    SweepResult r;
    r.groups = to_u64(c[0], line_no);
    r.threads = to_u64(c[1], line_no);
    r.workload = {to_u64(c[2], line_no), to_u64(c[3], line_no), to_u64(c[4], line_no), to_u64(c[5], line_no)};
    r.strategy = c[6];
    r.block_size = to_u64(c[7], line_no);
    const std::uint64_t rep = to_u64(c[8], line_no);
    RepRecord record{static_cast<std::int64_t>(to_u64(c[9], line_no)), to_u64(c[10], line_no),
                     to_u64(c[11], line_no)};

    Key key{r.groups, r.threads, r.workload.unit_read, r.workload.unit_write, r.workload.unit_comp,
            r.workload.iterations, r.strategy, r.block_size};
    auto [it, inserted] = index.try_emplace(key, results.size());
    if (inserted) {
      results.push_back(std::move(r));
      reps.emplace_back();
    }
    if (!reps[it->second].emplace(rep, record).second)
      throw ParseError("results CSV line " + std::to_string(line_no) + ": duplicate repetition");
  }
  if (!header) throw ParseError("results CSV is empty");
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const auto& [rep, record] : reps[i]) results[i].reps.push_back(record);
    const auto elapsed = results[i].elapsed();
    results[i].summary = aggregate(elapsed);
  }
  return results;
}

void write_results_markdown(std::ostream& out, std::span<const SweepResult> results) {
  if (results.empty()) return;
  std::set<std::size_t> threads;
  std::set<std::uint64_t> blocks;
  std::map<std::pair<std::uint64_t, std::size_t>, double> median;
  for (const auto& r : results) {
    threads.insert(r.threads);
    blocks.insert(r.block_size);
    median[{r.block_size, r.threads}] = r.summary.median;
  }
  const auto best = best_block(results);
  const auto& w = results.front().workload;

  out << "unit read " << w.unit_read << ", unit write " << w.unit_write << ", unit comp " << w.unit_comp
      << ", iterations " << w.iterations << " (median ns, best per column in bold)\n\n";
  out << "| block sizes |";
  for (auto t : threads) out << ' ' << t << " threads |";
  out << "\n|---|";
  for (std::size_t i = 0; i < threads.size(); ++i) out << "---|";
  out << '\n';
  for (auto b : blocks) {
    out << "| " << b << " |";
    for (auto t : threads) {
      auto it = median.find({b, t});
      if (it == median.end()) {
        out << "  |";
      } else if (best.at(t) == b) {
        out << " **" << format_ns(it->second) << "** |";
      } else {
        out << ' ' << format_ns(it->second) << " |";
      }
    }
    out << '\n';
  }
}

void write_results_json_lines(std::ostream& out, std::span<const SweepResult> results) {
  for (const auto& r : results) {
    json reps = json::array();
    for (const auto& rep : r.reps)
      reps.push_back({{"elapsed_ns", rep.elapsed_ns},
                      {"successful_claims", rep.successful_claims},
                      {"terminal_claims", rep.terminal_claims}});
    json j = {{"groups", r.groups},         {"threads", r.threads},
              {"workload", workload_json(r.workload)},
              {"strategy", r.strategy},     {"block_size", r.block_size},
              {"reps", reps},               {"aggregate", aggregate_json(r.summary)}};
    out << j.dump() << '\n';
  }
}

void write_summary(std::ostream& out, std::span<const SweepResult> results) {
  json best = json::object();
  for (const auto& [threads, block] : best_block(results)) best[std::to_string(threads)] = block;
  json j = {{"workload", workload_json(results.front().workload)},
            {"cells", results.size()},
            {"best_block", best}};
  out << j.dump(2) << '\n';
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
  out << "groups,threads,unit_read,unit_write,unit_comp,iterations";
  for (const auto& s : table.strategies) out << ',' << s << "_median_ns," << s << "_block";
  out << ",cost_model_block\n";
  for (const auto& row : table.rows) {
    const auto& w = row.workload;
    out << table.groups << ',' << table.threads << ',' << w.unit_read << ',' << w.unit_write << ','
        << w.unit_comp << ',' << w.iterations;
    for (const auto& cell : row.cells) out << ',' << format_ns(cell.summary.median) << ',' << cell.block_size;
    out << ',';
    if (row.cost_model_block) out << *row.cost_model_block;
    out << '\n';
  }
}

void write_comparison_markdown(std::ostream& out, const ComparisonTable& table) {
  out << table.threads << " threads, " << table.groups << " core group(s), median ns\n\n";
  out << "| unit_read | unit_write | unit_comp |";
  for (const auto& s : table.strategies) out << ' ' << s << " |";
  out << " block sizes |\n|---|---|---|";
  for (std::size_t i = 0; i < table.strategies.size(); ++i) out << "---|";
  out << "---|\n";
  for (const auto& row : table.rows) {
    const auto& w = row.workload;
    out << "| " << w.unit_read << " | " << w.unit_write << " | " << w.unit_comp << " |";
    for (const auto& cell : row.cells) out << ' ' << format_ns(cell.summary.median) << " |";
    out << ' ' << (row.cost_model_block ? std::to_string(*row.cost_model_block) : "-") << " |\n";
  }
}

void write_comparison_json_lines(std::ostream& out, const ComparisonTable& table) {
  for (const auto& row : table.rows) {
    json cells = json::array();
    for (std::size_t i = 0; i < row.cells.size(); ++i)
      cells.push_back({{"strategy", table.strategies[i]},
                       {"block_size", row.cells[i].block_size},
                       {"elapsed_ns", row.cells[i].elapsed_ns},
                       {"aggregate", aggregate_json(row.cells[i].summary)}});
    json j = {{"groups", table.groups},
              {"threads", table.threads},
              {"workload", workload_json(row.workload)},
              {"cells", cells},
              {"cost_model_block", row.cost_model_block ? json(*row.cost_model_block) : json(nullptr)}};
    out << j.dump() << '\n';
  }
}

}  // namespace blockwise
