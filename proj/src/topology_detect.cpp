// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <thread>

#include "blockwise/config.hpp"

#if defined(__linux__)
#include <sched.h>
#endif

namespace blockwise {

namespace {

namespace fs = std::filesystem;

std::string read_trimmed(const fs::path& path) {
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\r')) s.pop_back();
  return s;
}

// "0-3,8,10-11" -> {0,1,2,3,8,10,11}; malformed pieces are skipped.
std::set<int> parse_cpu_list(const std::string& text) {
  std::set<int> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    std::string piece = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? text.size() : comma + 1;
    try {
      auto dash = piece.find('-');
      if (dash == std::string::npos) {
        out.insert(std::stoi(piece));
      } else {
        int lo = std::stoi(piece.substr(0, dash));
        int hi = std::stoi(piece.substr(dash + 1));
        for (int c = lo; c <= hi; ++c) out.insert(c);
      }
    } catch (const std::exception&) {
    }
  }
  return out;
}

std::set<int> allowed_cpus() {
  std::set<int> out;
#if defined(__linux__)
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(0, sizeof(set), &set) == 0)
    for (int c = 0; c < CPU_SETSIZE; ++c)
      if (CPU_ISSET(c, &set)) out.insert(c);
#endif
  return out;
}

Topology single_group(std::vector<int> cores) {
  if (cores.empty()) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    for (unsigned c = 0; c < n; ++c) cores.push_back(static_cast<int>(c));
  }
  Topology t;
  t.worker_count = cores.size();
  t.core_groups.push_back(CoreGroup{0, std::move(cores)});
  return t;
}

Topology detect_filtered(const fs::path& cpu_root, const std::set<int>& allowed) {
  static const std::regex cpu_dir(R"(cpu(\d+))");
  std::vector<int> cores;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(cpu_root, ec)) {
    std::smatch m;
    std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, cpu_dir)) continue;
    int id = std::stoi(m[1]);
    if (!allowed.empty() && !allowed.count(id)) continue;
    if (fs::exists(entry.path() / "online") && read_trimmed(entry.path() / "online") == "0")
      continue;
    cores.push_back(id);
  }
  std::sort(cores.begin(), cores.end());
  if (cores.empty()) return single_group({});

  // Key each core by the sorted list of cores sharing its L3.
  std::map<std::set<int>, std::vector<int>> by_l3;
  std::vector<int> unknown;
  for (int id : cores) {
    fs::path cache = cpu_root / ("cpu" + std::to_string(id)) / "cache";
    std::set<int> shared;
    for (const auto& idx : fs::directory_iterator(cache, ec)) {
      if (idx.path().filename().string().rfind("index", 0) != 0) continue;
      if (read_trimmed(idx.path() / "level") != "3") continue;
      shared = parse_cpu_list(read_trimmed(idx.path() / "shared_cpu_list"));
      break;
    }
    if (shared.empty() || !shared.count(id)) {
      unknown.push_back(id);
    } else {
      by_l3[shared].push_back(id);
    }
  }
  if (by_l3.empty()) return single_group(cores);

  Topology t;
  int gid = 0;
  for (auto& [key, members] : by_l3) t.core_groups.push_back(CoreGroup{gid++, members});
  if (!unknown.empty()) t.core_groups.push_back(CoreGroup{gid++, unknown});
  std::sort(t.core_groups.begin(), t.core_groups.end(),
            [](const CoreGroup& a, const CoreGroup& b) { return a.core_ids.front() < b.core_ids.front(); });
  for (std::size_t i = 0; i < t.core_groups.size(); ++i) t.core_groups[i].group_id = static_cast<int>(i);
  t.worker_count = t.core_count();
  return t;
}

}  // namespace

Topology detect_topology_from(const std::filesystem::path& cpu_root) {
  try {
    Topology t = detect_filtered(cpu_root, {});
    validate(t);
    return t;
  } catch (const std::exception&) {
    return single_group({});
  }
}

Topology detect_topology() {
  try {
    Topology t = detect_filtered("/sys/devices/system/cpu", allowed_cpus());
    validate(t);
    return t;
  } catch (const std::exception&) {
    std::set<int> allowed = allowed_cpus();
    return single_group({allowed.begin(), allowed.end()});
  }
}

}  // namespace blockwise
