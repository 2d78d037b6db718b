// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "blockwise/config.hpp"
#include "blockwise/errors.hpp"

namespace fs = std::filesystem;

namespace blockwise {
namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("blockwise-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

void expect_valid_partition(const Topology& t) {
  EXPECT_NO_THROW(validate(t));
  std::set<int> seen;
  for (const auto& g : t.core_groups)
    for (int c : g.core_ids) EXPECT_TRUE(seen.insert(c).second) << "core " << c << " listed twice";
}

TEST(Topology, TwoGroupsOfFour) {
  TempDir dir;
  write_file(dir.path() / "topo.json", R"({"groups": [[0,1,2,3],[4,5,6,7]]})");
  Topology t = load_topology(dir.path() / "topo.json");
  EXPECT_EQ(t.group_count(), 2u);
  EXPECT_EQ(t.core_count(), 8u);
  EXPECT_EQ(t.worker_count, 8u);  // defaults to every listed core
  EXPECT_TRUE(t.pinning);
}

TEST(Topology, SingleSharedL3Group) {
  Topology t = parse_topology(R"({"groups": [[0,1,2,3,4,5,6,7]], "workers": 4, "pin": false})");
  EXPECT_EQ(t.group_count(), 1u);
  EXPECT_EQ(t.core_count(), 8u);
  EXPECT_EQ(t.worker_count, 4u);
  EXPECT_FALSE(t.pinning);
}

TEST(Topology, DuplicateCoreRejected) {
  EXPECT_THROW(parse_topology(R"({"groups": [[0,1,2,3],[3,4]]})"), ValidationError);
  EXPECT_THROW(parse_topology(R"({"groups": [[1,1]]})"), ValidationError);
}

TEST(Topology, MalformedInputs) {
  EXPECT_THROW(parse_topology(R"({"groups": []})"), ValidationError);
  EXPECT_THROW(parse_topology(R"({"groups": [[]]})"), ValidationError);
  EXPECT_THROW(parse_topology(R"({"groups": [[0]], "workers": 0})"), ValidationError);
  EXPECT_THROW(parse_topology(R"({"groups": [[-1]]})"), ValidationError);
  EXPECT_THROW(parse_topology("{not json"), ParseError);
  EXPECT_THROW(parse_topology(R"({"groups": "0,1"})"), ParseError);
  EXPECT_THROW(load_topology("/nonexistent/topo.json"), Error);
}

TEST(Topology, RoundTripRandomized) {
  std::mt19937_64 rng(11);
  TempDir dir;
  for (int trial = 0; trial < 200; ++trial) {
    const int groups = 1 + static_cast<int>(rng() % 6);
    std::vector<int> cores(64);
    for (int i = 0; i < 64; ++i) cores[i] = i * 3 + static_cast<int>(rng() % 3);
    std::shuffle(cores.begin(), cores.end(), rng);
    Topology t;
    std::size_t next = 0;
    for (int g = 0; g < groups; ++g) {
      CoreGroup cg;
      cg.group_id = g;
      const std::size_t size = 1 + rng() % 8;
      for (std::size_t k = 0; k < size; ++k) cg.core_ids.push_back(cores[next++]);
      t.core_groups.push_back(cg);
    }
    t.worker_count = 1 + rng() % 16;
    t.pinning = rng() % 2 == 0;
    ASSERT_EQ(parse_topology(to_text(t)), t);
    write_topology(dir.path() / "t.json", t);
    ASSERT_EQ(load_topology(dir.path() / "t.json"), t);
  }
}

TEST(Topology, PinPlanAndGroupsSpanned) {
  Topology t = parse_topology(R"({"groups": [[0,1,2,3],[4,5,6,7]]})");
  EXPECT_EQ(t.pin_plan(3), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(t.pin_plan(3, PinOrder::kSpread), (std::vector<int>{0, 4, 1}));
  EXPECT_EQ(t.pin_plan(10).size(), 10u);
  EXPECT_EQ(t.groups_spanned(4), 1u);
  EXPECT_EQ(t.groups_spanned(5), 2u);
  EXPECT_EQ(t.groups_spanned(2, PinOrder::kSpread), 2u);
  EXPECT_EQ(t.with_workers(3).worker_count, 3u);
}

TEST(TopologyDetect, NoCacheInfoFallsBackToOneGroup) {
  TempDir dir;
  for (int i = 0; i < 8; ++i) fs::create_directories(dir.path() / ("cpu" + std::to_string(i)));
  Topology t = detect_topology_from(dir.path());
  ASSERT_EQ(t.group_count(), 1u);
  EXPECT_EQ(t.core_count(), 8u);
  expect_valid_partition(t);
}

TEST(TopologyDetect, TwoL3Domains) {
  TempDir dir;
  for (int i = 0; i < 8; ++i) {
    const fs::path cache = dir.path() / ("cpu" + std::to_string(i)) / "cache";
    write_file(cache / "index2" / "level", "2\n");
    write_file(cache / "index2" / "shared_cpu_list", std::to_string(i) + "\n");
    write_file(cache / "index3" / "level", "3\n");
    write_file(cache / "index3" / "shared_cpu_list", i < 4 ? "0-3\n" : "4-7\n");
  }
  Topology t = detect_topology_from(dir.path());
  ASSERT_EQ(t.group_count(), 2u);
  EXPECT_EQ(t.core_groups[0].core_ids, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(t.core_groups[1].core_ids, (std::vector<int>{4, 5, 6, 7}));
  expect_valid_partition(t);
}

TEST(TopologyDetect, OfflineCoresSkipped) {
  TempDir dir;
  for (int i = 0; i < 4; ++i) fs::create_directories(dir.path() / ("cpu" + std::to_string(i)));
  write_file(dir.path() / "cpu2" / "online", "0\n");
  Topology t = detect_topology_from(dir.path());
  EXPECT_EQ(t.core_count(), 3u);
  expect_valid_partition(t);
}

TEST(TopologyDetect, HostDetectionIsValid) {
  Topology t = detect_topology();
  expect_valid_partition(t);
  EXPECT_GE(t.core_count(), 1u);
}

TEST(Workload, Validation) {
  EXPECT_NO_THROW(validate(WorkloadSpec{0, 0, 1, 4}));
  EXPECT_NO_THROW(validate(WorkloadSpec{1024, 1024, 1024, 1024}));
  EXPECT_THROW(validate(WorkloadSpec{8, 8, 4, 4}), ValidationError);  // comp < read
  EXPECT_THROW(validate(WorkloadSpec{0, 4, 1, 4}), ValidationError);
  EXPECT_THROW(validate(WorkloadSpec{4, 4, 4, 0}), ValidationError);
  EXPECT_THROW(validate(WorkloadSpec{0, 0, 0, 1}), ValidationError);
}

TEST(Sweep, ParseAndRoundTrip) {
  SweepSpec s = parse_sweep(R"({"unit_read": 1024, "unit_write": 1024, "unit_comp": "1024^3",
                                "iterations": 1024, "block_sizes": [1, 2, 4], "thread_counts": [2, 4],
                                "repetitions": 3, "warmups": 0})");
  EXPECT_EQ(s.workload.unit_comp, std::uint64_t{1} << 30);
  EXPECT_EQ(s.block_sizes, (std::vector<std::uint64_t>{1, 2, 4}));
  EXPECT_EQ(s.repetitions, 3u);
  EXPECT_EQ(s.warmups, 0u);
  EXPECT_EQ(parse_sweep(to_text(s)), s);
}

TEST(Sweep, Defaults) {
  SweepSpec s = parse_sweep(R"({"unit_read": 4, "unit_write": 4, "unit_comp": 4,
                                "block_sizes": [1], "thread_counts": [1]})");
  EXPECT_EQ(s.workload.iterations, kDefaultIterations);
  EXPECT_EQ(s.repetitions, kDefaultRepetitions);
  EXPECT_EQ(s.warmups, kDefaultWarmups);
}

TEST(Sweep, RejectsUnorderedAxes) {
  const char* base = R"({"unit_read": 4, "unit_write": 4, "unit_comp": 4, )";
  EXPECT_THROW(parse_sweep(std::string(base) + R"("block_sizes": [2, 1], "thread_counts": [1]})"),
               ValidationError);
  EXPECT_THROW(parse_sweep(std::string(base) + R"("block_sizes": [1, 1], "thread_counts": [1]})"),
               ValidationError);
  EXPECT_THROW(parse_sweep(std::string(base) + R"("block_sizes": [], "thread_counts": [1]})"),
               ValidationError);
  EXPECT_THROW(parse_sweep(std::string(base) + R"("block_sizes": [0, 1], "thread_counts": [1]})"),
               ValidationError);
  EXPECT_THROW(parse_sweep(std::string(base) + R"("block_sizes": [1], "thread_counts": [1],
                                                  "repetitions": 0})"),
               ValidationError);
}

TEST(CountLiteral, Grammar) {
  EXPECT_EQ(parse_count_literal("1024"), 1024u);
  EXPECT_EQ(parse_count_literal("1024^3"), std::uint64_t{1} << 30);
  EXPECT_EQ(parse_count_literal("2^60"), std::uint64_t{1} << 60);
  EXPECT_EQ(parse_count_literal("3e4"), 30000u);
  EXPECT_EQ(parse_count_literal("9223372036854775807"), (std::uint64_t{1} << 63) - 1);
  EXPECT_EQ(parse_count_literal("2^0"), 1u);
}

TEST(CountLiteral, Rejections) {
  for (const char* bad : {"1024^7", "2^63", "9223372036854775808", "1e19", "", "abc", "2^", "^3", "-1",
                          "1.5", "2^3^4", " 12"})
    EXPECT_THROW(parse_count_literal(bad), ParseError) << '"' << bad << '"';
}

}  // namespace
}  // namespace blockwise
