// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include "blockwise/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "blockwise/bench.hpp"
#include "blockwise/config.hpp"
#include "blockwise/costmodel.hpp"
#include "json.hpp"

namespace blockwise::cli {

std::uint64_t parse_comp_literal(std::string_view text) { return parse_count_literal(text); }

namespace {

using json = nlohmann::json;

// Flag values are checked before any work starts; failures here exit 1.
class UsageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
auto usage_checked(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw UsageFailure(e.what());
  }
}

std::uint64_t literal(const std::string& flag, const std::string& value) {
  return usage_checked([&] {
    try {
      return parse_comp_literal(value);
    } catch (const ParseError& e) {
      throw ParseError(flag + ": " + e.what());
    }
  });
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream s(text);
  while (std::getline(s, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct TopologySource {
  std::string file;
  bool detect = false;

  void add_to(CLI::App* app) {
    auto* f = app->add_option("--topo", file, "Topology file (JSON: groups, workers, pin)");
    app->add_flag("--detect", detect, "Detect the topology from the OS (default when --topo is absent)")
        ->excludes(f);
  }

  Topology resolve() const { return file.empty() ? detect_topology() : load_topology(file); }
};

struct HarnessFlags {
  std::uint64_t seed = 42;
  bool spin = false;
  bool spread = false;
  std::string comp_cap = "65536";

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "Arena seed")->capture_default_str();
    app->add_flag("--spin", spin, "Spin between batches instead of blocking");
    app->add_flag("--spread", spread, "Pin participants round-robin across core groups");
    app->add_option("--comp-cap", comp_cap, "Cap on increments per read byte")->capture_default_str();
  }

  void apply(HarnessOptions& o) const {
    o.seed = seed;
    o.idle = spin ? IdlePolicy::kSpin : IdlePolicy::kBlock;
    o.order = spread ? PinOrder::kSpread : PinOrder::kCompact;
    o.computation_cap = literal("--comp-cap", comp_cap);
  }
};

// Writes to `path`, or to `out` when path is "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& out) {
    if (path == "-") {
      stream_ = &out;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ParseError("cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

void check_format(const std::string& format) {
  if (format != "csv" && format != "md" && format != "json-lines")
    throw UsageFailure("--format must be csv, md or json-lines");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chunked parallel-for with cost-model block sizes, plus its benchmark harness", "blockwise"};
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print help for every subcommand and flag");
  app.require_subcommand(1, 1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Time every (threads, block size) cell of a sweep file");
  std::string sweep_config, sweep_out = "-", sweep_format = "csv", sweep_summary;
  TopologySource sweep_topo;
  HarnessFlags sweep_flags;
  sweep->add_option("--config", sweep_config, "Sweep file (JSON)")->required();
  sweep_topo.add_to(sweep);
  sweep->add_option("--out", sweep_out, "Output path, - for stdout")->capture_default_str();
  sweep->add_option("--format", sweep_format, "csv | md | json-lines")->capture_default_str();
  sweep->add_option("--summary", sweep_summary, "Also write the best-block summary (JSON) here");
  sweep_flags.add_to(sweep);

  // compare
  auto* compare = app.add_subcommand("compare", "Compare chunking strategies over workload variants");
  std::string cmp_workload, cmp_strategies = "guided,cost-model", cmp_weights = "published";
  std::string cmp_out = "-", cmp_format = "md";
  std::size_t cmp_threads = 0, cmp_reps = 0, cmp_warmups = 0;
  bool cmp_reps_set = false, cmp_warmups_set = false;
  TopologySource cmp_topo;
  HarnessFlags cmp_flags;
  compare->add_option("--workload", cmp_workload, "Workload file (JSON with threads and variants)")->required();
  compare->add_option("--strategies", cmp_strategies, "Comma list of guided, cost-model, fixed:<B>")
      ->capture_default_str();
  compare->add_option("--weights", cmp_weights, "published or a weights file")->capture_default_str();
  compare->add_option("--threads", cmp_threads, "Participants (overrides the workload file)");
  auto* reps_opt = compare->add_option("--repetitions", cmp_reps, "Timed repetitions per cell (default 9)");
  auto* warm_opt = compare->add_option("--warmups", cmp_warmups, "Discarded runs per cell (default 2)");
  compare->add_option("--out", cmp_out, "Output path, - for stdout")->capture_default_str();
  compare->add_option("--format", cmp_format, "csv | md | json-lines")->capture_default_str();
  cmp_topo.add_to(compare);
  cmp_flags.add_to(compare);

  // fit
  auto* fitcmd = app.add_subcommand("fit", "Fit cost-model weights to a training CSV");
  std::string fit_data, fit_init = "random", fit_out = "weights.json", fit_trace;
  bool fit_raw = false;
  std::uint64_t fit_seed = 7;
  FitConfig fit_config;
  fitcmd->add_option("--data", fit_data, "Training CSV with header G,T,R,W,C,B")->required();
  fitcmd->add_flag("--raw", fit_raw, "CSV holds raw counts (normalized on load)");
  fitcmd->add_option("--init", fit_init, "published | random")->capture_default_str();
  fitcmd->add_option("--seed", fit_seed, "Seed for --init random")->capture_default_str();
  fitcmd->add_option("--step", fit_config.step_size, "Initial line-search step")->capture_default_str();
  fitcmd->add_option("--epochs", fit_config.max_epochs, "Maximum epochs")->capture_default_str();
  fitcmd->add_option("--tol", fit_config.tolerance, "Relative loss-drop stopping tolerance")
      ->capture_default_str();
  fitcmd->add_option("--out", fit_out, "Weights file to write")->capture_default_str();
  fitcmd->add_option("--trace", fit_trace, "Write the (epoch, loss) trace as CSV");

  // predict
  auto* predictcmd = app.add_subcommand("predict", "Predict the block size for one configuration");
  std::size_t pr_groups = 1, pr_threads = 1;
  std::string pr_read = "1024", pr_write = "1024", pr_comp = "1024", pr_weights = "published", pr_iters;
  bool pr_show_raw = false;
  predictcmd->add_option("--groups", pr_groups, "Core groups spanned")->capture_default_str();
  predictcmd->add_option("--threads", pr_threads, "Participants")->capture_default_str();
  predictcmd->add_option("--read", pr_read, "unit_read bytes (accepts 2^n, 1024^k)")->capture_default_str();
  predictcmd->add_option("--write", pr_write, "unit_write bytes")->capture_default_str();
  predictcmd->add_option("--comp", pr_comp, "unit_comp increments")->capture_default_str();
  predictcmd->add_option("--weights", pr_weights, "published or a weights file")->capture_default_str();
  predictcmd->add_option("--iterations", pr_iters, "Clamp the prediction to N (default: unclamped)");
  predictcmd->add_flag("--show-raw", pr_show_raw, "Also print the unrounded ratio");

  // topo
  auto* topocmd = app.add_subcommand("topo", "Print the topology (detected or from a file)");
  TopologySource topo_src;
  topo_src.add_to(topocmd);

  // faa-bench
  auto* faa = app.add_subcommand("faa-bench", "Measure shared-counter fetch-and-add cost");
  std::string faa_participants = "1", faa_claims = "100000";
  bool faa_spread = false, faa_spin = false;
  TopologySource faa_topo;
  faa->add_option("--participants", faa_participants, "Comma list of participant counts")
      ->capture_default_str();
  faa->add_option("--claims", faa_claims, "Successful claims per measurement (>= 100000)")
      ->capture_default_str();
  faa->add_flag("--spread", faa_spread, "Pin participants round-robin across core groups");
  faa->add_flag("--spin", faa_spin, "Spin between batches instead of blocking");
  faa_topo.add_to(faa);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }
  cmp_reps_set = reps_opt->count() > 0;
  cmp_warmups_set = warm_opt->count() > 0;

  try {
    if (sweep->parsed()) {
      check_format(sweep_format);
      SweepSpec spec = load_sweep(sweep_config);
      Topology topo = sweep_topo.resolve();
      SweepOptions options;
      sweep_flags.apply(options);
      Sink sink(sweep_out, out);
      std::vector<SweepResult> results;
      int code = kOk;
      try {
        results = run_sweep(spec, topo, options);
      } catch (const SweepError& e) {
        results = e.partial();
        err << "blockwise: " << e.what() << '\n';
        code = kRuntime;
      }
      if (sweep_format == "csv")
        write_results_csv(*sink, results);
      else if (sweep_format == "md")
        write_results_markdown(*sink, results);
      else
        write_results_json_lines(*sink, results);
      if (code != kOk) *sink << "# FAILED: sweep incomplete, " << results.size() << " cells written\n";
      if (!sweep_summary.empty() && !results.empty()) {
        Sink summary(sweep_summary, out);
        write_summary(*summary, results);
      }
      return code;
    }

    if (compare->parsed()) {
      check_format(cmp_format);
      const Weights weights = usage_checked([&] { return resolve_weights(cmp_weights); });
      std::vector<StrategySpec> strategies;
      for (const auto& s : split_list(cmp_strategies))
        strategies.push_back(usage_checked([&] { return parse_strategy(s, weights); }));
      if (strategies.size() < 2) throw UsageFailure("--strategies needs at least two entries");

      std::ifstream in(cmp_workload);
      if (!in) throw ParseError("cannot open " + cmp_workload);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError(std::string("workload: ") + e.what());
      }
      CompareOptions options;
      cmp_flags.apply(options);
      std::vector<WorkloadSpec> variants;
      try {
        options.threads = j.value("threads", std::size_t{8});
        options.repetitions = j.value("repetitions", kDefaultRepetitions);
        options.warmups = j.value("warmups", kDefaultWarmups);
        const std::uint64_t iterations = j.value("iterations", kDefaultIterations);
        for (const auto& v : j.at("variants")) {
          auto count = [&](const char* key, std::uint64_t fallback) -> std::uint64_t {
            if (!v.contains(key)) return fallback;
            const auto& x = v.at(key);
            return x.is_string() ? parse_count_literal(x.get<std::string>()) : x.get<std::uint64_t>();
          };
          WorkloadSpec w{count("unit_read", 1024), count("unit_write", 1024), count("unit_comp", 1024),
                         count("iterations", iterations)};
          validate(w);
          variants.push_back(w);
        }
      } catch (const json::exception& e) {
        throw ParseError(std::string("workload: ") + e.what());
      }
      if (cmp_threads != 0) options.threads = cmp_threads;
      if (cmp_reps_set) options.repetitions = cmp_reps;
      if (cmp_warmups_set) options.warmups = cmp_warmups;

      Topology topo = cmp_topo.resolve();
      ComparisonTable table = compare_strategies(variants, topo, strategies, options);
      Sink sink(cmp_out, out);
      if (cmp_format == "csv")
        write_comparison_csv(*sink, table);
      else if (cmp_format == "md")
        write_comparison_markdown(*sink, table);
      else
        write_comparison_json_lines(*sink, table);
      return kOk;
    }

    if (fitcmd->parsed()) {
      if (fit_init != "published" && fit_init != "random") throw UsageFailure("--init must be published or random");
      TrainingSet data = load_training_csv(fit_data, fit_raw);
      const Weights init = fit_init == "published" ? Weights::published() : random_weights(fit_seed);
      FitResult result = fit(data, init, fit_config);
      WeightsFile file{result.weights, FitMetadata{result.final_loss, result.epochs,
                                                   fit_init == "random" ? std::optional(fit_seed) : std::nullopt}};
      save_weights(fit_out, file);
      if (!fit_trace.empty()) {
        Sink trace(fit_trace, out);
        *trace << "epoch,loss\n" << std::setprecision(17);
        for (const auto& p : result.trace) *trace << p.epoch << ',' << p.loss << '\n';
      }
      out << std::setprecision(17) << "initial loss " << result.initial_loss << "\nfinal loss "
          << result.final_loss << "\nepochs " << result.epochs << "\nweights " << fit_out << '\n';
      return kOk;
    }

    if (predictcmd->parsed()) {
      WorkloadSpec spec{literal("--read", pr_read), literal("--write", pr_write), literal("--comp", pr_comp),
                        kDefaultIterations};
      PredictOptions options;
      if (!pr_iters.empty()) options.iteration_cap = literal("--iterations", pr_iters);
      const Weights weights = usage_checked([&] { return resolve_weights(pr_weights); });
      const Features f = usage_checked([&] { return normalize(pr_groups, pr_threads, spec); });
      if (pr_show_raw) out << std::setprecision(17) << predict_raw(weights, f) << ' ';
      out << predict(weights, f, options) << '\n';
      return kOk;
    }

    if (topocmd->parsed()) {
      out << to_text(topo_src.resolve());
      return kOk;
    }

    if (faa->parsed()) {
      const std::uint64_t claims = literal("--claims", faa_claims);
      if (claims < kDefaultFaaClaims) throw UsageFailure("--claims must be >= 100000");
      std::vector<std::size_t> counts;
      for (const auto& s : split_list(faa_participants)) {
        auto v = literal("--participants", s);
        if (v < 1) throw UsageFailure("--participants values must be >= 1");
        counts.push_back(static_cast<std::size_t>(v));
      }
      Topology topo = faa_topo.resolve();
      const PinOrder order = faa_spread ? PinOrder::kSpread : PinOrder::kCompact;
      out << "participants,groups,claims,elapsed_ns,latency_ns\n";
      for (std::size_t p : counts) {
        ThreadPool pool(pool_options(topo.with_workers(p), order,
                                     faa_spin ? IdlePolicy::kSpin : IdlePolicy::kBlock));
        FaaLatencySample s = measure_faa_latency(pool, claims);
        out << p << ',' << topo.groups_spanned(p, order) << ',' << s.claims << ',' << s.elapsed_ns << ','
            << std::fixed << std::setprecision(2) << s.latency_ns << std::defaultfloat << '\n';
      }
      return kOk;
    }
  } catch (const UsageFailure& e) {
    err << "blockwise: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "blockwise: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace blockwise::cli
