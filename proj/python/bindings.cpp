// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "blockwise/bench.hpp"
#include "blockwise/cli.hpp"
#include "blockwise/config.hpp"
#include "blockwise/costmodel.hpp"
#include "blockwise/executor.hpp"
#include "blockwise/workload.hpp"

namespace py = pybind11;
using namespace blockwise;

namespace {

ChunkingStrategy to_strategy(const std::string& kind, std::uint64_t block_size) {
  if (kind == "fixed") return FixedBlock{block_size};
  if (kind == "guided") return Guided{};
  if (kind == "cost-model") return CostModelChoice{block_size};
  throw py::value_error("strategy must be fixed, guided or cost-model");
}

py::dict stats_dict(const RunStats& s) {
  py::dict d;
  d["successful_claims"] = s.successful_claims;
  d["terminal_claims"] = s.terminal_claims;
  d["per_participant"] = s.per_participant;
  d["elapsed_ns"] = s.elapsed_ns;
  py::list chunks;
  for (const auto& c : s.chunks) chunks.append(py::make_tuple(c.begin, c.end, c.participant));
  d["chunks"] = chunks;
  return d;
}

}  // namespace

PYBIND11_MODULE(_blockwise, m) {
  m.doc() = "Chunked parallel-for with cost-model block sizes";

  py::register_exception<Error>(m, "BlockwiseError");

  py::class_<WorkloadSpec>(m, "WorkloadSpec")
      .def(py::init([](std::uint64_t read, std::uint64_t write, std::uint64_t comp, std::uint64_t iterations) {
             return WorkloadSpec{read, write, comp, iterations};
           }),
           py::arg("unit_read") = 0, py::arg("unit_write") = 0, py::arg("unit_comp") = 1,
           py::arg("iterations") = kDefaultIterations)
      .def_readwrite("unit_read", &WorkloadSpec::unit_read)
      .def_readwrite("unit_write", &WorkloadSpec::unit_write)
      .def_readwrite("unit_comp", &WorkloadSpec::unit_comp)
      .def_readwrite("iterations", &WorkloadSpec::iterations)
      .def("__repr__", [](const WorkloadSpec& w) {
        std::ostringstream s;
        s << "WorkloadSpec(unit_read=" << w.unit_read << ", unit_write=" << w.unit_write
          << ", unit_comp=" << w.unit_comp << ", iterations=" << w.iterations << ")";
        return s.str();
      });

  py::class_<Features>(m, "Features")
      .def(py::init<double, double, double, double, double>(), py::arg("G"), py::arg("T"), py::arg("R"),
           py::arg("W"), py::arg("C"))
      .def_readwrite("G", &Features::groups)
      .def_readwrite("T", &Features::threads)
      .def_readwrite("R", &Features::read)
      .def_readwrite("W", &Features::write)
      .def_readwrite("C", &Features::comp)
      .def("as_tuple", [](const Features& f) { return py::make_tuple(f.groups, f.threads, f.read, f.write, f.comp); });

  py::class_<Weights>(m, "Weights")
      .def(py::init<>())
      .def_static("published", &Weights::published)
      .def_readwrite("alpha", &Weights::alpha)
      .def_readwrite("delta0", &Weights::delta0)
      .def_readwrite("beta0", &Weights::beta0)
      .def_readwrite("beta1", &Weights::beta1)
      .def_readwrite("beta2", &Weights::beta2)
      .def_readwrite("beta3", &Weights::beta3)
      .def_readwrite("delta1", &Weights::delta1)
      .def("to_list", [](const Weights& w) {
        auto a = w.to_array();
        return std::vector<double>(a.begin(), a.end());
      })
      .def_static("from_list", [](const std::vector<double>& v) {
        if (v.size() != Weights::kCount) throw py::value_error("expected 7 weights");
        std::array<double, Weights::kCount> a{};
        std::copy(v.begin(), v.end(), a.begin());
        return Weights::from_array(a);
      });

  m.def("parse_comp_literal", &cli::parse_comp_literal, py::arg("text"));
  m.def("normalize", &normalize, py::arg("groups"), py::arg("threads"), py::arg("workload"));
  m.def("predict_raw", [](const Weights& w, const Features& f) { return predict_raw(w, f); }, py::arg("weights"),
        py::arg("features"));
  m.def(
      "predict",
      [](const Weights& w, const Features& f, std::optional<std::uint64_t> cap) {
        PredictOptions o;
        o.iteration_cap = cap;
        return predict(w, f, o);
      },
      py::arg("weights"), py::arg("features"), py::arg("iteration_cap") = py::none());

  auto rows_from = [](const std::vector<std::pair<Features, double>>& rows) {
    TrainingSet set;
    for (const auto& [f, b] : rows) set.push_back({f, b});
    return set;
  };
  m.def(
      "loss", [rows_from](const Weights& w, const std::vector<std::pair<Features, double>>& rows) {
        return loss(w, rows_from(rows));
      },
      py::arg("weights"), py::arg("rows"));
  m.def(
      "fit",
      [rows_from](const std::vector<std::pair<Features, double>>& rows, const Weights& init, std::size_t max_epochs,
                  double step_size, double tolerance) {
        FitConfig c;
        c.max_epochs = max_epochs;
        c.step_size = step_size;
        c.tolerance = tolerance;
        FitResult r;
        {
          py::gil_scoped_release release;
          r = fit(rows_from(rows), init, c);
        }
        py::dict d;
        d["weights"] = r.weights;
        d["initial_loss"] = r.initial_loss;
        d["final_loss"] = r.final_loss;
        d["epochs"] = r.epochs;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("rows"), py::arg("init"), py::arg("max_epochs") = FitConfig{}.max_epochs,
      py::arg("step_size") = FitConfig{}.step_size, py::arg("tolerance") = FitConfig{}.tolerance);
  m.def("random_weights", &random_weights, py::arg("seed"));

  m.def("next_chunk_guided", &next_chunk_guided, py::arg("remaining"), py::arg("participants"));
  m.def("effective_work", &effective_work, py::arg("workload"));
  m.def(
      "unit_task",
      [](py::bytes read, std::uint64_t unit_write, std::uint64_t unit_comp) {
        std::string in = read;
        std::string out(unit_write, '\0');
        const std::uint64_t per_read = in.empty() ? 0 : unit_comp / in.size();
        NullProbe probe;
        unit_task_kernel(std::span(reinterpret_cast<const std::uint8_t*>(in.data()), in.size()),
                         std::span(reinterpret_cast<std::uint8_t*>(out.data()), out.size()), per_read, probe);
        return py::bytes(out);
      },
      py::arg("read"), py::arg("unit_write"), py::arg("unit_comp"),
      "Run the unit task over one read region and return the written bytes.");

  py::class_<ThreadPool>(m, "ThreadPool")
      .def(py::init<std::size_t>(), py::arg("participants"))
      .def_property_readonly("participants", &ThreadPool::participants)
      .def("shutdown", &ThreadPool::shutdown)
      .def(
          "parallel_for",
          [](ThreadPool& pool, std::uint64_t n, const std::function<void(std::uint64_t)>& fn,
             const std::string& strategy, std::uint64_t block_size, bool record_chunks) {
            const ChunkingStrategy s = to_strategy(strategy, block_size);
            RunStats stats;
            {
              py::gil_scoped_release release;
              stats = parallel_for(
                  pool, n, s,
                  [&](std::uint64_t i) {
                    py::gil_scoped_acquire acquire;
                    fn(i);
                  },
                  RunOptions{record_chunks});
            }
            return stats_dict(stats);
          },
          py::arg("n"), py::arg("fn"), py::arg("strategy") = "fixed", py::arg("block_size") = 1,
          py::arg("record_chunks") = false);

  m.def("estimate_cost", [](std::uint64_t n, std::uint64_t b, double l, double work, std::size_t t) {
    return estimate_cost(n, b, l, work, t).total;
  }, py::arg("iterations"), py::arg("block_size"), py::arg("faa_latency"), py::arg("work"), py::arg("threads"));
  m.def("amdahl_speedup", &amdahl_speedup, py::arg("parallel_fraction"), py::arg("threads"));

  m.def("detect_topology", []() { return to_text(detect_topology()); },
        "Detected topology as JSON text.");
  m.def(
      "sweep",
      [](const std::string& sweep_json, const std::string& topology_json, std::uint64_t seed) {
        SweepSpec spec = parse_sweep(sweep_json);
        Topology topo = parse_topology(topology_json);
        SweepOptions o;
        o.seed = seed;
        std::vector<SweepResult> results;
        {
          py::gil_scoped_release release;
          results = run_sweep(spec, topo, o);
        }
        std::ostringstream csv;
        write_results_csv(csv, results);
        py::dict best;
        for (const auto& [t, b] : best_block(results)) best[py::int_(t)] = b;
        py::dict d;
        d["csv"] = csv.str();
        d["best_block"] = best;
        return d;
      },
      py::arg("sweep_json"), py::arg("topology_json"), py::arg("seed") = 42,
      "Run a sweep; returns the results CSV and the best block per thread count.");
}
