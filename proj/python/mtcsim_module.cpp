#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mtc/config.hpp"
#include "mtc/engine.hpp"
#include "mtc/experiment.hpp"
#include "mtc/metrics.hpp"

namespace py = pybind11;
using namespace mtc;

namespace {

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["makespan_s"] = r.makespan_s;
  d["allocated_core_s"] = r.allocated_core_s;
  d["busy_core_s"] = r.busy_core_s;
  d["utilization"] = r.utilization;
  d["transfers"] = r.transfers;
  d["tasks_done"] = r.tasks_done;
  d["task_starts"] = r.task_starts;
  d["distinct_tasks_started"] = r.distinct_tasks_started;
  d["task_failures"] = r.task_failures;
  d["flushes"] = r.flushes;
  d["dispatch_p50_s"] = r.dispatch_p50_s;
  d["dispatch_p90_s"] = r.dispatch_p90_s;
  d["dispatch_p99_s"] = r.dispatch_p99_s;
  d["dispatch_max_s"] = r.dispatch_max_s;
  d["generated"] = r.generated;
  d["pruned"] = r.pruned;
  d["failed_permanent"] = r.failed_permanent;
  d["completed"] = r.completed;
  py::dict bytes_by_route;
  for (const auto& [route, bytes] : r.bytes_by_route)
    bytes_by_route[route_name(route)] = bytes;
  d["bytes_by_route"] = bytes_by_route;
  py::list deciles;
  for (double u : r.decile_utilization) deciles.append(u);
  d["decile_utilization"] = deciles;
  return d;
}

py::dict outcome_dict(const ExperimentOutcome& out) {
  py::dict d;
  d["name"] = out.name;
  d["csv_path"] = out.csv_path;
  py::list seeds;
  for (const SeedOutcome& so : out.seeds) {
    py::dict row = report_dict(so.result.report);
    row["seed"] = so.seed;
    row["end_time"] = so.result.end_time;
    row["trace_path"] = so.trace_path;
    seeds.append(row);
  }
  d["seeds"] = seeds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mtcsim, m) {
  m.doc() = "Discrete-event simulator for many-task scheduling policies";
  m.attr("__version__") = "0.1.0";

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static("load", &ExperimentConfig::load, py::arg("path"),
                  "Read an experiment file from disk")
      .def_static("parse", &ExperimentConfig::parse, py::arg("text"),
                  py::arg("origin") = "<string>",
                  "Parse experiment text; origin labels error messages")
      .def("validate", &ExperimentConfig::validate)
      .def_property_readonly("name",
                             [](const ExperimentConfig& c) { return c.run.name; })
      .def_property_readonly("seeds",
                             [](const ExperimentConfig& c) { return c.run.seeds; })
      .def_property_readonly(
          "node_count", [](const ExperimentConfig& c) { return c.platform.node_count; })
      .def_property_readonly(
          "archetype", [](const ExperimentConfig& c) { return c.workload.archetype; });

  m.def(
      "simulate",
      [](const ExperimentConfig& cfg, std::uint64_t seed) {
        Engine engine(cfg, build_workload(cfg.workload, seed), seed);
        RunResult r = engine.run();
        py::dict d = report_dict(r.report);
        d["end_time"] = r.end_time;
        return d;
      },
      py::arg("config"), py::arg("seed") = 1,
      "Run one seed in memory and return its summary metrics");

  m.def(
      "workload_size",
      [](const ExperimentConfig& cfg, std::uint64_t seed) {
        BuiltWorkload wl = build_workload(cfg.workload, seed);
        return py::make_tuple(wl.graph.task_count(), wl.graph.data_count());
      },
      py::arg("config"), py::arg("seed") = 1,
      "Build the workload and return (task_count, data_count)");

  m.def("run_experiment",
        [](const ExperimentConfig& cfg) { return outcome_dict(run_experiment(cfg)); },
        py::arg("config"),
        "Run every configured seed, writing traces and a CSV summary");

  m.def(
      "recover_experiment",
      [](const ExperimentConfig& cfg, const std::string& checkpoint_path,
         std::int64_t nodes) {
        return outcome_dict(recover_experiment(cfg, checkpoint_path, nodes));
      },
      py::arg("config"), py::arg("checkpoint_path"), py::arg("nodes"),
      "Resume a checkpointed run on a fixed number of nodes");

  m.def(
      "compare",
      [](const std::vector<ExperimentConfig>& cfgs) {
        CompareOutcome out = compare_experiments(cfgs);
        py::list rows;
        for (const CompareRow& r : out.rows) {
          py::dict row;
          row["name"] = r.name;
          row["mean_makespan_s"] = r.mean_makespan_s;
          row["mean_utilization"] = r.mean_utilization;
          row["total_bytes_moved"] = r.total_bytes_moved;
          row["makespan_delta_pct"] = r.makespan_delta_pct;
          rows.append(row);
        }
        py::dict d;
        d["rows"] = rows;
        d["table"] = out.table;
        return d;
      },
      py::arg("configs"),
      "Run several configs over the same workload and tabulate the deltas");

  m.def("validate_experiment", &validate_experiment, py::arg("config"),
        "Static checks beyond config validation: the workload builds and fits");
}
