#include "mtc/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtc/metrics.hpp"

namespace mtc {

namespace {

std::string run_label(const ExperimentConfig& cfg) {
  return cfg.run.name.empty() ? "run" : cfg.run.name;
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io, "cannot write " + path);
  out << body;
  if (!out) raise(Errc::io, "short write to " + path);
}

std::string render_trace(const std::vector<SimEvent>& trace) {
  std::string body;
  for (const SimEvent& e : trace) {
    body += format_trace_line(e);
    body += '\n';
  }
  return body;
}

std::string workload_signature(const WorkloadSpec& w) {
  std::ostringstream sig;
  sig << w.archetype << '\n'
      << w.file << '\n'
      << w.tasks << '\n'
      << w.runtime.to_string() << '\n'
      << w.common_bytes << '\n'
      << w.unique_bytes << '\n'
      << w.output_bytes << '\n'
      << w.intermediate_bytes << '\n'
      << w.with_estimates << '\n'
      << w.m << ' ' << w.k << '\n'
      << w.stages << ' ' << w.width << '\n'
      << w.depth << ' ' << w.branching << '\n'
      << format_double(w.prune_probability) << '\n'
      << w.body_size << ' ' << w.converge_at;
  return sig.str();
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.run.output_dir);
  std::string label = run_label(cfg);

  ExperimentOutcome out;
  out.name = label;
  std::string csv = csv_header() + "\n";
  for (std::uint64_t seed : cfg.run.seeds) {
    BuiltWorkload wl = build_workload(cfg.workload, seed);
    Engine engine(cfg, std::move(wl), seed);
    SeedOutcome so;
    so.seed = seed;
    so.result = engine.run();
    if (cfg.run.trace) {
      so.trace_path = cfg.run.output_dir + "/" + label + "-s" +
                      std::to_string(seed) + ".trace";
      write_text_file(so.trace_path, render_trace(engine.trace()));
    }
    csv += csv_row(label, cfg.workload.archetype, seed, so.result.report);
    csv += '\n';
    out.seeds.push_back(std::move(so));
  }
  out.csv_path = cfg.run.output_dir + "/" + label + ".csv";
  write_text_file(out.csv_path, csv);
  return out;
}

ExperimentOutcome recover_experiment(const ExperimentConfig& cfg,
                                     const std::string& checkpoint_path,
                                     std::int64_t nodes) {
  cfg.validate();
  std::filesystem::create_directories(cfg.run.output_dir);
  std::string label = run_label(cfg);

  Checkpoint cp = Checkpoint::load(checkpoint_path);
  Engine engine(cfg, cp, nodes);
  SeedOutcome so;
  so.seed = cp.seed;
  so.result = engine.run();

  ExperimentOutcome out;
  out.name = label;
  if (cfg.run.trace) {
    so.trace_path = cfg.run.output_dir + "/" + label + "-s" +
                    std::to_string(cp.seed) + "-recovered.trace";
    write_text_file(so.trace_path, render_trace(engine.trace()));
  }
  std::string csv = csv_header() + "\n" +
                    csv_row(label, cfg.workload.archetype, cp.seed, so.result.report) +
                    "\n";
  out.csv_path = cfg.run.output_dir + "/" + label + "-recovered.csv";
  write_text_file(out.csv_path, csv);
  out.seeds.push_back(std::move(so));
  return out;
}

CompareOutcome compare_experiments(const std::vector<ExperimentConfig>& cfgs) {
  if (cfgs.size() < 2)
    raise(Errc::validation, "compare needs at least two configs");
  const std::string base_sig = workload_signature(cfgs.front().workload);
  for (const ExperimentConfig& c : cfgs) {
    if (workload_signature(c.workload) != base_sig)
      raise(Errc::incompatible_workloads,
            "config '" + run_label(c) + "' runs a different workload");
    if (c.run.seeds != cfgs.front().run.seeds)
      raise(Errc::incompatible_workloads,
            "config '" + run_label(c) + "' runs different seeds");
  }

  CompareOutcome out;
  for (const ExperimentConfig& c : cfgs) {
    ExperimentOutcome eo = run_experiment(c);
    CompareRow row;
    row.name = eo.name;
    double n = static_cast<double>(eo.seeds.size());
    for (const SeedOutcome& so : eo.seeds) {
      row.mean_makespan_s += so.result.report.makespan_s / n;
      row.mean_utilization += so.result.report.utilization / n;
      for (const auto& [route, bytes] : so.result.report.bytes_by_route)
        row.total_bytes_moved += bytes;
    }
    out.rows.push_back(row);
  }
  double base = out.rows.front().mean_makespan_s;
  for (CompareRow& row : out.rows)
    row.makespan_delta_pct =
        base > 0 ? (row.mean_makespan_s - base) / base * 100.0 : 0.0;

  std::string table =
      "config\tmean-makespan-s\tmean-utilization\tbytes-moved\tmakespan-delta-pct\n";
  for (const CompareRow& row : out.rows) {
    table += row.name + "\t" + format_double(row.mean_makespan_s) + "\t" +
             format_double(row.mean_utilization) + "\t" +
             std::to_string(row.total_bytes_moved) + "\t" +
             format_double(row.makespan_delta_pct) + "\n";
  }
  out.table = table;
  return out;
}

void validate_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.data.intermediate == DataPolicy::Intermediate::Ifs && !cfg.platform.ifs_enabled)
    raise(Errc::validation,
          "intermediate data policy routes through an ifs the platform lacks");
  std::uint64_t seed = cfg.run.seeds.empty() ? 1 : cfg.run.seeds.front();
  BuiltWorkload wl = build_workload(cfg.workload, seed);
  wl.graph.validate_structure();
  for (const TaskId& id : wl.graph.task_ids()) {
    const TaskSpec& t = wl.graph.task(id);
    if (t.width > cfg.platform.node_count)
      raise(Errc::validation, "task '" + id + "' is wider than the machine");
    if (t.width > 1 && cfg.dispatch.mode == DispatchPolicy::Mode::Push)
      raise(Errc::validation, "push dispatch cannot place multi-node tasks");
    if (t.width > 1 && !t.group.empty())
      raise(Errc::validation, "grouped task '" + id + "' must have width 1");
    std::int64_t working_set = 0;
    for (const DataId& d : t.inputs) working_set += wl.graph.data(d).size_bytes;
    for (const DataId& d : t.outputs) working_set += wl.graph.data(d).size_bytes;
    if (working_set > cfg.platform.local_storage_capacity_bytes)
      raise(Errc::validation, "task '" + id + "' needs " +
                                  std::to_string(working_set) +
                                  " bytes of local storage, more than a node has");
  }
}

}  // namespace mtc
