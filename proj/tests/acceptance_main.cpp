// Acceptance checks for the simulator: each criterion prints one PASS/FAIL
// line; the process exits nonzero if any fail.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtc/datamgr.hpp"
#include "mtc/engine.hpp"
#include "mtc/experiment.hpp"
#include "mtc/metrics.hpp"

using namespace mtc;

namespace {

ExperimentConfig static_cfg(std::int64_t nodes, int granularity = 1) {
  ExperimentConfig cfg;
  cfg.platform.node_count = nodes;
  cfg.platform.block_granularity_nodes = granularity;
  cfg.provision.mode = ProvisionPolicy::Mode::Static;
  cfg.provision.static_nodes = nodes;
  return cfg;
}

BuiltWorkload skewed4() {
  BuiltWorkload wl;
  for (int i = 0; i < 4; ++i) {
    TaskSpec t;
    t.id = "t" + std::to_string(i);
    t.runtime_s = i == 3 ? 400 : 100;
    wl.graph.add_task(t);
  }
  return wl;
}

WorkloadSpec sweep_spec(std::int64_t tasks, const Distribution& runtime) {
  WorkloadSpec spec;
  spec.archetype = "sweep";
  spec.tasks = tasks;
  spec.runtime = runtime;
  spec.runtime_set = true;
  return spec;
}

std::string fmt(double v) { return format_double(v); }

// 4 tasks of [100,100,100,400] s on 4 workers: a static allocation idles
// three nodes under the straggler, per-node dynamic release does not.
std::string long_tail_oracle() {
  Engine stat(static_cfg(4), skewed4(), 1);
  RunReport sr = stat.run().report;
  if (sr.utilization != 0.4375)
    return "static utilization " + fmt(sr.utilization) + ", wanted 0.4375";
  if (sr.decile_utilization[9] != 0.25)
    return "final decile " + fmt(sr.decile_utilization[9]) + ", wanted 0.25";

  ExperimentConfig dyn = static_cfg(8);
  dyn.provision.mode = ProvisionPolicy::Mode::Dynamic;
  dyn.provision.growth = ProvisionPolicy::Growth::Constant;
  dyn.provision.start_blocks = 1;
  dyn.provision.max_outstanding = 1;
  dyn.provision.idle_release_after_s = 0;
  Engine rel(dyn, skewed4(), 1);
  RunReport dr = rel.run().report;
  if (dr.utilization != 1.0)
    return "dynamic utilization " + fmt(dr.utilization) + ", wanted 1";
  return "";
}

ExperimentConfig dock_like_static() {
  ExperimentConfig cfg = static_cfg(128, 64);
  cfg.workload = sweep_spec(1000, Distribution::lognormal(713, 560));
  return cfg;
}

ExperimentConfig dock_like_dynamic() {
  ExperimentConfig cfg = dock_like_static();
  cfg.provision.mode = ProvisionPolicy::Mode::Dynamic;
  cfg.provision.growth = ProvisionPolicy::Growth::Geometric;
  cfg.provision.start_blocks = 1;
  cfg.provision.ratio = 2;
  cfg.provision.max_outstanding = 2;
  cfg.provision.idle_release_after_s = 2;
  cfg.provision.partial_release = true;
  return cfg;
}

// A 1000-task heavy-tailed sweep: releasing idle blocks during the tail must
// beat holding the full static allocation, every seed.
std::string dynamic_beats_static() {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Engine stat(dock_like_static(), build_workload(dock_like_static().workload, seed),
                seed);
    Engine dyn(dock_like_dynamic(), build_workload(dock_like_dynamic().workload, seed),
               seed);
    double us = stat.run().report.utilization;
    double ud = dyn.run().report.utilization;
    if (!(ud > us))
      return "seed " + std::to_string(seed) + ": dynamic " + fmt(ud) +
             " not above static " + fmt(us);
  }
  return "";
}

// Homogeneous 60 s tasks on 1000 pull workers with 1 ms dispatch latency:
// utilization before the last 1000 task-ends stays above 0.99.
std::string steady_state_pull() {
  ExperimentConfig cfg = static_cfg(1000);
  cfg.dispatch.dispatch_latency_s = 0.001;
  cfg.workload = sweep_spec(20000, Distribution::constant(60));
  Engine eng(cfg, build_workload(cfg.workload, 1), 1);
  RunResult r = eng.run();
  if (!r.completed) return "run did not complete";
  std::vector<double> ends;
  for (const SimEvent& e : eng.trace())
    if (e.kind == EventKind::task_end) ends.push_back(e.time);
  if (ends.size() != 20000) return "expected 20000 task ends, saw " +
                                   std::to_string(ends.size());
  double horizon = ends[ends.size() - 1000];
  double u = utilization_window(eng.trace(), 1, 0.0, horizon);
  if (!(u > 0.99))
    return "utilization " + fmt(u) + " at horizon " + fmt(horizon) +
           ", wanted > 0.99";
  return "";
}

// A 1 GB common input to 64 cold nodes: broadcast reads it off the shared
// file system once, naive per-node pulls read it 64 times.
std::string broadcast_economy() {
  WorkloadSpec spec = sweep_spec(64, Distribution::constant(60));
  spec.common_bytes = 1000000000;
  spec.common_bytes_set = true;

  ExperimentConfig cfg = static_cfg(64, 64);
  cfg.data.common_input = DataPolicy::CommonInput::PushBroadcast;
  cfg.data.broadcast_fanout = 2;
  Engine push(cfg, build_workload(spec, 1), 1);
  RunReport pr = push.run().report;
  std::int64_t push_reads = pr.bytes_by_route.count(Route::gfs_read)
                                ? pr.bytes_by_route.at(Route::gfs_read)
                                : 0;
  if (push_reads != 1000000000)
    return "broadcast read " + std::to_string(push_reads) + " bytes, wanted 1000000000";

  cfg.data.common_input = DataPolicy::CommonInput::PullOnDemand;
  Engine pull(cfg, build_workload(spec, 1), 1);
  RunReport lr = pull.run().report;
  if (lr.bytes_by_route.at(Route::gfs_read) != 64000000000)
    return "pull read " + std::to_string(lr.bytes_by_route.at(Route::gfs_read)) +
           " bytes, wanted 64000000000";

  std::vector<NodeId> dests{1, 2, 3, 4, 5, 6, 7, 8};
  BroadcastPlan plan = plan_broadcast(0, dests, 2);
  if (plan.depth != 3)
    return "fanout-2 depth over 8 nodes is " + std::to_string(plan.depth) +
           ", wanted 3";
  return "";
}

// Chopping the straggler tail at 90% completion onto one node trades a longer
// makespan for far fewer allocated core-seconds.
std::string tail_chopping() {
  Engine plain(static_cfg(4), skewed4(), 1);
  RunReport base = plain.run().report;

  ExperimentConfig cfg = static_cfg(4);
  cfg.dispatch.chop = ChopPolicy{0.9, 1};
  Engine chopped(cfg, skewed4(), 1);
  RunReport cr = chopped.run().report;

  if (!(cr.allocated_core_s < base.allocated_core_s))
    return "chop allocated " + fmt(cr.allocated_core_s) + " not below " +
           fmt(base.allocated_core_s);
  if (cr.makespan_s < base.makespan_s)
    return "chop makespan " + fmt(cr.makespan_s) + " below no-chop " +
           fmt(base.makespan_s);
  if (cr.makespan_s != 500.0 || cr.allocated_core_s != 800.0)
    return "hand-traced values drifted: makespan " + fmt(cr.makespan_s) +
           ", allocated " + fmt(cr.allocated_core_s);
  if (base.makespan_s != 400.0 || base.allocated_core_s != 1600.0)
    return "no-chop baseline drifted";
  return "";
}

// The same config and seed must replay byte for byte.
std::string determinism() {
  ExperimentConfig cfg = dock_like_dynamic();
  Engine a(cfg, build_workload(cfg.workload, 1), 1);
  RunResult ra = a.run();
  Engine b(cfg, build_workload(cfg.workload, 1), 1);
  RunResult rb = b.run();

  if (a.trace().size() != b.trace().size())
    return "trace lengths differ: " + std::to_string(a.trace().size()) + " vs " +
           std::to_string(b.trace().size());
  for (std::size_t i = 0; i < a.trace().size(); ++i)
    if (format_trace_line(a.trace()[i]) != format_trace_line(b.trace()[i]))
      return "traces diverge at event " + std::to_string(i);
  std::string row_a = csv_row("cfg", "sweep", 1, ra.report);
  std::string row_b = csv_row("cfg", "sweep", 1, rb.report);
  if (row_a != row_b) return "summary rows differ";
  return "";
}

// Depth-8 branch and bound: sibling pruning must cut work below the full
// 511-task tree on every seed, and a zero probability must leave it whole.
std::string pruning_effectiveness() {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RngStream rng(seed, "wl");
    BuiltWorkload wl =
        gen_branch_and_bound(8, 2, 0.5, Distribution::constant(1), 1000, rng);
    Engine eng(static_cfg(16), std::move(wl), seed);
    RunReport r = eng.run().report;
    if (r.generated != 511) return "tree size " + std::to_string(r.generated);
    if (r.tasks_done + r.pruned != 511)
      return "seed " + std::to_string(seed) + ": done " +
             std::to_string(r.tasks_done) + " + pruned " + std::to_string(r.pruned) +
             " != 511";
    if (!(r.tasks_done < 511))
      return "seed " + std::to_string(seed) + " executed the whole tree";
  }
  RngStream rng(1, "wl");
  BuiltWorkload wl = gen_branch_and_bound(8, 2, 0.0, Distribution::constant(1), 1000, rng);
  Engine eng(static_cfg(16), std::move(wl), 1);
  RunReport r = eng.run().report;
  if (r.tasks_done != 511)
    return "with pruning off only " + std::to_string(r.tasks_done) + " of 511 ran";
  return "";
}

// A 3-stage, 64-wide pipeline with 100 MB intermediates: grouping plus
// data-aware placement keeps hand-offs local, and each grouped chain finishes
// in exactly the sum of its stage runtimes.
std::string data_aware_benefit() {
  WorkloadSpec spec;
  spec.archetype = "pipeline";
  spec.stages = 3;
  spec.width = 64;
  spec.runtime = Distribution::lognormal(100, 50);
  spec.runtime_set = true;
  spec.intermediate_bytes = 100000000;
  spec.unique_bytes = 0;
  spec.unique_bytes_set = true;
  spec.output_bytes = 0;

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig local = static_cfg(64);
    local.dispatch.pipeline_grouping = true;
    local.dispatch.data_aware = true;
    local.data.intermediate = DataPolicy::Intermediate::PeerToPeer;
    Engine grouped(local, build_workload(spec, seed), seed);
    RunResult lr = grouped.run();

    ExperimentConfig remote = static_cfg(64);
    Engine spread(remote, build_workload(spec, seed), seed);
    RunResult rr = spread.run();

    std::int64_t local_bytes = 0, remote_bytes = 0;
    for (const auto& [route, bytes] : lr.report.bytes_by_route) local_bytes += bytes;
    for (const auto& [route, bytes] : rr.report.bytes_by_route) remote_bytes += bytes;
    if (!(local_bytes < remote_bytes))
      return "seed " + std::to_string(seed) + ": grouped moved " +
             std::to_string(local_bytes) + " bytes, baseline " +
             std::to_string(remote_bytes);

    // every chain starts at t=0 on its own node, so completion must equal
    // the left-to-right sum of its stage runtimes, bit for bit
    std::map<TaskId, double> end_at;
    for (const SimEvent& e : grouped.trace())
      if (e.kind == EventKind::task_end) end_at[e.payload.task] = e.time;
    for (const std::string& g : grouped.graph().group_ids()) {
      std::vector<TaskId> chain = grouped.graph().group_chain(g);
      double sum = 0;
      for (const TaskId& id : chain) sum += grouped.graph().task(id).runtime_s;
      double got = end_at.at(chain.back());
      if (got != sum)
        return "seed " + std::to_string(seed) + " group " + g + " finished at " +
               fmt(got) + ", stage sum " + fmt(sum);
    }
  }
  return "";
}

// Preempt at half done, recover on half the machine: done work never reruns
// and the recovered run finishes everything.
std::string recovery_soundness() {
  const std::string path = "acceptance-ckpt.json";
  std::remove(path.c_str());
  WorkloadSpec spec = sweep_spec(64, Distribution::constant(10));
  spec.output_bytes = 10000;

  ExperimentConfig cfg = static_cfg(8, 4);
  cfg.workload = spec;
  FailureSpec f;
  f.kind = FailureSpec::Kind::Strategic;
  f.at_completed_fraction = 0.5;
  cfg.resilience.failures.push_back(f);
  cfg.resilience.checkpoint_path = path;

  Engine first(cfg, build_workload(spec, 5), 5);
  RunResult r1 = first.run();
  if (r1.completed) return "the strategic preemption never fired";

  std::map<TaskId, int> starts;
  std::set<TaskId> done1;
  for (const SimEvent& e : first.trace()) {
    if (e.kind == EventKind::task_start) starts[e.payload.task]++;
    if (e.kind == EventKind::task_end) done1.insert(e.payload.task);
  }

  ExperimentConfig cfg2 = cfg;
  cfg2.resilience.failures.clear();
  Engine second(cfg2, Checkpoint::load(path), 4);
  RunResult r2 = second.run();
  std::remove(path.c_str());
  if (!r2.completed) return "the recovered run did not finish";
  for (const SimEvent& e : second.trace())
    if (e.kind == EventKind::task_start) starts[e.payload.task]++;

  for (const TaskId& id : done1)
    if (starts[id] != 1)
      return "done task " + id + " started " + std::to_string(starts[id]) + " times";
  if (second.graph().count_in_state(TaskState::done) != 64)
    return "only " +
           std::to_string(second.graph().count_in_state(TaskState::done)) +
           " of 64 tasks are done after recovery";
  return "";
}

// The heavy-tailed runtime model must hit its target moments.
std::string distribution_fidelity() {
  Distribution d = Distribution::lognormal(713, 560);
  RngStream rng(99, "fidelity");
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    double v = d.sample(rng);
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
  if (std::abs(mean - 713) / 713 > 0.02)
    return "sample mean " + fmt(mean) + " off by more than 2%";
  if (std::abs(sd - 560) / 560 > 0.05)
    return "sample sd " + fmt(sd) + " off by more than 5%";
  return "";
}

struct Criterion {
  const char* name;
  std::string (*run)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"long-tail oracle: static 0.4375 / final decile 0.25 / dynamic 1.0",
       long_tail_oracle},
      {"dynamic provisioning beats static on a heavy-tailed sweep, 10 seeds",
       dynamic_beats_static},
      {"steady-state pull utilization above 0.99 before the final wave",
       steady_state_pull},
      {"broadcast reads a 1 GB common input once; pull reads it 64 times",
       broadcast_economy},
      {"tail chopping trades makespan for allocated core-seconds",
       tail_chopping},
      {"same seed replays to byte-identical traces and summary rows",
       determinism},
      {"sibling pruning executes less than the full search tree, 10 seeds",
       pruning_effectiveness},
      {"pipeline grouping with data-aware placement moves fewer bytes",
       data_aware_benefit},
      {"checkpoint recovery reruns nothing and finishes everything",
       recovery_soundness},
      {"lognormal(713,560) sample moments land on target",
       distribution_fidelity},
  };

  int failed = 0;
  int idx = 0;
  for (const Criterion& c : criteria) {
    ++idx;
    std::string why;
    try {
      why = c.run();
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (why.empty()) {
      std::printf("PASS %2d  %s\n", idx, c.name);
    } else {
      std::printf("FAIL %2d  %s: %s\n", idx, c.name, why.c_str());
      ++failed;
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
