#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mtc/task_graph.hpp"

namespace mtc {

struct ChopPolicy {
  double trigger_fraction = 0.9;  // of generated tasks completed
  std::int64_t restart_nodes = 1;
  void validate() const;
};

struct DispatchPolicy {
  enum class Architecture { Centralized, Hierarchical };
  Architecture architecture = Architecture::Centralized;
  int scheduler_count = 1;  // intermediate schedulers when hierarchical

  enum class Mode { Pull, Push };
  Mode mode = Mode::Pull;
  int push_backlog_limit = 2;
  bool stealing = false;
  int steal_neighbor_count = 2;

  enum class Ordering { Fifo, Priority, LongestFirst, ShortestFirst };
  Ordering ordering = Ordering::Fifo;
  bool runtimes_known = false;  // ordering sees true runtimes, not estimates

  bool data_aware = false;
  bool pipeline_grouping = false;
  bool migration = false;  // consolidate instead of kill-and-requeue on chop

  double dispatch_latency_s = 0;          // per hop
  double scheduler_throughput_per_s = 0;  // dispatch decisions per scheduler; 0 = unlimited

  std::optional<ChopPolicy> chop;

  void validate() const;
  int hops() const { return architecture == Architecture::Hierarchical ? 2 : 1; }
};

// Completed-task count at which tail chopping fires: the first completion
// making done >= floor(trigger * total) while work remains. A trigger of 1
// never fires early.
std::int64_t chop_threshold(std::int64_t total_tasks, double trigger_fraction);

// Queue comparator for the active ordering. Returns true if a should run
// before b. The runtime view is what the policy is allowed to see: true
// runtimes when runtimes_known, else estimates (tasks without estimates sort
// after estimated ones, FIFO among themselves via the enqueue sequence).
struct QueuedTask {
  TaskId id;
  double priority = 0;
  std::optional<double> runtime_view;
  std::uint64_t enqueue_seq = 0;
};
bool queued_before(DispatchPolicy::Ordering ordering, const QueuedTask& a,
                   const QueuedTask& b);

// Candidate workers ranked for a task: descending resident input bytes, ties
// by ascending node id. resident(node, data) says whether the node already
// holds the data object.
std::vector<NodeId> rank_workers(
    const std::vector<std::pair<DataId, std::int64_t>>& inputs,
    const std::vector<NodeId>& candidates,
    const std::function<bool(NodeId, const DataId&)>& resident);

// Steal victim: the first worker in `neighbors` order with a non-empty
// backlog. (An idle worker drains its own backlog first, so any backlogged
// task is queued behind a running one and is fair game.)
std::optional<NodeId> pick_steal_victim(
    const std::vector<NodeId>& neighbors,
    const std::function<std::size_t(NodeId)>& backlog_size);

}  // namespace mtc
