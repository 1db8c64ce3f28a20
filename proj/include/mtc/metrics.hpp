#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtc/sim_kernel.hpp"

namespace mtc {

// Aggregates computed from one run. Most fields derive purely from the trace;
// the engine fills the graph-level counters (generated/pruned/...) and the
// completion flag afterwards.
struct RunReport {
  double makespan_s = 0;
  double allocated_core_s = 0;
  double busy_core_s = 0;
  double utilization = 0;
  std::map<Route, std::int64_t> bytes_by_route;
  std::int64_t transfers = 0;
  std::int64_t tasks_done = 0;
  std::int64_t task_starts = 0;
  std::int64_t distinct_tasks_started = 0;
  std::int64_t task_failures = 0;
  std::int64_t flushes = 0;
  double dispatch_p50_s = 0;
  double dispatch_p90_s = 0;
  double dispatch_p99_s = 0;
  double dispatch_max_s = 0;
  std::array<double, 10> decile_utilization{};

  std::int64_t generated = 0;
  std::int64_t pruned = 0;
  std::int64_t failed_permanent = 0;
  bool completed = true;
};

// Busy time counts a worker from the moment it is reserved: pull dispatches
// reserve at the dispatch event, push work only at task start. Intervals are
// closed by task end/failure, a prune kill, or the node's block release.
// Throws malformed_trace when events cannot be paired up.
RunReport report_from_trace(const std::vector<SimEvent>& trace, int cores_per_node);

double utilization(const std::vector<SimEvent>& trace, int cores_per_node);
// Utilization restricted to [t0, t1).
double utilization_window(const std::vector<SimEvent>& trace, int cores_per_node,
                          double t0, double t1);
std::map<Route, std::int64_t> bytes_moved(const std::vector<SimEvent>& trace);
std::array<double, 10> tail_profile(const std::vector<SimEvent>& trace, int cores_per_node);

std::string csv_header();
std::string csv_row(const std::string& config_name, const std::string& workload,
                    std::uint64_t seed, const RunReport& report);

}  // namespace mtc
