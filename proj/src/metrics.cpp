#include "mtc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mtc {

namespace {

struct Interval {
  double t0 = 0, t1 = 0;
  double weight = 1;  // node count (allocation) or width (busy)
};

struct Scan {
  double makespan = 0;
  std::vector<Interval> allocated;  // per block grant
  std::vector<Interval> busy;
  std::map<Route, std::int64_t> bytes;
  std::int64_t transfers = 0;
  std::int64_t tasks_done = 0;
  std::int64_t task_starts = 0;
  std::int64_t task_failures = 0;
  std::int64_t flushes = 0;
  std::set<std::string> started_ids;
  std::vector<double> dispatch_latencies;
};

double overlap(const Interval& iv, double a, double b) {
  double lo = std::max(iv.t0, a), hi = std::min(iv.t1, b);
  return hi > lo ? (hi - lo) * iv.weight : 0.0;
}

Scan scan_trace(const std::vector<SimEvent>& trace) {
  Scan s;
  if (trace.empty()) return s;
  s.makespan = trace.back().time;

  struct OpenBusy {
    std::int64_t node;
    double width;
    double t0;
  };
  std::map<std::string, std::vector<OpenBusy>> open;      // task -> reservations
  std::map<std::string, double> dispatched;               // task|attempt -> time
  struct Block {
    std::int64_t first = 0, count = 0;
    double t0 = 0;
    bool released = false;
  };
  std::map<std::int64_t, Block> blocks;
  std::map<std::string, std::int64_t> open_transfers;     // data|src|dst -> starts

  auto close_task = [&](const std::string& task, double t,
                        std::int64_t only_node = kNone) {
    auto it = open.find(task);
    if (it == open.end()) return false;
    auto& v = it->second;
    bool closed = false;
    for (std::size_t i = 0; i < v.size();) {
      if (only_node != kNone && v[i].node != only_node) {
        ++i;
        continue;
      }
      s.busy.push_back({v[i].t0, t, v[i].width});
      v.erase(v.begin() + i);
      closed = true;
    }
    if (v.empty()) open.erase(it);
    return closed;
  };

  for (const SimEvent& e : trace) {
    const Payload& p = e.payload;
    switch (e.kind) {
      case EventKind::block_granted: {
        if (p.block == kNone || p.node == kNone || p.count == kNone)
          raise(Errc::malformed_trace, "block-granted without block/node/count");
        blocks[p.block] = Block{p.node, p.count, e.time, false};
        break;
      }
      case EventKind::block_released: {
        auto it = blocks.find(p.block);
        if (it == blocks.end() || it->second.released)
          raise(Errc::malformed_trace, "release of unknown block " + std::to_string(p.block));
        it->second.released = true;
        s.allocated.push_back({it->second.t0, e.time, double(it->second.count)});
        // Reservations on the released nodes end here (kills during tail
        // chopping or failures never see a task-end).
        std::vector<std::string> tasks;
        for (const auto& [task, v] : open) tasks.push_back(task);
        for (const auto& task : tasks) {
          auto& v = open[task];
          for (std::size_t i = 0; i < v.size();) {
            if (v[i].node >= it->second.first && v[i].node < it->second.first + it->second.count) {
              s.busy.push_back({v[i].t0, e.time, v[i].width});
              v.erase(v.begin() + i);
            } else {
              ++i;
            }
          }
          if (v.empty()) open.erase(task);
        }
        break;
      }
      case EventKind::dispatch: {
        if (p.task.empty()) raise(Errc::malformed_trace, "dispatch without task");
        dispatched[p.task + "|" + std::to_string(p.attempt)] = e.time;
        if (p.tag == "pull" && p.node != kNone)
          open[p.task].push_back({p.node, double(p.width == kNone ? 1 : p.width), e.time});
        break;
      }
      case EventKind::task_start: {
        if (p.task.empty() || p.node == kNone)
          raise(Errc::malformed_trace, "task-start without task/node");
        ++s.task_starts;
        s.started_ids.insert(p.task);
        auto key = p.task + "|" + std::to_string(p.attempt);
        auto dit = dispatched.find(key);
        if (dit != dispatched.end()) {
          s.dispatch_latencies.push_back(e.time - dit->second);
          dispatched.erase(dit);
        }
        bool reserved = false;
        for (const auto& ob : open[p.task])
          if (ob.node == p.node) reserved = true;
        if (!reserved)
          open[p.task].push_back({p.node, double(p.width == kNone ? 1 : p.width), e.time});
        break;
      }
      case EventKind::task_end: {
        ++s.tasks_done;
        if (!close_task(p.task, e.time))
          raise(Errc::malformed_trace, "task-end for idle task '" + p.task + "'");
        break;
      }
      case EventKind::task_fail: {
        ++s.task_failures;
        close_task(p.task, e.time);
        break;
      }
      case EventKind::prune_signal: {
        close_task(p.task, e.time, p.node);
        break;
      }
      case EventKind::transfer_start: {
        ++open_transfers[p.data + "|" + std::to_string(p.src) + "|" + std::to_string(p.dst)];
        break;
      }
      case EventKind::transfer_end: {
        auto key = p.data + "|" + std::to_string(p.src) + "|" + std::to_string(p.dst);
        if (--open_transfers[key] < 0)
          raise(Errc::malformed_trace, "transfer-end without start for '" + p.data + "'");
        if (!p.route) raise(Errc::malformed_trace, "transfer-end without route");
        s.bytes[*p.route] += p.bytes == kNone ? 0 : p.bytes;
        ++s.transfers;
        break;
      }
      case EventKind::flush:
        ++s.flushes;
        break;
      default:
        break;
    }
  }
  // Whatever is still open stretches to the end of the trace.
  for (const auto& [task, v] : open)
    for (const auto& ob : v) s.busy.push_back({ob.t0, s.makespan, ob.width});
  for (const auto& [id, b] : blocks)
    if (!b.released) s.allocated.push_back({b.t0, s.makespan, double(b.count)});
  return s;
}

double rank_percentile(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  std::size_t n = sorted.size();
  std::size_t r = static_cast<std::size_t>(std::ceil(q * n));
  if (r < 1) r = 1;
  return sorted[r - 1];
}

}  // namespace

RunReport report_from_trace(const std::vector<SimEvent>& trace, int cores_per_node) {
  if (cores_per_node < 1) raise(Errc::invalid_parameters, "cores-per-node must be >= 1");
  Scan s = scan_trace(trace);
  RunReport r;
  r.makespan_s = s.makespan;
  for (const auto& iv : s.allocated) r.allocated_core_s += (iv.t1 - iv.t0) * iv.weight;
  for (const auto& iv : s.busy) r.busy_core_s += (iv.t1 - iv.t0) * iv.weight;
  r.allocated_core_s *= cores_per_node;
  r.busy_core_s *= cores_per_node;
  // An empty run allocated nothing and wasted nothing.
  r.utilization = r.allocated_core_s > 0 ? r.busy_core_s / r.allocated_core_s : 1.0;
  r.bytes_by_route = s.bytes;
  r.transfers = s.transfers;
  r.tasks_done = s.tasks_done;
  r.task_starts = s.task_starts;
  r.distinct_tasks_started = static_cast<std::int64_t>(s.started_ids.size());
  r.task_failures = s.task_failures;
  r.flushes = s.flushes;
  std::sort(s.dispatch_latencies.begin(), s.dispatch_latencies.end());
  r.dispatch_p50_s = rank_percentile(s.dispatch_latencies, 0.50);
  r.dispatch_p90_s = rank_percentile(s.dispatch_latencies, 0.90);
  r.dispatch_p99_s = rank_percentile(s.dispatch_latencies, 0.99);
  r.dispatch_max_s = s.dispatch_latencies.empty() ? 0 : s.dispatch_latencies.back();
  for (int d = 0; d < 10; ++d) {
    double a = s.makespan * d / 10.0, b = s.makespan * (d + 1) / 10.0;
    double alloc = 0, busy = 0;
    for (const auto& iv : s.allocated) alloc += overlap(iv, a, b);
    for (const auto& iv : s.busy) busy += overlap(iv, a, b);
    r.decile_utilization[d] = alloc > 0 ? busy / alloc : 0;
  }
  return r;
}

double utilization(const std::vector<SimEvent>& trace, int cores_per_node) {
  return report_from_trace(trace, cores_per_node).utilization;
}

double utilization_window(const std::vector<SimEvent>& trace, int cores_per_node,
                          double t0, double t1) {
  if (cores_per_node < 1) raise(Errc::invalid_parameters, "cores-per-node must be >= 1");
  if (!(t1 > t0)) raise(Errc::invalid_parameters, "empty utilization window");
  Scan s = scan_trace(trace);
  double alloc = 0, busy = 0;
  for (const auto& iv : s.allocated) alloc += overlap(iv, t0, t1);
  for (const auto& iv : s.busy) busy += overlap(iv, t0, t1);
  return alloc > 0 ? busy / alloc : 0;
}

std::map<Route, std::int64_t> bytes_moved(const std::vector<SimEvent>& trace) {
  return scan_trace(trace).bytes;
}

std::array<double, 10> tail_profile(const std::vector<SimEvent>& trace, int cores_per_node) {
  return report_from_trace(trace, cores_per_node).decile_utilization;
}

std::string csv_header() {
  std::string h =
      "config,workload,seed,makespan-s,utilization,allocated-core-s,busy-core-s,"
      "tasks-generated,tasks-done,tasks-pruned,tasks-failed,task-starts,task-failures,"
      "bytes-gfs-read,bytes-gfs-write,bytes-node-to-node,bytes-ifs-read,bytes-ifs-write,"
      "transfers,flushes,dispatch-p50-s,dispatch-p90-s,dispatch-p99-s,dispatch-max-s,"
      "completed";
  for (int d = 1; d <= 10; ++d) h += ",decile-" + std::to_string(d);
  return h;
}

std::string csv_row(const std::string& config_name, const std::string& workload,
                    std::uint64_t seed, const RunReport& r) {
  auto byte_count = [&](Route route) {
    auto it = r.bytes_by_route.find(route);
    return it == r.bytes_by_route.end() ? std::int64_t{0} : it->second;
  };
  std::string row = config_name + "," + workload + "," + std::to_string(seed);
  row += "," + format_double(r.makespan_s);
  row += "," + format_double(r.utilization);
  row += "," + format_double(r.allocated_core_s);
  row += "," + format_double(r.busy_core_s);
  row += "," + std::to_string(r.generated);
  row += "," + std::to_string(r.tasks_done);
  row += "," + std::to_string(r.pruned);
  row += "," + std::to_string(r.failed_permanent);
  row += "," + std::to_string(r.task_starts);
  row += "," + std::to_string(r.task_failures);
  row += "," + std::to_string(byte_count(Route::gfs_read));
  row += "," + std::to_string(byte_count(Route::gfs_write));
  row += "," + std::to_string(byte_count(Route::node_to_node));
  row += "," + std::to_string(byte_count(Route::ifs_read));
  row += "," + std::to_string(byte_count(Route::ifs_write));
  row += "," + std::to_string(r.transfers);
  row += "," + std::to_string(r.flushes);
  row += "," + format_double(r.dispatch_p50_s);
  row += "," + format_double(r.dispatch_p90_s);
  row += "," + format_double(r.dispatch_p99_s);
  row += "," + format_double(r.dispatch_max_s);
  row += r.completed ? ",1" : ",0";
  for (double d : r.decile_utilization) row += "," + format_double(d);
  return row;
}

}  // namespace mtc
