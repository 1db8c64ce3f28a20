#include "mtc/dispatch.hpp"

#include <algorithm>
#include <cmath>

namespace mtc {

void ChopPolicy::validate() const {
  if (!(trigger_fraction > 0) || trigger_fraction > 1)
    raise(Errc::invalid_parameters, "chop trigger must be in (0, 1]");
  if (restart_nodes < 1) raise(Errc::invalid_parameters, "chop restart nodes must be >= 1");
}

void DispatchPolicy::validate() const {
  if (scheduler_count < 1) raise(Errc::invalid_parameters, "scheduler count must be >= 1");
  if (architecture == Architecture::Centralized && scheduler_count != 1)
    raise(Errc::invalid_parameters, "centralized dispatch has exactly one scheduler");
  if (push_backlog_limit < 1)
    raise(Errc::invalid_parameters, "push backlog limit must be >= 1");
  if (steal_neighbor_count < 1)
    raise(Errc::invalid_parameters, "steal neighbor count must be >= 1");
  if (stealing && mode != Mode::Push)
    raise(Errc::invalid_parameters, "stealing requires push dispatch");
  if (dispatch_latency_s < 0)
    raise(Errc::invalid_parameters, "dispatch latency must be >= 0");
  if (scheduler_throughput_per_s < 0)
    raise(Errc::invalid_parameters, "scheduler throughput must be >= 0");
  if (chop) chop->validate();
  if (migration && !chop)
    raise(Errc::invalid_parameters, "migration only applies to tail chopping");
}

std::int64_t chop_threshold(std::int64_t total_tasks, double trigger_fraction) {
  if (total_tasks < 0) raise(Errc::invalid_parameters, "negative task count");
  double exact = trigger_fraction * static_cast<double>(total_tasks);
  auto floored = static_cast<std::int64_t>(std::floor(exact));
  // Never fire before any work happened, and never demand more than "all".
  return std::clamp<std::int64_t>(floored, 1, total_tasks);
}

bool queued_before(DispatchPolicy::Ordering ordering, const QueuedTask& a,
                   const QueuedTask& b) {
  switch (ordering) {
    case DispatchPolicy::Ordering::Fifo:
      break;
    case DispatchPolicy::Ordering::Priority:
      if (a.priority != b.priority) return a.priority > b.priority;
      break;
    case DispatchPolicy::Ordering::LongestFirst:
      if (a.runtime_view && b.runtime_view && *a.runtime_view != *b.runtime_view)
        return *a.runtime_view > *b.runtime_view;
      if (a.runtime_view != b.runtime_view) return a.runtime_view.has_value();
      break;
    case DispatchPolicy::Ordering::ShortestFirst:
      if (a.runtime_view && b.runtime_view && *a.runtime_view != *b.runtime_view)
        return *a.runtime_view < *b.runtime_view;
      if (a.runtime_view != b.runtime_view) return a.runtime_view.has_value();
      break;
  }
  return a.enqueue_seq < b.enqueue_seq;
}

std::vector<NodeId> rank_workers(
    const std::vector<std::pair<DataId, std::int64_t>>& inputs,
    const std::vector<NodeId>& candidates,
    const std::function<bool(NodeId, const DataId&)>& resident) {
  std::vector<std::pair<std::int64_t, NodeId>> scored;
  scored.reserve(candidates.size());
  for (NodeId n : candidates) {
    std::int64_t bytes = 0;
    for (const auto& [id, size] : inputs)
      if (resident(n, id)) bytes += size;
    scored.emplace_back(bytes, n);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<NodeId> out;
  out.reserve(scored.size());
  for (const auto& [bytes, n] : scored) out.push_back(n);
  return out;
}

std::optional<NodeId> pick_steal_victim(
    const std::vector<NodeId>& neighbors,
    const std::function<std::size_t(NodeId)>& backlog_size) {
  for (NodeId n : neighbors)
    if (backlog_size(n) > 0) return n;
  return std::nullopt;
}

}  // namespace mtc
