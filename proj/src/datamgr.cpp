#include "mtc/datamgr.hpp"

#include <algorithm>
#include <deque>

namespace mtc {

void DataPolicy::validate() const {
  if (broadcast_fanout < 1)
    raise(Errc::invalid_parameters, "broadcast fanout must be >= 1");
  if (flush_period_s <= 0 && output == Output::Collective)
    raise(Errc::invalid_parameters, "flush period must be > 0");
  if (directory_server_count < 1)
    raise(Errc::invalid_parameters, "directory server count must be >= 1");
  if (directory == Directory::CentralMap && directory_server_count != 1)
    raise(Errc::invalid_parameters, "central map uses exactly one server");
  if (lookup_latency_s < 0)
    raise(Errc::invalid_parameters, "lookup latency must be >= 0");
  if (reduction_fanout < 1)
    raise(Errc::invalid_parameters, "reduction fanout must be >= 1");
}

LocationDirectory::LocationDirectory(DataPolicy::Directory variant, int server_count,
                                     double lookup_latency_s)
    : variant_(variant), server_count_(server_count), lookup_latency_s_(lookup_latency_s) {
  if (server_count < 1) raise(Errc::invalid_parameters, "server count must be >= 1");
  if (variant == DataPolicy::Directory::CentralMap && server_count != 1)
    raise(Errc::invalid_parameters, "central map uses exactly one server");
}

void LocationDirectory::add_replica(const DataId& id, NodeId node) {
  replicas_[id].insert(node);
}

void LocationDirectory::remove_replica(const DataId& id, NodeId node) {
  auto it = replicas_.find(id);
  if (it == replicas_.end()) return;
  it->second.erase(node);
}

void LocationDirectory::drop_node(NodeId node) {
  for (auto& [id, nodes] : replicas_) nodes.erase(node);
}

void LocationDirectory::set_gfs_resident(const DataId& id, bool resident) {
  if (resident)
    gfs_.insert(id);
  else
    gfs_.erase(id);
}

bool LocationDirectory::gfs_resident(const DataId& id) const { return gfs_.count(id) != 0; }

LocationDirectory::Lookup LocationDirectory::locate(const DataId& id) const {
  auto it = replicas_.find(id);
  bool on_gfs = gfs_.count(id) != 0;
  if ((it == replicas_.end() || it->second.empty()) && !on_gfs)
    raise(Errc::unknown_data, "no copy of '" + id + "' registered");
  Lookup out;
  if (it != replicas_.end()) out.replicas.assign(it->second.begin(), it->second.end());
  out.on_gfs = on_gfs;
  out.charge_s = lookup_latency_s_;
  return out;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

int LocationDirectory::server_for(const DataId& id) const {
  if (variant_ == DataPolicy::Directory::CentralMap) return 0;
  std::uint64_t h = fnv1a64(id) * 0x9E3779B97F4A7C15ULL;
  return static_cast<int>((h >> 32) % static_cast<std::uint64_t>(server_count_));
}

void LocationDirectory::clear_replicas() { replicas_.clear(); }

BroadcastPlan plan_broadcast(std::int64_t source, std::vector<NodeId> destinations,
                             int fanout) {
  if (fanout < 1) raise(Errc::invalid_parameters, "broadcast fanout must be >= 1");
  std::sort(destinations.begin(), destinations.end());
  destinations.erase(std::unique(destinations.begin(), destinations.end()),
                     destinations.end());
  if (source >= 0)
    destinations.erase(std::remove(destinations.begin(), destinations.end(), source),
                       destinations.end());

  BroadcastPlan plan;
  struct Sender {
    std::int64_t id;
    int level;
    int capacity;
  };
  std::deque<Sender> senders;
  senders.push_back({source, 0, source == kGfs ? 1 : fanout});
  for (NodeId dst : destinations) {
    while (senders.front().capacity == 0) senders.pop_front();
    Sender& s = senders.front();
    plan.steps.push_back({s.id, dst, s.level + 1});
    plan.depth = std::max(plan.depth, s.level + 1);
    if (s.id == kGfs) ++plan.gfs_reads;
    --s.capacity;
    senders.push_back({dst, s.level + 1, fanout});
  }
  return plan;
}

ReductionPlan plan_reduction(std::vector<NodeId> sources, NodeId sink, int fanout,
                             bool combinable) {
  if (fanout < 1) raise(Errc::invalid_parameters, "reduction fanout must be >= 1");
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  // The sink's own partial is already in place.
  sources.erase(std::remove(sources.begin(), sources.end(), sink), sources.end());

  ReductionPlan plan;
  if (sources.empty()) return plan;
  if (!combinable) {
    plan.steps.push_back({sources, sink, 1});
    plan.depth = 1;
    plan.sink_in_degree = static_cast<int>(sources.size());
    return plan;
  }
  int level = 0;
  std::vector<NodeId> current = std::move(sources);
  while (current.size() > static_cast<std::size_t>(fanout)) {
    ++level;
    std::vector<NodeId> next;
    for (std::size_t i = 0; i < current.size(); i += fanout) {
      std::size_t end = std::min(current.size(), i + fanout);
      NodeId combine = current[i];
      std::vector<NodeId> senders(current.begin() + i + 1, current.begin() + end);
      if (!senders.empty()) plan.steps.push_back({senders, combine, level});
      next.push_back(combine);
    }
    current = std::move(next);
  }
  ++level;
  plan.steps.push_back({current, sink, level});
  plan.depth = level;
  plan.sink_in_degree = static_cast<int>(current.size());
  return plan;
}

}  // namespace mtc
