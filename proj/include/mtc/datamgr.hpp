#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mtc/sim_kernel.hpp"
#include "mtc/task_graph.hpp"

namespace mtc {

struct DataPolicy {
  enum class CommonInput { PullOnDemand, PushBroadcast };
  CommonInput common_input = CommonInput::PullOnDemand;
  int broadcast_fanout = 2;

  enum class Intermediate { GfsPassthrough, PeerToPeer, Ifs };
  Intermediate intermediate = Intermediate::GfsPassthrough;

  enum class Output { Synchronized, Collective };
  Output output = Output::Synchronized;
  double flush_period_s = 60;

  enum class Directory { CentralMap, Hashed };
  Directory directory = Directory::CentralMap;
  int directory_server_count = 1;
  double lookup_latency_s = 0;

  bool reduction_trees = false;  // combinable gather inputs use a combining tree
  int reduction_fanout = 2;

  void validate() const;
};

// Tracks which nodes hold which data objects, plus a GFS-resident flag per
// object. Lookups carry a fixed latency charge. The hashed variant spreads
// ownership over several directory servers by multiplicative hashing.
class LocationDirectory {
 public:
  LocationDirectory(DataPolicy::Directory variant, int server_count,
                    double lookup_latency_s);

  void add_replica(const DataId& id, NodeId node);
  void remove_replica(const DataId& id, NodeId node);
  void drop_node(NodeId node);  // forget every replica the node held
  void set_gfs_resident(const DataId& id, bool resident);
  bool gfs_resident(const DataId& id) const;

  struct Lookup {
    std::vector<NodeId> replicas;  // ascending
    bool on_gfs = false;
    double charge_s = 0;
  };
  // Throws unknown_data for ids never registered anywhere.
  Lookup locate(const DataId& id) const;

  int server_for(const DataId& id) const;

  const std::map<DataId, std::set<NodeId>>& replica_map() const { return replicas_; }
  const std::set<DataId>& gfs_set() const { return gfs_; }
  void clear_replicas();

 private:
  DataPolicy::Directory variant_;
  int server_count_;
  double lookup_latency_s_;
  std::map<DataId, std::set<NodeId>> replicas_;
  std::set<DataId> gfs_;
};

// Multicast tree for pushing one object to many nodes. A GFS source feeds
// exactly one first recipient (one read of the object); compute-node senders
// forward to up to `fanout` children. Destinations fill levels in ascending
// node order.
struct BroadcastStep {
  std::int64_t src;  // node id or kGfs
  NodeId dst;
  int level;  // 1-based
};
struct BroadcastPlan {
  std::vector<BroadcastStep> steps;
  int depth = 0;
  std::size_t gfs_reads = 0;
};
BroadcastPlan plan_broadcast(std::int64_t source, std::vector<NodeId> destinations,
                             int fanout);

// Combining tree for gathering many partials into a sink. Interior combine
// steps run on worker nodes (the first member of each group); the sink's
// in-degree never exceeds the fanout. Non-combinable data degenerates to a
// star with every source sending straight to the sink.
struct ReductionStep {
  std::vector<NodeId> sources;  // senders, ascending
  NodeId dst;
  int level;  // 1-based
};
struct ReductionPlan {
  std::vector<ReductionStep> steps;
  int depth = 0;
  int sink_in_degree = 0;
};
ReductionPlan plan_reduction(std::vector<NodeId> sources, NodeId sink, int fanout,
                             bool combinable);

}  // namespace mtc
