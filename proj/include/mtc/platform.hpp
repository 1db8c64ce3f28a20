#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <string>
#include <vector>

#include "mtc/sim_kernel.hpp"
#include "mtc/task_graph.hpp"

namespace mtc {

struct PlatformSpec {
  std::int64_t node_count = 1;
  int block_granularity_nodes = 1;   // allocation quantum
  int cores_per_node = 1;            // accounting multiplier
  std::int64_t local_storage_capacity_bytes = 1LL << 40;
  double gfs_bandwidth_bytes_per_s = 1e9;   // aggregate, shared by all GFS traffic
  double gfs_latency_s = 0;
  double node_link_bandwidth_bytes_per_s = 1e9;  // per link, unshared
  double node_link_latency_s = 0;
  bool ifs_enabled = false;
  double ifs_bandwidth_bytes_per_s = 1e9;   // aggregate, shared
  double ifs_latency_s = 0;

  void validate() const;

  // Named machine shapes differing mainly in allocation quantum.
  // "fine" -> granularity 1, "mid" -> 32, "coarse" -> 64.
  static PlatformSpec preset(const std::string& name);
};

// Latency plus size over the bandwidth share an equal split leaves this
// transfer when `concurrent_load` transfers use the channel (a load of 0 or 1
// means the transfer is alone).
double transfer_time(const PlatformSpec& p, std::int64_t size_bytes, Route route,
                     int concurrent_load);

// Per-node LRU store. Pinned entries are never evicted; get() refreshes
// recency; put() evicts cold unpinned entries until the new object fits.
class NodeCache {
 public:
  explicit NodeCache(std::int64_t capacity_bytes);

  bool contains(const DataId& id) const;
  bool get(const DataId& id);  // refreshes recency on hit
  // Inserts (or refreshes) and returns evicted ids, oldest first. Throws
  // object_larger_than_cache if the object alone exceeds capacity and
  // local_storage_full if pinned residents leave no room.
  std::vector<DataId> put(const DataId& id, std::int64_t size_bytes);
  // Fit check without mutating: true if put() would succeed right now.
  bool can_fit(std::int64_t size_bytes) const;

  void pin(const DataId& id);
  void unpin(const DataId& id);
  bool erase(const DataId& id);
  void clear();

  std::int64_t resident_bytes() const { return resident_bytes_; }
  std::int64_t capacity_bytes() const { return capacity_; }
  std::vector<DataId> resident_ids() const;  // ascending

 private:
  struct Slot {
    std::int64_t size = 0;
    int pins = 0;
    std::list<DataId>::iterator lru_pos;
  };
  std::int64_t capacity_;
  std::int64_t resident_bytes_ = 0;
  std::list<DataId> lru_;  // front = coldest
  std::map<DataId, Slot> slots_;
};

}  // namespace mtc
