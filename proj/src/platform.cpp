#include "mtc/platform.hpp"

#include <algorithm>
#include <cmath>

namespace mtc {

void PlatformSpec::validate() const {
  if (node_count < 1) raise(Errc::invalid_parameters, "node-count must be >= 1");
  if (block_granularity_nodes < 1)
    raise(Errc::invalid_parameters, "block-granularity must be >= 1");
  if (cores_per_node < 1) raise(Errc::invalid_parameters, "cores-per-node must be >= 1");
  if (node_count % block_granularity_nodes != 0)
    raise(Errc::invalid_parameters, "node-count must be a multiple of the block granularity");
  if (local_storage_capacity_bytes < 0)
    raise(Errc::invalid_parameters, "local storage capacity must be >= 0");
  if (!(gfs_bandwidth_bytes_per_s > 0))
    raise(Errc::invalid_parameters, "gfs bandwidth must be > 0");
  if (gfs_latency_s < 0) raise(Errc::invalid_parameters, "gfs latency must be >= 0");
  if (!(node_link_bandwidth_bytes_per_s > 0))
    raise(Errc::invalid_parameters, "node link bandwidth must be > 0");
  if (node_link_latency_s < 0)
    raise(Errc::invalid_parameters, "node link latency must be >= 0");
  if (ifs_enabled && !(ifs_bandwidth_bytes_per_s > 0))
    raise(Errc::invalid_parameters, "ifs bandwidth must be > 0");
  if (ifs_latency_s < 0) raise(Errc::invalid_parameters, "ifs latency must be >= 0");
}

PlatformSpec PlatformSpec::preset(const std::string& name) {
  PlatformSpec p;
  if (name == "fine") {
    p.node_count = 4096;
    p.block_granularity_nodes = 1;
  } else if (name == "mid") {
    p.node_count = 8192;
    p.block_granularity_nodes = 32;
  } else if (name == "coarse") {
    p.node_count = 16384;
    p.block_granularity_nodes = 64;
  } else {
    raise(Errc::invalid_parameters, "unknown platform preset '" + name + "'");
  }
  return p;
}

double transfer_time(const PlatformSpec& p, std::int64_t size_bytes, Route route,
                     int concurrent_load) {
  if (size_bytes < 0) raise(Errc::invalid_parameters, "negative transfer size");
  double latency = 0, bandwidth = 0;
  switch (route) {
    case Route::gfs_read:
    case Route::gfs_write:
      latency = p.gfs_latency_s;
      bandwidth = p.gfs_bandwidth_bytes_per_s;
      break;
    case Route::node_to_node:
      latency = p.node_link_latency_s;
      bandwidth = p.node_link_bandwidth_bytes_per_s;
      break;
    case Route::ifs_read:
    case Route::ifs_write:
      if (!p.ifs_enabled) raise(Errc::invalid_parameters, "ifs is not enabled");
      latency = p.ifs_latency_s;
      bandwidth = p.ifs_bandwidth_bytes_per_s;
      break;
  }
  int load = std::max(1, concurrent_load);
  if (route == Route::node_to_node) load = 1;  // links are unshared
  return latency + static_cast<double>(size_bytes) / (bandwidth / load);
}

NodeCache::NodeCache(std::int64_t capacity_bytes) : capacity_(capacity_bytes) {
  if (capacity_bytes < 0) raise(Errc::invalid_parameters, "cache capacity must be >= 0");
}

bool NodeCache::contains(const DataId& id) const { return slots_.count(id) != 0; }

bool NodeCache::get(const DataId& id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) return false;
  lru_.splice(lru_.end(), lru_, it->second.lru_pos);
  return true;
}

bool NodeCache::can_fit(std::int64_t size_bytes) const {
  if (size_bytes > capacity_) return false;
  std::int64_t reclaimable = 0;
  for (const auto& [id, slot] : slots_)
    if (slot.pins == 0) reclaimable += slot.size;
  return capacity_ - (resident_bytes_ - reclaimable) >= size_bytes;
}

std::vector<DataId> NodeCache::put(const DataId& id, std::int64_t size_bytes) {
  if (size_bytes < 0) raise(Errc::invalid_parameters, "negative object size");
  if (size_bytes > capacity_)
    raise(Errc::object_larger_than_cache,
          "object '" + id + "' of " + std::to_string(size_bytes) + " bytes exceeds " +
              std::to_string(capacity_) + " byte cache");
  auto it = slots_.find(id);
  if (it != slots_.end()) {
    if (it->second.size != size_bytes)
      raise(Errc::invalid_parameters, "object '" + id + "' resized");
    lru_.splice(lru_.end(), lru_, it->second.lru_pos);
    return {};
  }
  std::vector<DataId> evicted;
  auto victim = lru_.begin();
  while (capacity_ - resident_bytes_ < size_bytes) {
    while (victim != lru_.end() && slots_.at(*victim).pins > 0) ++victim;
    if (victim == lru_.end())
      raise(Errc::local_storage_full,
            "pinned residents leave no room for '" + id + "'");
    resident_bytes_ -= slots_.at(*victim).size;
    slots_.erase(*victim);
    evicted.push_back(*victim);
    victim = lru_.erase(victim);
  }
  lru_.push_back(id);
  slots_[id] = Slot{size_bytes, 0, std::prev(lru_.end())};
  resident_bytes_ += size_bytes;
  return evicted;
}

void NodeCache::pin(const DataId& id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) raise(Errc::unknown_data, "pin of absent '" + id + "'");
  ++it->second.pins;
}

void NodeCache::unpin(const DataId& id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) raise(Errc::unknown_data, "unpin of absent '" + id + "'");
  if (it->second.pins == 0) raise(Errc::invalid_state, "unpin of unpinned '" + id + "'");
  --it->second.pins;
}

bool NodeCache::erase(const DataId& id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) return false;
  resident_bytes_ -= it->second.size;
  lru_.erase(it->second.lru_pos);
  slots_.erase(it);
  return true;
}

void NodeCache::clear() {
  lru_.clear();
  slots_.clear();
  resident_bytes_ = 0;
}

std::vector<DataId> NodeCache::resident_ids() const {
  std::vector<DataId> out;
  out.reserve(slots_.size());
  for (const auto& [id, slot] : slots_) out.push_back(id);
  return out;
}

}  // namespace mtc
