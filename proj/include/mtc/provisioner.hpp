#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mtc/platform.hpp"

namespace mtc {

struct ProvisionPolicy {
  enum class Mode { Static, Dynamic };
  Mode mode = Mode::Static;
  std::int64_t static_nodes = 1;

  enum class Growth { Constant, Arithmetic, Geometric };
  Growth growth = Growth::Constant;
  std::int64_t start_blocks = 1;
  std::int64_t delta_blocks = 0;  // arithmetic increment
  double ratio = 2;               // geometric factor

  // Blocks idle this long (with an empty ready queue) are handed back.
  // Unset means allocations are only released when the run drains.
  std::optional<double> idle_release_after_s;
  bool partial_release = true;  // false: the whole allocation goes back at once

  int max_outstanding = 1;
  double queue_wait_s = 0;        // batch queue delay before a grant
  double request_overhead_s = 0;  // per-request submission cost

  void validate() const;
};

// Rounds a node request up to a whole number of blocks.
std::int64_t round_to_granularity(std::int64_t requested, int granularity,
                                  std::int64_t node_count);

struct BlockIdleInfo {
  BlockId id = 0;
  // Time the last node of the block went idle; unset while any node is busy.
  std::optional<double> idle_since;
};

// Growth-policy state machine. The engine owns block bookkeeping; this class
// decides how many nodes to ask for next and which idle blocks to release.
class Provisioner {
 public:
  Provisioner(ProvisionPolicy policy, PlatformSpec platform);

  // Node count for the next allocation request, if one should be issued.
  // Demand means more ready tasks than idle allocated nodes. The escalation
  // cursor advances per request and resets when demand disappears.
  std::optional<std::int64_t> next_request(std::int64_t ready_count,
                                           std::int64_t allocated_nodes,
                                           std::int64_t idle_allocated_nodes,
                                           int outstanding_requests,
                                           std::int64_t pending_nodes);

  // Blocks to hand back now. Only meaningful when the ready queue is empty;
  // the queue_empty flag guards that rule centrally.
  std::vector<BlockId> release_idle(const std::vector<BlockIdleInfo>& blocks, double now,
                                    bool queue_empty) const;

  double grant_delay() const { return policy_.queue_wait_s + policy_.request_overhead_s; }
  const ProvisionPolicy& policy() const { return policy_; }

  int cursor() const { return cursor_; }
  void restore(int cursor, bool static_fired);
  bool static_fired() const { return static_fired_; }

 private:
  ProvisionPolicy policy_;
  PlatformSpec platform_;
  int cursor_ = 0;
  bool static_fired_ = false;

  std::int64_t growth_term_blocks() const;
};

}  // namespace mtc
