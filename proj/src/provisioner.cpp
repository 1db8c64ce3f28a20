#include "mtc/provisioner.hpp"

#include <algorithm>
#include <cmath>

namespace mtc {

void ProvisionPolicy::validate() const {
  if (mode == Mode::Static && static_nodes < 1)
    raise(Errc::invalid_parameters, "static allocation needs at least 1 node");
  if (start_blocks < 1) raise(Errc::invalid_parameters, "growth start must be >= 1 block");
  if (delta_blocks < 0) raise(Errc::invalid_parameters, "growth delta must be >= 0");
  if (!(ratio >= 1)) raise(Errc::invalid_parameters, "growth ratio must be >= 1");
  if (idle_release_after_s && *idle_release_after_s < 0)
    raise(Errc::invalid_parameters, "idle release threshold must be >= 0");
  if (max_outstanding < 1)
    raise(Errc::invalid_parameters, "max outstanding requests must be >= 1");
  if (queue_wait_s < 0 || request_overhead_s < 0)
    raise(Errc::invalid_parameters, "provisioning delays must be >= 0");
}

std::int64_t round_to_granularity(std::int64_t requested, int granularity,
                                  std::int64_t node_count) {
  if (requested < 0) raise(Errc::invalid_parameters, "negative node request");
  if (granularity < 1) raise(Errc::invalid_parameters, "granularity must be >= 1");
  if (requested > node_count)
    raise(Errc::request_exceeds_machine,
          std::to_string(requested) + " nodes requested of " + std::to_string(node_count));
  std::int64_t blocks = (requested + granularity - 1) / granularity;
  return blocks * granularity;
}

Provisioner::Provisioner(ProvisionPolicy policy, PlatformSpec platform)
    : policy_(std::move(policy)), platform_(std::move(platform)) {
  policy_.validate();
  platform_.validate();
}

std::int64_t Provisioner::growth_term_blocks() const {
  switch (policy_.growth) {
    case ProvisionPolicy::Growth::Constant:
      return policy_.start_blocks;
    case ProvisionPolicy::Growth::Arithmetic:
      return policy_.start_blocks + static_cast<std::int64_t>(cursor_) * policy_.delta_blocks;
    case ProvisionPolicy::Growth::Geometric: {
      double term = policy_.start_blocks * std::pow(policy_.ratio, cursor_);
      double cap = static_cast<double>(platform_.node_count);  // blocks never need more
      return static_cast<std::int64_t>(std::llround(std::min(term, cap)));
    }
  }
  return policy_.start_blocks;
}

std::optional<std::int64_t> Provisioner::next_request(std::int64_t ready_count,
                                                      std::int64_t allocated_nodes,
                                                      std::int64_t idle_allocated_nodes,
                                                      int outstanding_requests,
                                                      std::int64_t pending_nodes) {
  if (policy_.mode == ProvisionPolicy::Mode::Static) {
    if (static_fired_) return std::nullopt;
    static_fired_ = true;
    return round_to_granularity(policy_.static_nodes, platform_.block_granularity_nodes,
                                platform_.node_count);
  }
  bool demand = ready_count > idle_allocated_nodes + pending_nodes;
  if (!demand) {
    cursor_ = 0;
    return std::nullopt;
  }
  if (outstanding_requests >= policy_.max_outstanding) return std::nullopt;
  std::int64_t remaining = platform_.node_count - allocated_nodes - pending_nodes;
  if (remaining <= 0) return std::nullopt;
  std::int64_t want = growth_term_blocks() * platform_.block_granularity_nodes;
  std::int64_t nodes = std::min(want, remaining);
  if (nodes <= 0) return std::nullopt;
  ++cursor_;
  return nodes;
}

std::vector<BlockId> Provisioner::release_idle(const std::vector<BlockIdleInfo>& blocks,
                                               double now, bool queue_empty) const {
  std::vector<BlockId> out;
  if (!queue_empty) return out;
  if (policy_.mode == ProvisionPolicy::Mode::Static) return out;
  if (!policy_.idle_release_after_s) return out;
  double threshold = *policy_.idle_release_after_s;
  if (policy_.partial_release) {
    for (const auto& b : blocks)
      if (b.idle_since && now - *b.idle_since >= threshold) out.push_back(b.id);
  } else {
    for (const auto& b : blocks)
      if (!b.idle_since || now - *b.idle_since < threshold) return out;
    for (const auto& b : blocks) out.push_back(b.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Provisioner::restore(int cursor, bool static_fired) {
  cursor_ = cursor;
  static_fired_ = static_fired;
}

}  // namespace mtc
