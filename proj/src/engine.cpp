#include "mtc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProvisionPolicy static_override(ProvisionPolicy p, std::int64_t nodes) {
  p.mode = ProvisionPolicy::Mode::Static;
  p.static_nodes = nodes;
  return p;
}

std::string flow_key(const DataId& d, std::int64_t src, std::int64_t dst) {
  return d + "|" + std::to_string(src) + "|" + std::to_string(dst);
}

std::string inbound_key(NodeId node, const DataId& d) {
  return std::to_string(node) + "|" + d;
}

}  // namespace

Engine::Engine(const ExperimentConfig& cfg, BuiltWorkload workload, std::uint64_t seed)
    : platform_(cfg.platform),
      dispatch_(cfg.dispatch),
      data_policy_(cfg.data),
      resilience_(cfg.resilience),
      seed_(seed),
      graph_(std::move(workload.graph)),
      hooks_(std::move(workload.hooks)),
      provisioner_(cfg.provision, cfg.platform),
      directory_(cfg.data.directory, cfg.data.directory_server_count,
                 cfg.data.lookup_latency_s) {
  init_common(cfg);
}

Engine::Engine(const ExperimentConfig& cfg, const Checkpoint& cp, std::int64_t nodes)
    : platform_(cfg.platform),
      dispatch_(cfg.dispatch),
      data_policy_(cfg.data),
      resilience_(cfg.resilience),
      seed_(cp.seed),
      graph_(graph_from_checkpoint(cp)),
      hooks_(build_workload(cfg.workload, cp.seed).hooks),
      provisioner_(static_override(cfg.provision, nodes), cfg.platform),
      directory_(cfg.data.directory, cfg.data.directory_server_count,
                 cfg.data.lookup_latency_s) {
  for (const auto& dump : cp.tasks)
    if (dump.retries > 0) retries_[dump.spec.id] = dump.retries;
  for (const DataId& d : cp.gfs_resident) directory_.set_gfs_resident(d, true);
  init_common(cfg);
}

void Engine::init_common(const ExperimentConfig& cfg) {
  platform_.validate();
  dispatch_.validate();
  data_policy_.validate();
  resilience_.validate();
  cfg.provision.validate();
  graph_.validate_structure();
  if (data_policy_.intermediate == DataPolicy::Intermediate::Ifs &&
      !platform_.ifs_enabled)
    raise(Errc::validation,
          "intermediate data policy routes through an ifs the platform lacks");

  nodes_.resize(static_cast<std::size_t>(platform_.node_count));
  for (auto& n : nodes_)
    n.cache = std::make_unique<NodeCache>(platform_.local_storage_capacity_bytes);
  std::int64_t block_count = platform_.node_count / platform_.block_granularity_nodes;
  for (BlockId b = 0; b < block_count; ++b) free_blocks_.insert(b);
  scheds_.resize(static_cast<std::size_t>(std::max(1, dispatch_.scheduler_count)));

  generated_count_ = static_cast<std::int64_t>(graph_.task_count());
  done_count_ = static_cast<std::int64_t>(graph_.count_in_state(TaskState::done));
  pruned_count_ = static_cast<std::int64_t>(graph_.count_in_state(TaskState::pruned));
  failed_permanent_ = static_cast<std::int64_t>(graph_.count_in_state(TaskState::failed));

  for (const DataId& d : graph_.data_ids()) {
    const DataRef& ref = graph_.data(d);
    if (ref.kind == DataKind::common_input && ref.size_bytes > 0)
      common_inputs_.push_back(d);
    if (ref.kind == DataKind::common_input || ref.kind == DataKind::unique_input)
      directory_.set_gfs_resident(d, true);
  }

  for (const TaskId& id : graph_.task_ids()) {
    const TaskSpec& t = graph_.task(id);
    if (t.width > platform_.node_count)
      raise(Errc::validation, "task '" + id + "' is wider than the machine");
    if (t.width > 1 && dispatch_.mode == DispatchPolicy::Mode::Push)
      raise(Errc::validation, "push dispatch cannot place multi-node tasks");
    if (t.width > 1 && !t.group.empty())
      raise(Errc::validation, "grouped task '" + id + "' must have width 1");
  }
  if (dispatch_.pipeline_grouping) {
    for (const std::string& g : graph_.group_ids()) {
      std::vector<TaskId> chain = graph_.group_chain(g);
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        group_next_[chain[i]] = chain[i + 1];
        group_prev_[chain[i + 1]] = chain[i];
      }
    }
  }
  queue_.set_tracing(true);
}

RngStream& Engine::rng(const std::string& name) {
  auto it = rngs_.find(name);
  if (it == rngs_.end())
    it = rngs_.emplace(name, std::make_unique<RngStream>(seed_, name)).first;
  return *it->second;
}

int Engine::scheduler_of(NodeId n) const {
  return static_cast<int>(n % static_cast<NodeId>(scheds_.size()));
}

std::optional<double> Engine::runtime_view(const TaskSpec& t) const {
  if (dispatch_.runtimes_known) return t.runtime_s;
  return t.estimate_s;
}

std::int64_t Engine::idle_allocated_nodes() const {
  std::int64_t idle = 0;
  for (const auto& [b, blk] : blocks_) {
    if (blk.released) continue;
    for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
      const Node& nd = node(n);
      if (nd.up && !nd.draining && !nd.occupant) ++idle;
    }
  }
  return idle;
}

bool Engine::group_start_pending(const TaskId& id) const {
  if (!dispatch_.pipeline_grouping) return false;
  auto it = group_prev_.find(id);
  if (it == group_prev_.end()) return false;
  return graph_.state(it->second) != TaskState::done;
}

void Engine::remove_from_idle(NodeId n) {
  Sched& sc = scheds_[static_cast<std::size_t>(scheduler_of(n))];
  auto it = std::find(sc.idle.begin(), sc.idle.end(), n);
  if (it != sc.idle.end()) sc.idle.erase(it);
}

// ---------------------------------------------------------------- run loop

RunResult Engine::run() {
  for (const TaskId& id : graph_.promote_ready()) (void)id;
  for (const TaskId& id : graph_.ready_tasks()) enqueue_ready(id);
  schedule_initial_failures();
  if (data_policy_.output == DataPolicy::Output::Collective &&
      data_policy_.flush_period_s > 0) {
    bool any_output = false;
    for (const DataId& d : graph_.data_ids())
      if (graph_.data(d).kind == DataKind::output) any_output = true;
    if (any_output)
      flush_event_ = queue_.schedule(data_policy_.flush_period_s, EventKind::flush, {});
  }
  if (resilience_.checkpoint_period_s > 0) {
    Payload p;
    p.tag = "checkpoint-tick";
    checkpoint_event_ =
        queue_.schedule(resilience_.checkpoint_period_s, EventKind::timer, p);
  }
  evaluate_provisioner();
  finalize_if_done();  // an empty or fully restored workload has nothing to run

  queue_.run(kInf, [this](const SimEvent& e) { handle(e); });

  if (completed_ && !all_terminal()) {
    quiesce_sweep();
    if (all_terminal()) {
      finalize_if_done();
      queue_.run(kInf, [this](const SimEvent& e) { handle(e); });
    } else {
      std::int64_t stuck = generated_count_ - terminal_count();
      raise(Errc::invariant_violation,
            std::to_string(stuck) + " tasks can never run and were not pruned");
    }
  }
  if (completed_ &&
      done_count_ + pruned_count_ + failed_permanent_ != generated_count_)
    raise(Errc::invariant_violation, "terminal task accounting does not add up");

  RunResult res;
  res.completed = completed_;
  res.end_time = queue_.clock();
  res.report = report_from_trace(queue_.trace(), platform_.cores_per_node);
  res.report.generated = generated_count_;
  res.report.pruned = pruned_count_;
  res.report.failed_permanent = failed_permanent_;
  res.report.completed = completed_;
  return res;
}

void Engine::handle(const SimEvent& e) {
  if (run_over_ && e.kind != EventKind::block_released) return;
  switch (e.kind) {
    case EventKind::timer: on_timer(e); break;
    case EventKind::block_granted: on_block_granted(e); break;
    case EventKind::block_released: on_block_released(e); break;
    case EventKind::worker_idle: on_worker_idle(e); break;
    case EventKind::dispatch: on_dispatch(e); break;
    case EventKind::task_start: on_task_start(e); break;
    case EventKind::task_end: on_task_end(e); break;
    case EventKind::task_fail: on_task_fail(e); break;
    case EventKind::transfer_start: break;  // trace record only
    case EventKind::transfer_end: on_transfer_end(e); break;
    case EventKind::prune_signal: on_prune_signal(e); break;
    case EventKind::failure_injected: on_failure_injected(e); break;
    case EventKind::chop_triggered: on_chop(e); break;
    case EventKind::flush: on_flush(e); break;
    case EventKind::checkpoint: break;  // trace record only
  }
}

void Engine::on_timer(const SimEvent& e) {
  const std::string& tag = e.payload.tag;
  if (tag == "grant") {
    outstanding_requests_ = std::max(0, outstanding_requests_ - 1);
    pending_grant_nodes_ -= e.payload.count;
    std::int64_t blocks_needed = e.payload.count / platform_.block_granularity_nodes;
    for (std::int64_t i = 0; i < blocks_needed; ++i) {
      if (free_blocks_.empty())
        raise(Errc::invariant_violation, "allocation granted beyond machine capacity");
      BlockId b = *free_blocks_.begin();
      free_blocks_.erase(free_blocks_.begin());
      Payload p;
      p.block = b;
      p.node = b * platform_.block_granularity_nodes;
      p.count = platform_.block_granularity_nodes;
      queue_.schedule(now(), EventKind::block_granted, p);
    }
    if (migrate_on_grant_) {
      migrate_on_grant_ = false;
      Payload p;
      p.tag = "migrate-start";
      queue_.schedule(now(), EventKind::timer, p);
    }
  } else if (tag == "arrival") {
    begin_stage_in(e.payload.task);
  } else if (tag == "push-arrival") {
    NodeId n = e.payload.node;
    backlogs_[n].push_back(e.payload.task);
    Node& nd = node(n);
    if (nd.allocated && nd.up && !nd.draining && !nd.occupant) pop_and_run(n);
    steal_sweep();
  } else if (tag == "compute") {
    finish_compute(e.payload.task);
  } else if (tag == "sched-wake") {
    Sched& sc = scheds_[static_cast<std::size_t>(e.payload.scheduler)];
    sc.wake_scheduled = false;
    try_dispatch();
  } else if (tag == "idle-release") {
    run_idle_release();
  } else if (tag == "reboot") {
    Node& nd = node(e.payload.node);
    nd.up = true;
    nd.idle_since = now();
    if (nd.allocated && !nd.draining && !nd.occupant) {
      Payload p;
      p.node = e.payload.node;
      queue_.schedule(now(), EventKind::worker_idle, p);
    }
  } else if (tag == "failure") {
    std::size_t idx = static_cast<std::size_t>(e.payload.count);
    const FailureSpec& spec = resilience_.failures[idx];
    if (spec.kind == FailureSpec::Kind::Strategic) {
      Payload p;
      p.tag = failure_kind_name(spec.kind);
      p.count = e.payload.count;
      queue_.schedule(now(), EventKind::failure_injected, p);
      return;
    }
    std::optional<NodeId> victim = spec.node;
    if (!victim) {
      std::vector<NodeId> pool;
      for (const auto& [b, blk] : blocks_) {
        if (blk.released) continue;
        for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n)
          if (node(n).up) pool.push_back(n);
      }
      if (!pool.empty()) {
        std::uint64_t pick =
            rng("failure:" + std::to_string(idx)).below(pool.size());
        victim = pool[static_cast<std::size_t>(pick)];
      }
    }
    if (victim) {
      Payload p;
      p.tag = failure_kind_name(spec.kind);
      p.node = *victim;
      p.count = e.payload.count;
      queue_.schedule(now(), EventKind::failure_injected, p);
    }
    if (spec.rate_per_node_hour) schedule_rate_arrival(idx);
  } else if (tag == "checkpoint-tick") {
    if (!resilience_.checkpoint_path.empty()) {
      Checkpoint cp = make_checkpoint();
      cp.save(resilience_.checkpoint_path);
    }
    Payload p;
    p.tag = "periodic";
    p.count = done_count_;
    queue_.schedule(now(), EventKind::checkpoint, p);
    Payload t;
    t.tag = "checkpoint-tick";
    checkpoint_event_ =
        queue_.schedule(now() + resilience_.checkpoint_period_s, EventKind::timer, t);
  } else if (tag == "migrate-start") {
    std::vector<NodeId> fresh;
    for (const auto& [b, blk] : blocks_) {
      if (blk.released) continue;
      for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
        const Node& nd = node(n);
        if (nd.up && !nd.draining && !nd.occupant) fresh.push_back(n);
      }
    }
    std::size_t at = 0;
    std::vector<TaskId> frozen;
    for (const auto& [id, r] : running_)
      if (r.frozen) frozen.push_back(id);
    for (const TaskId& id : frozen) {
      Running& r = running_[id];
      if (at >= fresh.size()) {
        kill_task_on_nodes(id, true);
        continue;
      }
      NodeId dst = fresh[at++];
      NodeId src = r.nodes[0];
      node(dst).occupant = id;
      blocks_[node(src).block].migrations_pending++;
      std::int64_t bytes = 0;
      for (const DataId& d : graph_.task(id).inputs) bytes += graph_.data(d).size_bytes;
      start_flow(Route::node_to_node, src, dst, "migrate:" + id, bytes, 0, kMigration,
                 id, std::to_string(src));
    }
    for (const auto& [b, blk] : blocks_) {
      if (blk.released || blk.migrations_pending > 0) continue;
      bool busy = false;
      for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n)
        if (node(n).occupant) busy = true;
      if (!busy && node(blk.first).draining) release_block(b);
    }
  } else if (tag == "flow-go") {
    auto it = flows_.find(e.payload.data);
    if (it == flows_.end()) return;
    Flow& f = it->second;
    f.draining = true;
    f.last_update = now();
    if (f.route == Route::node_to_node) {
      f.rate = platform_.node_link_bandwidth_bytes_per_s;
      Payload p;
      p.data = f.data;
      p.src = f.src;
      p.dst = f.dst;
      p.bytes = f.bytes;
      p.route = f.route;
      f.end_event =
          queue_.schedule(now() + f.remaining / f.rate, EventKind::transfer_end, p);
    } else {
      channel_for(f.route)->insert(e.payload.data);
      reschedule_channel(f.route);
    }
  }
}

// ------------------------------------------------------------- provisioning

void Engine::evaluate_provisioner() {
  if (run_over_ || finalizing_) return;
  while (true) {
    auto req = provisioner_.next_request(
        static_cast<std::int64_t>(in_queue_.size()), allocated_count_,
        idle_allocated_nodes(), outstanding_requests_, pending_grant_nodes_);
    if (!req) break;
    request_nodes(*req, false);
  }
}

void Engine::request_nodes(std::int64_t count, bool migrate_after) {
  std::int64_t rounded = round_to_granularity(count, platform_.block_granularity_nodes,
                                              platform_.node_count);
  if (rounded <= 0) return;
  ++outstanding_requests_;
  pending_grant_nodes_ += rounded;
  migrate_on_grant_ = migrate_on_grant_ || migrate_after;
  Payload p;
  p.tag = "grant";
  p.count = rounded;
  EventId id = queue_.schedule(now() + provisioner_.grant_delay(), EventKind::timer, p);
  grant_events_.insert(id);
}

void Engine::on_block_granted(const SimEvent& e) {
  BlockId b = e.payload.block;
  Block blk;
  blk.first = e.payload.node;
  blk.count = e.payload.count;
  blk.granted_at = now();
  blocks_[b] = blk;
  allocated_count_ += blk.count;
  std::vector<NodeId> members;
  for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
    Node& nd = node(n);
    nd.block = b;
    nd.allocated = true;
    nd.up = true;
    nd.draining = false;
    nd.occupant.reset();
    nd.idle_since = now();
    nd.cache->clear();
    nd.active_links = 0;
    members.push_back(n);
  }
  if (data_policy_.common_input == DataPolicy::CommonInput::PushBroadcast)
    for (const DataId& d : common_inputs_) start_broadcast(d, members);
  for (NodeId n : members) {
    Payload p;
    p.node = n;
    queue_.schedule(now(), EventKind::worker_idle, p);
  }
}

void Engine::release_block(BlockId b) {
  auto it = blocks_.find(b);
  if (it == blocks_.end() || it->second.released) return;
  it->second.released = true;
  Payload p;
  p.block = b;
  p.node = it->second.first;
  p.count = it->second.count;
  queue_.schedule(now(), EventKind::block_released, p);
}

void Engine::on_block_released(const SimEvent& e) {
  auto it = blocks_.find(e.payload.block);
  if (it == blocks_.end()) return;
  Block blk = it->second;
  for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
    Node& nd = node(n);
    if (nd.occupant)
      raise(Errc::invariant_violation,
            "block released while node " + std::to_string(n) + " is busy");
    kill_flows_at_node(n);
    std::vector<DataId> unflushed;
    for (const auto& [d, hn] : pending_flush_)
      if (hn == n) unflushed.push_back(d);
    for (const DataId& d : unflushed) {
      pending_flush_.erase({d, n});
      demote_done_producer(d);
    }
    nd.cache->clear();
    directory_.drop_node(n);
    remove_from_idle(n);
    nd.allocated = false;
    nd.draining = false;
    nd.block = -1;
  }
  allocated_count_ -= blk.count;
  blocks_.erase(e.payload.block);
  free_blocks_.insert(e.payload.block);
}

std::vector<BlockIdleInfo> Engine::block_idle_infos() const {
  std::vector<BlockIdleInfo> infos;
  for (const auto& [b, blk] : blocks_) {
    if (blk.released) continue;
    BlockIdleInfo info;
    info.id = b;
    double since = 0;
    bool idle = true;
    for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
      const Node& nd = node(n);
      if (nd.occupant || nd.draining) idle = false;
      since = std::max(since, nd.idle_since);
    }
    for (const auto& [d, hn] : pending_flush_)
      if (hn >= blk.first && hn < blk.first + blk.count) idle = false;
    if (idle) info.idle_since = since;
    infos.push_back(info);
  }
  return infos;
}

bool Engine::no_work_waiting() const {
  if (!in_queue_.empty()) return false;
  for (const auto& [n, bl] : backlogs_)
    if (!bl.empty()) return false;
  return true;
}

void Engine::schedule_idle_release(NodeId n) {
  (void)n;
  if (provisioner_.policy().mode != ProvisionPolicy::Mode::Dynamic) return;
  if (!provisioner_.policy().idle_release_after_s) return;
  Payload p;
  p.tag = "idle-release";
  EventId id = queue_.schedule(now() + *provisioner_.policy().idle_release_after_s,
                               EventKind::timer, p);
  housekeeping_.insert(id);
}

void Engine::run_idle_release() {
  if (run_over_ || finalizing_) return;
  std::vector<BlockId> victims =
      provisioner_.release_idle(block_idle_infos(), now(), no_work_waiting());
  for (BlockId b : victims) release_block(b);
}

// ----------------------------------------------------------------- dispatch

void Engine::enqueue_ready(const TaskId& id) {
  if (run_over_) return;
  if (in_queue_.count(id)) return;
  if (graph_.state(id) != TaskState::ready) return;
  if (group_start_pending(id)) return;  // chained onto its predecessor's node
  const TaskSpec& t = graph_.task(id);
  QueuedTask q{id, t.priority, runtime_view(t), enqueue_seq_++};
  auto pos = std::upper_bound(
      ready_queue_.begin(), ready_queue_.end(), q,
      [this](const QueuedTask& a, const QueuedTask& b) {
        return queued_before(dispatch_.ordering, a, b);
      });
  ready_queue_.insert(pos, q);
  in_queue_.insert(id);
  evaluate_provisioner();
}

void Engine::drop_queue_head_if_dead() {
  while (!ready_queue_.empty() &&
         graph_.state(ready_queue_.front().id) != TaskState::ready) {
    in_queue_.erase(ready_queue_.front().id);
    ready_queue_.erase(ready_queue_.begin());
  }
}

bool Engine::scheduler_gate(int s) {
  if (dispatch_.scheduler_throughput_per_s <= 0) return true;
  Sched& sc = scheds_[static_cast<std::size_t>(s)];
  if (sc.next_free <= now()) return true;
  if (!sc.wake_scheduled) {
    sc.wake_scheduled = true;
    Payload p;
    p.tag = "sched-wake";
    p.scheduler = s;
    EventId id = queue_.schedule(sc.next_free, EventKind::timer, p);
    housekeeping_.insert(id);
  }
  return false;
}

void Engine::charge_scheduler(int s) {
  if (dispatch_.scheduler_throughput_per_s <= 0) return;
  Sched& sc = scheds_[static_cast<std::size_t>(s)];
  sc.next_free = std::max(sc.next_free, now()) + 1.0 / dispatch_.scheduler_throughput_per_s;
}

void Engine::try_dispatch() {
  if (run_over_) return;
  if (dispatch_.mode == DispatchPolicy::Mode::Push) {
    push_out_work();
    steal_sweep();
    return;
  }
  bool progress = true;
  while (progress) {
    progress = false;
    drop_queue_head_if_dead();
    if (ready_queue_.empty()) return;
    for (int s = 0; s < static_cast<int>(scheds_.size()); ++s) {
      drop_queue_head_if_dead();
      if (ready_queue_.empty()) return;
      Sched& sc = scheds_[static_cast<std::size_t>(s)];
      const QueuedTask head = ready_queue_.front();
      const TaskSpec& spec = graph_.task(head.id);
      int w = spec.width;
      if (static_cast<int>(sc.idle.size()) < w) continue;
      if (!scheduler_gate(s)) continue;
      std::vector<NodeId> chosen;
      if (dispatch_.data_aware) {
        std::vector<std::pair<DataId, std::int64_t>> inputs;
        for (const DataId& d : spec.inputs) {
          std::int64_t sz = graph_.data(d).size_bytes;
          if (sz > 0) inputs.push_back({d, sz});
        }
        std::vector<NodeId> cands(sc.idle.begin(), sc.idle.end());
        std::vector<NodeId> ranked = rank_workers(
            inputs, cands,
            [this](NodeId n, const DataId& d) { return node(n).cache->contains(d); });
        chosen.assign(ranked.begin(), ranked.begin() + w);
      } else {
        chosen.assign(sc.idle.begin(), sc.idle.begin() + w);
      }
      for (NodeId n : chosen) {
        auto pos = std::find(sc.idle.begin(), sc.idle.end(), n);
        sc.idle.erase(pos);
      }
      ready_queue_.erase(ready_queue_.begin());
      in_queue_.erase(head.id);
      charge_scheduler(s);
      begin_assignment(head.id, chosen, s, "pull");
      progress = true;
    }
  }
}

void Engine::push_out_work() {
  if (run_over_) return;
  std::vector<NodeId> cands;
  for (const auto& [b, blk] : blocks_) {
    if (blk.released) continue;
    for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
      const Node& nd = node(n);
      if (nd.allocated && nd.up && !nd.draining) cands.push_back(n);
    }
  }
  if (cands.empty()) return;
  while (true) {
    drop_queue_head_if_dead();
    if (ready_queue_.empty()) return;
    const QueuedTask head = ready_queue_.front();
    std::size_t start = static_cast<std::size_t>(rr_cursor_) % cands.size();
    std::optional<NodeId> target;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      NodeId n = cands[(start + i) % cands.size()];
      if (static_cast<int>(backlogs_[n].size()) >= dispatch_.push_backlog_limit) continue;
      if (!scheduler_gate(scheduler_of(n))) continue;
      target = n;
      rr_cursor_ = static_cast<std::int64_t>((start + i + 1) % cands.size());
      break;
    }
    if (!target) return;
    ready_queue_.erase(ready_queue_.begin());
    in_queue_.erase(head.id);
    graph_.set_state(head.id, TaskState::dispatched);
    charge_scheduler(scheduler_of(*target));
    Payload p;
    p.task = head.id;
    p.node = *target;
    p.scheduler = scheduler_of(*target);
    p.width = 1;
    p.attempt = retries_.count(head.id) ? retries_[head.id] + 1 : 1;
    p.tag = "push";
    queue_.schedule(now(), EventKind::dispatch, p);
  }
}

const std::vector<NodeId>& Engine::neighbor_list(NodeId n) {
  auto it = neighbors_.find(n);
  if (it != neighbors_.end()) return it->second;
  std::vector<NodeId> perm;
  perm.reserve(static_cast<std::size_t>(platform_.node_count) - 1);
  for (NodeId i = 0; i < platform_.node_count; ++i)
    if (i != n) perm.push_back(i);
  RngStream& r = rng("steal-neighbors:" + std::to_string(n));
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(r.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return neighbors_.emplace(n, std::move(perm)).first->second;
}

void Engine::steal_sweep() {
  if (!dispatch_.stealing || run_over_) return;
  std::vector<NodeId> thieves;
  for (const auto& [b, blk] : blocks_) {
    if (blk.released) continue;
    for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
      const Node& nd = node(n);
      if (nd.allocated && nd.up && !nd.draining && !nd.occupant && backlogs_[n].empty())
        thieves.push_back(n);
    }
  }
  for (NodeId thief : thieves) {
    const Node& nd = node(thief);
    if (nd.occupant || !backlogs_[thief].empty()) continue;
    std::vector<NodeId> hood;
    for (NodeId cand : neighbor_list(thief)) {
      const Node& c = node(cand);
      if (c.allocated && c.up && !c.draining) hood.push_back(cand);
      if (static_cast<int>(hood.size()) >= dispatch_.steal_neighbor_count) break;
    }
    auto victim = pick_steal_victim(hood, [this](NodeId v) {
      auto it = backlogs_.find(v);
      return it == backlogs_.end() ? std::size_t(0) : it->second.size();
    });
    if (!victim) continue;
    TaskId t = backlogs_[*victim].back();
    backlogs_[*victim].pop_back();
    Payload p;
    p.task = t;
    p.node = thief;
    p.src = *victim;
    p.scheduler = scheduler_of(thief);
    p.width = 1;
    p.attempt = retries_.count(t) ? retries_[t] + 1 : 1;
    p.tag = "steal";
    queue_.schedule(now(), EventKind::dispatch, p);
  }
}

void Engine::pop_and_run(NodeId n) {
  Node& nd = node(n);
  auto& bl = backlogs_[n];
  while (!bl.empty()) {
    if (nd.occupant || !nd.up || nd.draining || !nd.allocated) return;
    TaskId t = bl.front();
    bl.pop_front();
    if (graph_.state(t) != TaskState::dispatched || staging_.count(t) ||
        running_.count(t))
      continue;  // pruned or requeued while waiting
    nd.occupant = t;
    Staging st;
    st.nodes = {n};
    st.attempt = retries_.count(t) ? retries_[t] + 1 : 1;
    staging_[t] = st;
    begin_stage_in(t);
    return;
  }
}

void Engine::begin_assignment(const TaskId& id, const std::vector<NodeId>& nodes,
                              int scheduler, const std::string& tag) {
  for (NodeId n : nodes) node(n).occupant = id;
  if (graph_.state(id) == TaskState::ready) graph_.set_state(id, TaskState::dispatched);
  Staging st;
  st.nodes = nodes;
  st.attempt = retries_.count(id) ? retries_[id] + 1 : 1;
  staging_[id] = st;
  Payload p;
  p.task = id;
  p.node = nodes[0];
  p.scheduler = scheduler;
  p.width = static_cast<std::int64_t>(nodes.size());
  p.attempt = st.attempt;
  p.tag = tag;
  queue_.schedule(now(), EventKind::dispatch, p);
}

void Engine::on_dispatch(const SimEvent& e) {
  const std::string& tag = e.payload.tag;
  if (tag == "push" || tag == "steal") {
    double latency = dispatch_.dispatch_latency_s *
                     (tag == "steal" ? 1 : dispatch_.hops());
    if (graph_.state(e.payload.task) != TaskState::dispatched) return;
    if (latency > 0) {
      Payload p;
      p.tag = "push-arrival";
      p.task = e.payload.task;
      p.node = e.payload.node;
      queue_.schedule(now() + latency, EventKind::timer, p);
    } else {
      NodeId n = e.payload.node;
      backlogs_[n].push_back(e.payload.task);
      Node& nd = node(n);
      if (nd.allocated && nd.up && !nd.draining && !nd.occupant) pop_and_run(n);
    }
    return;
  }
  if (!staging_.count(e.payload.task)) return;  // killed in the same instant
  double latency = tag == "group" ? 0 : dispatch_.dispatch_latency_s * dispatch_.hops();
  if (latency > 0) {
    Payload p;
    p.tag = "arrival";
    p.task = e.payload.task;
    p.node = e.payload.node;
    queue_.schedule(now() + latency, EventKind::timer, p);
  } else {
    begin_stage_in(e.payload.task);
  }
}

// ----------------------------------------------------------------- stage-in

void Engine::begin_stage_in(const TaskId& id) {
  auto it = staging_.find(id);
  if (it == staging_.end()) return;
  Staging& st = it->second;
  NodeId primary = st.nodes[0];
  const TaskSpec& spec = graph_.task(id);
  st.missing.clear();
  for (const DataId& d : spec.inputs) {
    if (graph_.data(d).size_bytes <= 0) continue;
    if (node(primary).cache->get(d)) {
      if (!st.pinned.count(d)) {
        node(primary).cache->pin(d);
        st.pinned.insert(d);
      }
      continue;
    }
    st.missing.insert(d);
  }
  if (st.missing.empty()) {
    maybe_start(id);
    return;
  }
  if (spec.combinable && data_policy_.reduction_trees && st.missing.size() >= 2) {
    start_reduction(id);
    return;
  }
  std::vector<DataId> want(st.missing.begin(), st.missing.end());
  for (const DataId& d : want) {
    stage_input(id, d, primary);
    if (!staging_.count(id)) return;  // parked while waiting for a lost object
  }
  maybe_start(id);
}

void Engine::stage_input(const TaskId& task, const DataId& d, NodeId dest) {
  auto sit = staging_.find(task);
  if (sit == staging_.end()) return;
  Staging& st = sit->second;
  if (node(dest).cache->get(d)) {
    if (!st.pinned.count(d)) {
      node(dest).cache->pin(d);
      st.pinned.insert(d);
    }
    st.missing.erase(d);
    return;
  }
  auto in = inbound_.find(inbound_key(dest, d));
  if (in != inbound_.end()) {
    flows_[in->second].waiter = task;
    return;
  }
  for (auto& [bkey, bs] : broadcasts_) {
    if (bs.data != d) continue;
    for (const auto& [src, kids] : bs.children)
      for (NodeId kid : kids)
        if (kid == dest) {
          bs.parked[dest] = task;
          return;
        }
  }
  const DataRef& ref = graph_.data(d);
  std::int64_t size = ref.size_bytes;
  if (ref.kind == DataKind::common_input || ref.kind == DataKind::unique_input) {
    start_flow(Route::gfs_read, kGfs, dest, d, size, 0, kStageIn, task, "");
    return;
  }
  // intermediate (or consumed final output): placement policy decides the path
  LocationDirectory::Lookup look;
  bool known = true;
  try {
    look = directory_.locate(d);
  } catch (const Error&) {
    known = false;
  }
  std::vector<NodeId> holders;
  if (known)
    for (NodeId h : look.replicas) {
      const Node& nd = node(h);
      if (nd.up && nd.allocated && h != dest) holders.push_back(h);
    }
  bool on_store = known && look.on_gfs;
  double charge = known ? look.charge_s : 0;

  auto peer_fetch = [&]() {
    NodeId best = holders[0];
    for (NodeId h : holders)
      if (node(h).active_links < node(best).active_links) best = h;
    start_flow(Route::node_to_node, best, dest, d, size, charge, kStageIn, task, "");
  };

  switch (data_policy_.intermediate) {
    case DataPolicy::Intermediate::GfsPassthrough:
      if (on_store) {
        start_flow(Route::gfs_read, kGfs, dest, d, size, 0, kStageIn, task, "");
        return;
      }
      if (!holders.empty()) {
        peer_fetch();
        return;
      }
      break;
    case DataPolicy::Intermediate::PeerToPeer:
      if (!holders.empty()) {
        peer_fetch();
        return;
      }
      if (on_store) {
        start_flow(Route::gfs_read, kGfs, dest, d, size, 0, kStageIn, task, "");
        return;
      }
      break;
    case DataPolicy::Intermediate::Ifs:
      if (on_store) {
        start_flow(Route::ifs_read, kIfs, dest, d, size, 0, kStageIn, task, "");
        return;
      }
      if (!holders.empty()) {
        peer_fetch();
        return;
      }
      break;
  }
  // the object survives nowhere reachable: re-run its producer and wait
  handle_lost_object(d);
  waiting_on_data_[d].push_back(task);
  requeue_from_staging(task);
}

void Engine::requeue_from_staging(const TaskId& task) {
  auto it = staging_.find(task);
  if (it == staging_.end()) return;
  Staging st = it->second;
  staging_.erase(it);
  cancel_flows_waiting_on(task);
  NodeId primary = st.nodes[0];
  for (const DataId& d : st.pinned)
    if (node(primary).cache->contains(d)) node(primary).cache->unpin(d);
  for (NodeId n : st.nodes) {
    Node& nd = node(n);
    if (nd.occupant && *nd.occupant == task) {
      nd.occupant.reset();
      if (nd.allocated && nd.up && !nd.draining) {
        Payload p;
        p.node = n;
        queue_.schedule(now(), EventKind::worker_idle, p);
      }
    }
  }
  if (graph_.state(task) == TaskState::dispatched)
    graph_.set_state(task, TaskState::ready);
  // deliberately not re-enqueued: a waiting list entry re-queues it once the
  // object exists again
}

void Engine::handle_lost_object(const DataId& d) {
  demote_done_producer(d);
}

void Engine::demote_done_producer(const DataId& d) {
  auto prod = graph_.producer_of(d);
  if (!prod) return;
  if (graph_.state(*prod) != TaskState::done) return;
  const DataRef& ref = graph_.data(d);
  bool wanted = ref.kind == DataKind::output;
  if (!wanted)
    for (const TaskId& c : graph_.consumers_of(d)) {
      TaskState s = graph_.state(c);
      if (s == TaskState::pending || s == TaskState::ready ||
          s == TaskState::dispatched || s == TaskState::running)
        wanted = true;
    }
  if (!wanted) return;
  bool survives = directory_.gfs_resident(d);
  if (!survives) {
    auto reps = directory_.replica_map().find(d);
    if (reps != directory_.replica_map().end())
      for (NodeId h : reps->second)
        if (node(h).up && node(h).allocated) survives = true;
  }
  if (survives) return;
  graph_.set_state(*prod, TaskState::ready);
  --done_count_;
  enqueue_ready(*prod);
}

void Engine::poke_waiters(const DataId& d) {
  auto it = waiting_on_data_.find(d);
  if (it == waiting_on_data_.end()) return;
  std::vector<TaskId> parked = it->second;
  waiting_on_data_.erase(it);
  for (const TaskId& t : parked)
    if (graph_.state(t) == TaskState::ready) enqueue_ready(t);
  try_dispatch();
}

void Engine::maybe_start(const TaskId& id) {
  auto it = staging_.find(id);
  if (it == staging_.end()) return;
  Staging& st = it->second;
  if (!st.missing.empty() || st.start_scheduled) return;
  st.start_scheduled = true;
  Payload p;
  p.task = id;
  p.node = st.nodes[0];
  p.width = static_cast<std::int64_t>(st.nodes.size());
  p.attempt = st.attempt;
  queue_.schedule(now(), EventKind::task_start, p);
}

void Engine::on_task_start(const SimEvent& e) {
  const TaskId& id = e.payload.task;
  if (e.payload.tag == "resume") {
    auto it = running_.find(id);
    if (it == running_.end()) return;
    Running& r = it->second;
    r.started = now();
    r.frozen = false;
    Payload p;
    p.tag = "compute";
    p.task = id;
    r.compute_event = queue_.schedule(now() + r.runtime, EventKind::timer, p);
    return;
  }
  auto it = staging_.find(id);
  if (it == staging_.end()) return;
  Staging st = it->second;
  staging_.erase(it);
  graph_.set_state(id, TaskState::running);
  Running r;
  r.nodes = st.nodes;
  r.pinned = st.pinned;
  r.started = now();
  r.attempt = st.attempt;
  double rt = graph_.task(id).runtime_s;
  r.runtime = rt;
  double fail_at = kInf;
  for (const FailureSpec& f : resilience_.failures) {
    if (f.kind != FailureSpec::Kind::Application) continue;
    if (f.task && *f.task == id && r.attempt <= f.fail_attempts)
      fail_at = std::min(fail_at, f.fail_after_start_s);
    if (f.runtime_cap_s && rt > *f.runtime_cap_s)
      fail_at = std::min(fail_at, *f.runtime_cap_s);
  }
  if (fail_at < rt) {
    Payload p;
    p.task = id;
    p.node = st.nodes[0];
    p.attempt = r.attempt;
    p.tag = failure_kind_name(FailureSpec::Kind::Application);
    r.fail_event = queue_.schedule(now() + fail_at, EventKind::task_fail, p);
  } else {
    Payload p;
    p.tag = "compute";
    p.task = id;
    r.compute_event = queue_.schedule(now() + rt, EventKind::timer, p);
  }
  running_[id] = r;
}

// ------------------------------------------------------------------ outputs

void Engine::cache_insert(NodeId n, const DataId& d, std::int64_t bytes) {
  std::vector<DataId> evicted = node(n).cache->put(d, bytes);
  for (const DataId& ev : evicted) directory_.remove_replica(ev, n);
}

void Engine::finish_compute(const TaskId& id) {
  auto it = running_.find(id);
  if (it == running_.end()) return;
  if (graph_.state(id) == TaskState::pruned) return;
  Running& r = it->second;
  r.compute_finished = true;
  NodeId primary = r.nodes[0];
  const TaskSpec& spec = graph_.task(id);
  for (const DataId& d : spec.outputs) {
    const DataRef& ref = graph_.data(d);
    if (ref.size_bytes <= 0) {
      directory_.set_gfs_resident(d, true);
      poke_waiters(d);
      continue;
    }
    cache_insert(primary, d, ref.size_bytes);
    directory_.add_replica(d, primary);
    if (ref.kind == DataKind::intermediate) {
      switch (data_policy_.intermediate) {
        case DataPolicy::Intermediate::GfsPassthrough:
          r.writes_open.insert(d);
          start_flow(Route::gfs_write, primary, kGfs, d, ref.size_bytes, 0,
                     kOutputWrite, id, "");
          break;
        case DataPolicy::Intermediate::PeerToPeer:
          poke_waiters(d);
          break;
        case DataPolicy::Intermediate::Ifs:
          r.writes_open.insert(d);
          start_flow(Route::ifs_write, primary, kIfs, d, ref.size_bytes, 0,
                     kOutputWrite, id, "");
          break;
      }
    } else {
      if (data_policy_.output == DataPolicy::Output::Synchronized) {
        r.writes_open.insert(d);
        start_flow(Route::gfs_write, primary, kGfs, d, ref.size_bytes, 0, kOutputWrite,
                   id, "");
      } else {
        node(primary).cache->pin(d);
        pending_flush_.insert({d, primary});
        poke_waiters(d);
      }
    }
  }
  if (r.writes_open.empty()) {
    Payload p;
    p.task = id;
    p.node = primary;
    p.attempt = r.attempt;
    r.end_event = queue_.schedule(now(), EventKind::task_end, p);
  }
}

void Engine::on_task_end(const SimEvent& e) {
  const TaskId& id = e.payload.task;
  auto it = running_.find(id);
  if (it == running_.end()) return;
  // A sibling finishing in this same instant may have pruned us; the queued
  // prune signal will reclaim the node.
  if (graph_.state(id) == TaskState::pruned) return;
  Running r = it->second;
  running_.erase(it);
  NodeId primary = r.nodes[0];
  graph_.set_state(id, TaskState::done);
  ++done_count_;
  for (const DataId& d : r.pinned)
    if (node(primary).cache->contains(d)) node(primary).cache->unpin(d);

  std::vector<TaskId> promoted = graph_.promote_ready_after(id);
  bool continued_inline = false;
  auto nx = group_next_.find(id);
  if (dispatch_.pipeline_grouping && nx != group_next_.end()) {
    const TaskId& next = nx->second;
    for (const TaskId& t : promoted) {
      if (t == next && graph_.state(next) == TaskState::ready) {
        node(primary).occupant = next;
        begin_assignment(next, {primary}, scheduler_of(primary), "group");
        continued_inline = true;
      } else {
        enqueue_ready(t);
      }
    }
  } else {
    for (const TaskId& t : promoted) enqueue_ready(t);
  }
  for (NodeId n : r.nodes) {
    Node& nd = node(n);
    if (continued_inline && n == primary) continue;
    if (nd.occupant && *nd.occupant == id) nd.occupant.reset();
    if (nd.allocated && nd.up && !nd.draining && !nd.occupant) {
      // Visible to the try_dispatch below; the queued event would land too
      // late for placement decisions made in this same instant.
      if (dispatch_.mode == DispatchPolicy::Mode::Pull) {
        Sched& sc = scheds_[static_cast<std::size_t>(scheduler_of(n))];
        if (std::find(sc.idle.begin(), sc.idle.end(), n) == sc.idle.end())
          sc.idle.push_back(n);
        nd.idle_since = now();
      }
      Payload p;
      p.node = n;
      queue_.schedule(now(), EventKind::worker_idle, p);
    }
  }

  if (auto hk = graph_.iteration_hook(id)) {
    std::vector<TaskId> fresh =
        graph_.unfold_iteration(hk->template_id, static_cast<double>(hk->iteration));
    generated_count_ += static_cast<std::int64_t>(fresh.size());
    for (const TaskId& t : fresh)
      if (graph_.state(t) == TaskState::pending && graph_.inputs_available(t)) {
        graph_.set_state(t, TaskState::ready);
        enqueue_ready(t);
      }
  }

  auto sib = hooks_.prune_siblings.find(id);
  if (sib != hooks_.prune_siblings.end() && hooks_.prune_probability > 0) {
    std::vector<TaskId> live;
    for (const TaskId& s : sib->second) {
      TaskState st = graph_.state(s);
      if (st == TaskState::pending || st == TaskState::ready ||
          st == TaskState::dispatched || st == TaskState::running)
        live.push_back(s);
    }
    if (!live.empty() && rng("prune").u01() < hooks_.prune_probability) {
      for (const TaskId& s : live) {
        TaskState st = graph_.state(s);
        if (st == TaskState::done || st == TaskState::pruned) continue;
        apply_prune_results(graph_.prune_tasks(s));
      }
    }
  }

  task_terminalized();
  finalize_if_done();
  evaluate_provisioner();
  try_dispatch();
}

// ------------------------------------------------------------------ failure

void Engine::emit_task_fail(const TaskId& id, NodeId where, FailureSpec::Kind kind) {
  int attempt = 1;
  auto st = staging_.find(id);
  if (st != staging_.end()) attempt = st->second.attempt;
  auto rn = running_.find(id);
  if (rn != running_.end()) attempt = rn->second.attempt;
  Payload p;
  p.task = id;
  p.node = where;
  p.attempt = attempt;
  p.tag = failure_kind_name(kind);
  queue_.schedule(now(), EventKind::task_fail, p);
}

void Engine::on_task_fail(const SimEvent& e) {
  const TaskId& id = e.payload.task;
  bool was_staging = staging_.count(id) != 0;
  bool was_running = running_.count(id) != 0;
  if (!was_staging && !was_running) return;
  if (graph_.state(id) == TaskState::pruned) return;

  std::vector<NodeId> held;
  if (was_staging) {
    Staging st = staging_[id];
    staging_.erase(id);
    held = st.nodes;
    cancel_flows_waiting_on(id);
    NodeId primary = st.nodes[0];
    for (const DataId& d : st.pinned)
      if (node(primary).cache->contains(d)) node(primary).cache->unpin(d);
  } else {
    Running r = running_[id];
    running_.erase(id);
    held = r.nodes;
    if (r.compute_event) queue_.cancel(r.compute_event);
    if (r.fail_event && e.payload.tag != "application") queue_.cancel(r.fail_event);
    if (r.end_event) queue_.cancel(r.end_event);
    cancel_flows_waiting_on(id);
    NodeId primary = r.nodes[0];
    for (const DataId& d : r.pinned)
      if (node(primary).cache->contains(d)) node(primary).cache->unpin(d);
    if (r.compute_finished)
      for (const DataId& d : graph_.task(id).outputs) {
        pending_flush_.erase({d, primary});
        if (node(primary).cache->erase(d)) directory_.remove_replica(d, primary);
      }
  }
  for (NodeId n : held) {
    Node& nd = node(n);
    if (nd.occupant && *nd.occupant == id) nd.occupant.reset();
    if (nd.up && nd.allocated && !nd.draining && !nd.occupant) {
      if (dispatch_.mode == DispatchPolicy::Mode::Pull) {
        Sched& sc = scheds_[static_cast<std::size_t>(scheduler_of(n))];
        if (std::find(sc.idle.begin(), sc.idle.end(), n) == sc.idle.end())
          sc.idle.push_back(n);
        nd.idle_since = now();
      }
      Payload p;
      p.node = n;
      queue_.schedule(now(), EventKind::worker_idle, p);
    }
  }

  graph_.set_state(id, TaskState::failed);
  int count = ++retries_[id];
  if (count <= resilience_.max_retries) {
    graph_.set_state(id, TaskState::ready);
    enqueue_ready(id);
  } else {
    ++failed_permanent_;
    for (const DataId& d : graph_.task(id).outputs)
      for (const TaskId& c : graph_.consumers_of(d)) {
        TaskState s = graph_.state(c);
        if (s == TaskState::pending || s == TaskState::ready)
          apply_prune_results(graph_.prune_tasks(c));
      }
    task_terminalized();
  }
  finalize_if_done();
  evaluate_provisioner();
  try_dispatch();
}

void Engine::schedule_initial_failures() {
  for (std::size_t i = 0; i < resilience_.failures.size(); ++i) {
    const FailureSpec& f = resilience_.failures[i];
    if (f.kind == FailureSpec::Kind::Application) continue;  // armed at task start
    if (f.at_time_s) {
      Payload p;
      p.tag = "failure";
      p.count = static_cast<std::int64_t>(i);
      ambient_events_.push_back(
          queue_.schedule(*f.at_time_s, EventKind::timer, p));
    } else if (f.rate_per_node_hour) {
      schedule_rate_arrival(i);
    }
    // strategic completed-fraction triggers are checked as tasks finish
  }
}

void Engine::schedule_rate_arrival(std::size_t idx) {
  const FailureSpec& f = resilience_.failures[idx];
  double pop = static_cast<double>(std::max<std::int64_t>(1, allocated_count_));
  double mean_s = 3600.0 / (*f.rate_per_node_hour * pop);
  double u = rng("failure:" + std::to_string(idx)).u01();
  double dt = -mean_s * std::log1p(-u);
  Payload p;
  p.tag = "failure";
  p.count = static_cast<std::int64_t>(idx);
  ambient_events_.push_back(queue_.schedule(now() + dt, EventKind::timer, p));
}

void Engine::on_failure_injected(const SimEvent& e) {
  const std::string& tag = e.payload.tag;
  if (tag == failure_kind_name(FailureSpec::Kind::Strategic)) {
    do_strategic();
    return;
  }
  std::size_t idx = static_cast<std::size_t>(e.payload.count);
  const FailureSpec& f = resilience_.failures[idx];
  node_failure(e.payload.node, f.kind, f.permanent, f.reboot_delay_s);
}

void Engine::node_failure(NodeId n, FailureSpec::Kind kind, bool permanent,
                          double reboot_delay) {
  Node& nd = node(n);
  if (!nd.up) return;
  nd.up = false;
  nd.idle_since = now();
  remove_from_idle(n);
  if (nd.occupant) emit_task_fail(*nd.occupant, n, kind);
  kill_flows_at_node(n);
  std::vector<DataId> unflushed;
  for (const auto& [d, hn] : pending_flush_)
    if (hn == n) unflushed.push_back(d);
  for (const DataId& d : unflushed) {
    pending_flush_.erase({d, n});
  }
  nd.cache->clear();
  directory_.drop_node(n);
  for (const DataId& d : unflushed) demote_done_producer(d);
  auto bl = backlogs_.find(n);
  if (bl != backlogs_.end()) {
    for (const TaskId& t : bl->second)
      if (graph_.state(t) == TaskState::dispatched) {
        graph_.set_state(t, TaskState::ready);
        enqueue_ready(t);
      }
    bl->second.clear();
  }
  if (!permanent) {
    Payload p;
    p.tag = "reboot";
    p.node = n;
    EventId id = queue_.schedule(now() + reboot_delay, EventKind::timer, p);
    housekeeping_.insert(id);
  }
  try_dispatch();
}

// -------------------------------------------------------------------- prune

void Engine::apply_prune_results(const std::vector<TaskId>& pruned) {
  pruned_count_ += static_cast<std::int64_t>(pruned.size());
  for (const TaskId& id : pruned) {
    if (staging_.count(id) || running_.count(id)) {
      // Cancel right away: an end or fail already queued for this instant
      // must not outrun the prune signal into the trace.
      auto rit = running_.find(id);
      if (rit != running_.end()) {
        Running& r = rit->second;
        if (r.compute_event) queue_.cancel(r.compute_event);
        if (r.fail_event) queue_.cancel(r.fail_event);
        if (r.end_event) queue_.cancel(r.end_event);
        r.compute_event = r.fail_event = r.end_event = 0;
      }
      NodeId where = staging_.count(id) ? staging_[id].nodes[0] : running_[id].nodes[0];
      Payload p;
      p.task = id;
      p.node = where;
      queue_.schedule(now(), EventKind::prune_signal, p);
    }
  }
  task_terminalized();
}

void Engine::on_prune_signal(const SimEvent& e) {
  kill_task_on_nodes(e.payload.task, false);
  finalize_if_done();
  try_dispatch();
}

void Engine::kill_task_on_nodes(const TaskId& id, bool requeue) {
  std::vector<NodeId> held;
  NodeId primary = -1;
  if (staging_.count(id)) {
    Staging st = staging_[id];
    staging_.erase(id);
    held = st.nodes;
    primary = st.nodes[0];
    cancel_flows_waiting_on(id);
    for (const DataId& d : st.pinned)
      if (node(primary).cache->contains(d)) node(primary).cache->unpin(d);
  } else if (running_.count(id)) {
    Running r = running_[id];
    running_.erase(id);
    held = r.nodes;
    primary = r.nodes[0];
    if (r.compute_event) queue_.cancel(r.compute_event);
    if (r.fail_event) queue_.cancel(r.fail_event);
    if (r.end_event) queue_.cancel(r.end_event);
    cancel_flows_waiting_on(id);
    for (const DataId& d : r.pinned)
      if (node(primary).cache->contains(d)) node(primary).cache->unpin(d);
    if (r.compute_finished)
      for (const DataId& d : graph_.task(id).outputs) {
        pending_flush_.erase({d, primary});
        if (node(primary).cache->erase(d)) directory_.remove_replica(d, primary);
      }
  } else {
    return;
  }
  for (NodeId n : held) {
    Node& nd = node(n);
    if (nd.occupant && *nd.occupant == id) nd.occupant.reset();
    if (nd.up && nd.allocated && !nd.draining && !nd.occupant) {
      Payload p;
      p.node = n;
      queue_.schedule(now(), EventKind::worker_idle, p);
    }
  }
  if (requeue) {
    TaskState s = graph_.state(id);
    if (s == TaskState::dispatched || s == TaskState::running) {
      graph_.set_state(id, TaskState::ready);
      enqueue_ready(id);
    }
  }
}

void Engine::task_terminalized() {
  if (run_over_) return;
  if (!chop_fired_ && dispatch_.chop) {
    std::int64_t threshold =
        chop_threshold(generated_count_, dispatch_.chop->trigger_fraction);
    if (done_count_ >= threshold && !all_terminal()) {
      chop_fired_ = true;
      Payload p;
      p.count = dispatch_.chop->restart_nodes;
      p.tag = dispatch_.migration ? "migrate" : "requeue";
      queue_.schedule(now(), EventKind::chop_triggered, p);
    }
  }
  if (!strategic_fired_) {
    for (std::size_t i = 0; i < resilience_.failures.size(); ++i) {
      const FailureSpec& f = resilience_.failures[i];
      if (f.kind != FailureSpec::Kind::Strategic || !f.at_completed_fraction) continue;
      double need = std::ceil(*f.at_completed_fraction *
                              static_cast<double>(generated_count_));
      if (static_cast<double>(done_count_) >= need) {
        strategic_fired_ = true;
        Payload p;
        p.tag = failure_kind_name(FailureSpec::Kind::Strategic);
        p.count = static_cast<std::int64_t>(i);
        queue_.schedule(now(), EventKind::failure_injected, p);
      }
    }
  }
}

// --------------------------------------------------------------------- chop

void Engine::on_chop(const SimEvent& e) {
  (void)e;
  if (run_over_) return;
  for (EventId id : grant_events_) queue_.cancel(id);
  grant_events_.clear();
  outstanding_requests_ = 0;
  pending_grant_nodes_ = 0;
  migrate_on_grant_ = false;

  std::vector<TaskId> stagers;
  for (const auto& [id, st] : staging_) stagers.push_back(id);
  std::vector<TaskId> runners;
  for (const auto& [id, r] : running_) runners.push_back(id);

  if (!dispatch_.migration) {
    // Drain everything first so requeued tasks cannot land back on the
    // allocation we are about to hand back.
    for (auto& [b, blk] : blocks_) {
      if (blk.released) continue;
      for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
        node(n).draining = true;
        remove_from_idle(n);
      }
    }
    for (const TaskId& id : stagers) kill_task_on_nodes(id, true);
    for (const TaskId& id : runners) kill_task_on_nodes(id, true);
    for (auto& [n, bl] : backlogs_) {
      for (const TaskId& t : bl)
        if (graph_.state(t) == TaskState::dispatched) {
          graph_.set_state(t, TaskState::ready);
          enqueue_ready(t);
        }
      bl.clear();
    }
    std::vector<BlockId> all;
    for (const auto& [b, blk] : blocks_)
      if (!blk.released) all.push_back(b);
    for (BlockId b : all) release_block(b);
  } else {
    for (const TaskId& id : stagers) kill_task_on_nodes(id, true);
    for (auto& [n, bl] : backlogs_) {
      for (const TaskId& t : bl)
        if (graph_.state(t) == TaskState::dispatched) {
          graph_.set_state(t, TaskState::ready);
          enqueue_ready(t);
        }
      bl.clear();
    }
    for (const TaskId& id : runners) {
      Running& r = running_[id];
      if (r.compute_event) {
        queue_.cancel(r.compute_event);
        r.compute_event = 0;
      }
      if (r.fail_event) {
        queue_.cancel(r.fail_event);
        r.fail_event = 0;
      }
      double elapsed = now() - r.started;
      r.runtime = std::max(0.0, r.runtime - elapsed);
      r.frozen = true;
    }
    for (auto& [b, blk] : blocks_) {
      if (blk.released) continue;
      bool busy = false;
      for (std::int64_t n = blk.first; n < blk.first + blk.count; ++n) {
        node(n).draining = true;
        remove_from_idle(n);
        if (node(n).occupant) busy = true;
      }
      if (!busy) release_block(b);
    }
  }
  // Requeueing may have poked the provisioner; the chop request replaces
  // whatever it asked for.
  for (EventId id : grant_events_) queue_.cancel(id);
  grant_events_.clear();
  outstanding_requests_ = 0;
  pending_grant_nodes_ = 0;
  request_nodes(dispatch_.chop->restart_nodes, dispatch_.migration);
}

void Engine::do_strategic() {
  if (run_over_) return;
  completed_ = false;
  if (!resilience_.checkpoint_path.empty()) {
    Checkpoint cp = make_checkpoint();
    cp.save(resilience_.checkpoint_path);
  }
  Payload p;
  p.tag = "strategic";
  p.count = done_count_;
  queue_.schedule(now(), EventKind::checkpoint, p);

  std::vector<TaskId> live;
  for (const auto& [id, st] : staging_) live.push_back(id);
  for (const auto& [id, r] : running_) live.push_back(id);
  std::sort(live.begin(), live.end());
  for (const TaskId& id : live) kill_task_on_nodes(id, false);
  for (auto& [n, bl] : backlogs_) bl.clear();
  ready_queue_.clear();
  in_queue_.clear();
  waiting_on_data_.clear();

  std::vector<std::string> keys;
  for (const auto& [k, f] : flows_) keys.push_back(k);
  for (const std::string& k : keys) drop_flow(k, true);
  broadcasts_.clear();
  reductions_.clear();
  pending_flush_.clear();
  flush_inflight_ = 0;

  for (EventId id : ambient_events_) queue_.cancel(id);
  for (EventId id : housekeeping_) queue_.cancel(id);
  for (EventId id : grant_events_) queue_.cancel(id);
  if (flush_event_) queue_.cancel(flush_event_);
  if (checkpoint_event_) queue_.cancel(checkpoint_event_);

  std::vector<BlockId> all;
  for (const auto& [b, blk] : blocks_)
    if (!blk.released) all.push_back(b);
  for (BlockId b : all) release_block(b);
  run_over_ = true;
}

// ------------------------------------------------------------ data movement

std::set<std::string>* Engine::channel_for(Route route) {
  switch (route) {
    case Route::gfs_read:
    case Route::gfs_write:
      return &gfs_flows_;
    case Route::ifs_read:
    case Route::ifs_write:
      return &ifs_flows_;
    case Route::node_to_node:
      return nullptr;
  }
  return nullptr;
}

std::uint64_t Engine::start_flow(Route route, std::int64_t src, std::int64_t dst,
                                 const DataId& data, std::int64_t bytes,
                                 double extra_latency, int purpose, const TaskId& waiter,
                                 const std::string& context) {
  std::string key = flow_key(data, src, dst);
  if (flows_.count(key))
    raise(Errc::invariant_violation, "duplicate transfer " + key);
  Flow f;
  f.route = route;
  f.src = src;
  f.dst = dst;
  f.data = data;
  f.bytes = bytes;
  f.remaining = static_cast<double>(bytes);
  f.started = now();
  f.extra_latency = extra_latency;
  f.purpose = purpose;
  f.waiter = waiter;
  f.context = context;
  if (route == Route::node_to_node && src >= 0) node(src).active_links++;

  Payload p;
  p.data = data;
  p.src = src;
  p.dst = dst;
  p.bytes = bytes;
  p.route = route;
  queue_.schedule(now(), EventKind::transfer_start, p);

  double lat = extra_latency;
  switch (route) {
    case Route::gfs_read:
    case Route::gfs_write:
      lat += platform_.gfs_latency_s;
      break;
    case Route::ifs_read:
    case Route::ifs_write:
      lat += platform_.ifs_latency_s;
      break;
    case Route::node_to_node:
      lat += platform_.node_link_latency_s;
      break;
  }
  flows_[key] = std::move(f);
  if ((purpose == kStageIn || purpose == kBroadcast) && dst >= 0)
    inbound_[inbound_key(dst, data)] = key;

  if (lat > 0) {
    Payload t;
    t.tag = "flow-go";
    t.data = key;
    queue_.schedule(now() + lat, EventKind::timer, t);
  } else {
    Flow& ff = flows_[key];
    ff.draining = true;
    ff.last_update = now();
    if (route == Route::node_to_node) {
      ff.rate = platform_.node_link_bandwidth_bytes_per_s;
      Payload ep;
      ep.data = data;
      ep.src = src;
      ep.dst = dst;
      ep.bytes = bytes;
      ep.route = route;
      ff.end_event =
          queue_.schedule(now() + ff.remaining / ff.rate, EventKind::transfer_end, ep);
    } else {
      channel_for(route)->insert(key);
      reschedule_channel(route);
    }
  }
  return 0;
}

void Engine::reschedule_channel(Route route) {
  std::set<std::string>* ch = channel_for(route);
  if (!ch || ch->empty()) return;
  double aggregate = (route == Route::gfs_read || route == Route::gfs_write)
                         ? platform_.gfs_bandwidth_bytes_per_s
                         : platform_.ifs_bandwidth_bytes_per_s;
  double share = aggregate / static_cast<double>(ch->size());
  for (const std::string& key : *ch) {
    Flow& f = flows_[key];
    if (f.rate > 0) {
      f.remaining -= f.rate * (now() - f.last_update);
      if (f.remaining < 0) f.remaining = 0;
    }
    f.last_update = now();
    f.rate = share;
    if (f.end_event) queue_.cancel(f.end_event);
    Payload p;
    p.data = f.data;
    p.src = f.src;
    p.dst = f.dst;
    p.bytes = f.bytes;
    p.route = f.route;
    f.end_event =
        queue_.schedule(now() + f.remaining / f.rate, EventKind::transfer_end, p);
  }
}

void Engine::drop_flow(const std::string& key, bool cancel_event) {
  auto it = flows_.find(key);
  if (it == flows_.end()) return;
  Flow f = it->second;
  flows_.erase(it);
  if (cancel_event && f.end_event) queue_.cancel(f.end_event);
  if (f.route == Route::node_to_node) {
    if (f.src >= 0 && node(f.src).active_links > 0) node(f.src).active_links--;
  } else {
    std::set<std::string>* ch = channel_for(f.route);
    if (ch && ch->erase(key)) reschedule_channel(f.route);
  }
  if (f.dst >= 0) {
    auto in = inbound_.find(inbound_key(f.dst, f.data));
    if (in != inbound_.end() && in->second == key) inbound_.erase(in);
  }
  if (f.purpose == kBroadcast) {
    auto bit = broadcasts_.find(f.context);
    if (bit == broadcasts_.end()) return;
    BroadcastState& bs = bit->second;
    // The subtree below the dead flow can never fire; wake anyone parked
    // under it so they fetch some other way.
    std::vector<TaskId> wake;
    std::vector<std::int64_t> frontier{f.dst};
    while (!frontier.empty()) {
      std::int64_t h = frontier.back();
      frontier.pop_back();
      auto ch = bs.children.find(h);
      if (ch == bs.children.end()) continue;
      for (NodeId kid : ch->second) {
        frontier.push_back(kid);
        auto pk = bs.parked.find(kid);
        if (pk != bs.parked.end()) {
          wake.push_back(pk->second);
          bs.parked.erase(pk);
        }
      }
      bs.children.erase(ch);
    }
    bool flows_left = false;
    for (const auto& [k2, f2] : flows_)
      if (f2.purpose == kBroadcast && f2.context == f.context) flows_left = true;
    if (!flows_left && bs.children.empty()) {
      for (const auto& [n2, t2] : bs.parked) wake.push_back(t2);
      broadcasts_.erase(bit);
    }
    for (const TaskId& t2 : wake) {
      auto st = staging_.find(t2);
      if (st == staging_.end()) continue;
      const Node& nd = node(st->second.nodes[0]);
      if (!nd.up || !nd.allocated) continue;  // its own node is going away
      begin_stage_in(t2);
    }
  }
}

void Engine::cancel_flows_waiting_on(const TaskId& task) {
  std::vector<std::string> mine;
  for (auto& [key, f] : flows_) {
    if (f.waiter != task) continue;
    if (f.purpose == kBroadcast) {
      f.waiter.clear();  // the tree lives on for other recipients
      continue;
    }
    mine.push_back(key);
  }
  for (const std::string& key : mine) drop_flow(key, true);
}

void Engine::kill_flows_at_node(NodeId n) {
  struct Refetch {
    TaskId task;
    DataId data;
  };
  std::vector<std::string> doomed;
  std::vector<Refetch> refetch;
  std::vector<std::string> dead_reductions;
  for (const auto& [key, f] : flows_) {
    if (f.src != n && f.dst != n) continue;
    doomed.push_back(key);
    if (f.purpose == kReduction) dead_reductions.push_back(f.context);
    if (f.src == n && !f.waiter.empty() &&
        (f.purpose == kStageIn || f.purpose == kBroadcast) && f.dst != n)
      refetch.push_back({f.waiter, f.data});
    if (f.purpose == kMigration && f.dst == n) {
      // the replacement node died mid-move; requeue the frozen task
      refetch.push_back({f.waiter, ""});
    }
  }
  for (const std::string& key : doomed) drop_flow(key, true);
  std::sort(dead_reductions.begin(), dead_reductions.end());
  dead_reductions.erase(std::unique(dead_reductions.begin(), dead_reductions.end()),
                        dead_reductions.end());
  for (const std::string& k : dead_reductions) abort_reduction(k);
  for (const Refetch& r : refetch) {
    if (r.data.empty()) {
      if (running_.count(r.task)) kill_task_on_nodes(r.task, true);
      continue;
    }
    auto st = staging_.find(r.task);
    if (st == staging_.end()) continue;
    if (st->second.nodes[0] == n) continue;  // its own node is the one dying
    stage_input(r.task, r.data, st->second.nodes[0]);
    maybe_start(r.task);
  }
}

void Engine::on_transfer_end(const SimEvent& e) {
  std::string key = flow_key(e.payload.data, e.payload.src, e.payload.dst);
  auto it = flows_.find(key);
  if (it == flows_.end()) return;
  Flow f = it->second;
  f.end_event = 0;
  flows_.erase(it);
  if (f.route == Route::node_to_node) {
    if (f.src >= 0 && node(f.src).active_links > 0) node(f.src).active_links--;
  } else {
    std::set<std::string>* ch = channel_for(f.route);
    if (ch && ch->erase(key)) reschedule_channel(f.route);
  }
  if (f.dst >= 0) {
    auto in = inbound_.find(inbound_key(f.dst, f.data));
    if (in != inbound_.end() && in->second == key) inbound_.erase(in);
  }
  deliver(std::move(f));
}

void Engine::deliver(Flow f) {
  switch (f.purpose) {
    case kStageIn: {
      cache_insert(f.dst, f.data, f.bytes);
      directory_.add_replica(f.data, f.dst);
      if (!f.waiter.empty()) {
        auto st = staging_.find(f.waiter);
        if (st != staging_.end() && st->second.nodes[0] == f.dst) {
          if (!st->second.pinned.count(f.data)) {
            node(f.dst).cache->pin(f.data);
            st->second.pinned.insert(f.data);
          }
          st->second.missing.erase(f.data);
          maybe_start(f.waiter);
        }
      }
      break;
    }
    case kBroadcast: {
      cache_insert(f.dst, f.data, f.bytes);
      directory_.add_replica(f.data, f.dst);
      if (!f.waiter.empty()) {
        auto st = staging_.find(f.waiter);
        if (st != staging_.end() && st->second.nodes[0] == f.dst) {
          if (!st->second.pinned.count(f.data)) {
            node(f.dst).cache->pin(f.data);
            st->second.pinned.insert(f.data);
          }
          st->second.missing.erase(f.data);
          maybe_start(f.waiter);
        }
      }
      broadcast_from(f.context, f.dst);
      break;
    }
    case kOutputWrite: {
      directory_.set_gfs_resident(f.data, true);
      poke_waiters(f.data);
      auto it = running_.find(f.waiter);
      if (it == running_.end()) break;
      Running& r = it->second;
      r.writes_open.erase(f.data);
      if (r.writes_open.empty() && r.compute_finished &&
          graph_.state(f.waiter) != TaskState::pruned) {
        Payload p;
        p.task = f.waiter;
        p.node = r.nodes[0];
        p.attempt = r.attempt;
        r.end_event = queue_.schedule(now(), EventKind::task_end, p);
      }
      break;
    }
    case kFlushWrite: {
      directory_.set_gfs_resident(f.data, true);
      if (f.src >= 0 && node(f.src).cache->contains(f.data))
        node(f.src).cache->unpin(f.data);
      poke_waiters(f.data);
      --flush_inflight_;
      finalize_if_done();
      break;
    }
    case kMigration: {
      auto it = running_.find(f.waiter);
      if (it == running_.end()) break;
      Running& r = it->second;
      NodeId old = f.src;
      NodeId fresh = f.dst;
      Node& od = node(old);
      if (od.occupant && *od.occupant == f.waiter) od.occupant.reset();
      for (const DataId& d : r.pinned)
        if (od.cache->contains(d)) od.cache->unpin(d);
      r.pinned.clear();
      r.nodes = {fresh};
      Block& oldblk = blocks_[od.block];
      oldblk.migrations_pending--;
      if (oldblk.migrations_pending <= 0 && !oldblk.released) {
        bool busy = false;
        for (std::int64_t nn = oldblk.first; nn < oldblk.first + oldblk.count; ++nn)
          if (node(nn).occupant) busy = true;
        if (!busy) release_block(od.block);
      }
      Payload p;
      p.task = f.waiter;
      p.node = fresh;
      p.width = 1;
      p.attempt = r.attempt;
      p.tag = "resume";
      queue_.schedule(now(), EventKind::task_start, p);
      break;
    }
    case kReduction: {
      auto it = reductions_.find(f.context);
      if (it == reductions_.end()) break;
      ReductionState& rs = it->second;
      NodeId dst = f.dst;
      rs.inbound[dst]--;
      rs.held_bytes[dst] = std::max(rs.held_bytes[dst], f.bytes);
      if (rs.inbound[dst] > 0) break;
      rs.inbound.erase(dst);
      if (dst == rs.sink) {
        auto st = staging_.find(rs.gather);
        if (st != staging_.end()) {
          for (const DataId& d : rs.covers) st->second.missing.erase(d);
          maybe_start(rs.gather);
        }
        reductions_.erase(it);
      } else {
        rs.holding.insert(dst);
        reduction_fire_ready(f.context);
      }
      break;
    }
    default:
      break;
  }
}

// ---------------------------------------------------------------- broadcast

void Engine::start_broadcast(const DataId& data, const std::vector<NodeId>& dests) {
  std::vector<NodeId> lacking;
  for (NodeId n : dests) {
    if (node(n).cache->contains(data)) continue;
    if (inbound_.count(inbound_key(n, data))) continue;
    lacking.push_back(n);
  }
  if (lacking.empty()) return;
  std::int64_t source = kGfs;
  try {
    LocationDirectory::Lookup look = directory_.locate(data);
    for (NodeId h : look.replicas)
      if (node(h).up && node(h).allocated) {
        source = h;
        break;
      }
  } catch (const Error&) {
    return;  // nowhere to copy from
  }
  BroadcastPlan plan = plan_broadcast(source, lacking, data_policy_.broadcast_fanout);
  if (plan.steps.empty()) return;
  std::string key = "b" + std::to_string(next_broadcast_++);
  BroadcastState bs;
  bs.data = data;
  bs.bytes = graph_.data(data).size_bytes;
  for (const BroadcastStep& s : plan.steps) bs.children[s.src].push_back(s.dst);
  broadcasts_[key] = bs;
  broadcast_from(key, source);
}

void Engine::broadcast_from(const std::string& key, std::int64_t holder) {
  auto it = broadcasts_.find(key);
  if (it == broadcasts_.end()) return;
  BroadcastState& bs = it->second;
  auto ch = bs.children.find(holder);
  if (ch == bs.children.end()) {
    bool any = false;
    for (const auto& [src, kids] : bs.children)
      if (!kids.empty()) any = true;
    if (!any) broadcasts_.erase(it);
    return;
  }
  std::vector<NodeId> kids = ch->second;
  bs.children.erase(ch);
  for (NodeId kid : kids) {
    const Node& nd = node(kid);
    TaskId waiter;
    auto pk = bs.parked.find(kid);
    if (pk != bs.parked.end()) {
      waiter = pk->second;
      bs.parked.erase(pk);
    }
    if (!nd.allocated || !nd.up || nd.cache->contains(bs.data) ||
        inbound_.count(inbound_key(kid, bs.data))) {
      if (!waiter.empty() && staging_.count(waiter)) begin_stage_in(waiter);
      continue;
    }
    Route route = holder == kGfs ? Route::gfs_read : Route::node_to_node;
    start_flow(route, holder, kid, bs.data, bs.bytes, 0, kBroadcast, waiter, key);
  }
}

// ---------------------------------------------------------------- reduction

void Engine::start_reduction(const TaskId& gather) {
  auto sit = staging_.find(gather);
  if (sit == staging_.end()) return;
  Staging& st = sit->second;
  NodeId sink = st.nodes[0];

  std::map<NodeId, std::vector<DataId>> holdings;
  std::vector<DataId> direct;
  std::vector<DataId> lost;
  for (const DataId& d : st.missing) {
    std::vector<NodeId> ups;
    try {
      LocationDirectory::Lookup look = directory_.locate(d);
      for (NodeId h : look.replicas)
        if (node(h).up && node(h).allocated && h != sink) ups.push_back(h);
      if (ups.empty()) {
        if (look.on_gfs)
          direct.push_back(d);
        else
          lost.push_back(d);
        continue;
      }
    } catch (const Error&) {
      lost.push_back(d);
      continue;
    }
    holdings[ups.front()].push_back(d);
  }
  if (!lost.empty()) {
    for (const DataId& d : lost) {
      handle_lost_object(d);
      waiting_on_data_[d].push_back(gather);
    }
    requeue_from_staging(gather);
    return;
  }
  std::vector<NodeId> sources;
  for (const auto& [n, ds] : holdings) sources.push_back(n);
  if (sources.size() < 2) {
    std::vector<DataId> want(st.missing.begin(), st.missing.end());
    for (const DataId& d : want) {
      stage_input(gather, d, sink);
      if (!staging_.count(gather)) return;
    }
    maybe_start(gather);
    return;
  }
  ReductionPlan plan =
      plan_reduction(sources, sink, data_policy_.reduction_fanout, true);
  std::string key = "r" + std::to_string(next_reduction_++);
  ReductionState rs;
  rs.gather = gather;
  rs.sink = sink;
  rs.steps = plan.steps;
  for (const auto& [n, ds] : holdings) {
    rs.holding.insert(n);
    std::int64_t total = 0;
    for (const DataId& d : ds) total += graph_.data(d).size_bytes;
    rs.held_bytes[n] = total;
    rs.held_repr[n] = ds.front();
    for (const DataId& d : ds) rs.covers.insert(d);
  }
  reductions_[key] = rs;
  for (const DataId& d : direct) {
    stage_input(gather, d, sink);
    if (!staging_.count(gather)) {
      abort_reduction(key);
      return;
    }
  }
  reduction_fire_ready(key);
}

void Engine::reduction_fire_ready(const std::string& key) {
  auto it = reductions_.find(key);
  if (it == reductions_.end()) return;
  ReductionState& rs = it->second;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < rs.steps.size(); ++i) {
      const ReductionStep& step = rs.steps[i];
      bool ok = true;
      for (NodeId s : step.sources)
        if (!rs.holding.count(s)) ok = false;
      if (!ok) continue;
      for (NodeId s : step.sources) {
        rs.holding.erase(s);
        rs.inbound[step.dst]++;
        start_flow(Route::node_to_node, s, step.dst, rs.held_repr[s], rs.held_bytes[s],
                   data_policy_.lookup_latency_s, kReduction, "", key);
      }
      rs.steps.erase(rs.steps.begin() + static_cast<std::ptrdiff_t>(i));
      progress = true;
      break;
    }
  }
}

void Engine::abort_reduction(const std::string& key) {
  auto it = reductions_.find(key);
  if (it == reductions_.end()) return;
  ReductionState rs = it->second;
  reductions_.erase(it);
  std::vector<std::string> mine;
  for (const auto& [k, f] : flows_)
    if (f.purpose == kReduction && f.context == key) mine.push_back(k);
  for (const std::string& k : mine) drop_flow(k, true);
  auto st = staging_.find(rs.gather);
  if (st == staging_.end()) return;
  std::vector<DataId> want(st->second.missing.begin(), st->second.missing.end());
  for (const DataId& d : want) {
    stage_input(rs.gather, d, st->second.nodes[0]);
    if (!staging_.count(rs.gather)) return;
  }
  maybe_start(rs.gather);
}

// -------------------------------------------------------------------- flush

void Engine::on_flush(const SimEvent& e) {
  if (run_over_) return;
  std::vector<std::pair<DataId, NodeId>> batch(pending_flush_.begin(),
                                               pending_flush_.end());
  pending_flush_.clear();
  for (const auto& [d, n] : batch) {
    start_flow(Route::gfs_write, n, kGfs, d, graph_.data(d).size_bytes, 0, kFlushWrite,
               "", "");
    ++flush_inflight_;
  }
  if (e.payload.tag != "final") {
    flush_event_ =
        queue_.schedule(now() + data_policy_.flush_period_s, EventKind::flush, {});
  } else {
    final_flush_scheduled_ = false;
  }
  if (batch.empty()) finalize_if_done();
}

// ----------------------------------------------------------------- wrap-up

void Engine::finalize_if_done() {
  if (run_over_ || finalizing_) return;
  if (!all_terminal()) return;
  // Tasks pruned in this instant still hold their nodes until the queued
  // prune signal reclaims them; it calls back here.
  if (!running_.empty() || !staging_.empty()) return;
  if (!pending_flush_.empty()) {
    if (!final_flush_scheduled_) {
      final_flush_scheduled_ = true;
      Payload p;
      p.tag = "final";
      queue_.schedule(now(), EventKind::flush, p);
    }
    return;
  }
  if (flush_inflight_ > 0) return;
  finalizing_ = true;
  std::vector<BlockId> all;
  for (const auto& [b, blk] : blocks_)
    if (!blk.released) all.push_back(b);
  for (BlockId b : all) release_block(b);
  for (EventId id : ambient_events_) queue_.cancel(id);
  for (EventId id : housekeeping_) queue_.cancel(id);
  for (EventId id : grant_events_) queue_.cancel(id);
  if (flush_event_) queue_.cancel(flush_event_);
  if (checkpoint_event_) queue_.cancel(checkpoint_event_);
  std::vector<std::string> keys;
  for (const auto& [k, f] : flows_) keys.push_back(k);
  for (const std::string& k : keys) drop_flow(k, true);
  run_over_ = true;
}

void Engine::quiesce_sweep() {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const TaskId& id : graph_.task_ids()) {
      TaskState s = graph_.state(id);
      if (s != TaskState::pending && s != TaskState::ready) continue;
      bool dead = false;
      for (const DataId& d : graph_.task(id).inputs) {
        auto prod = graph_.producer_of(d);
        if (!prod) continue;
        TaskState ps = graph_.state(*prod);
        if (ps != TaskState::pruned && ps != TaskState::failed) continue;
        bool available = directory_.gfs_resident(d);
        if (!available) {
          auto reps = directory_.replica_map().find(d);
          if (reps != directory_.replica_map().end() && !reps->second.empty())
            available = true;
        }
        if (!available) {
          dead = true;
          break;
        }
      }
      if (dead) {
        std::vector<TaskId> pruned = graph_.prune_tasks(id);
        pruned_count_ += static_cast<std::int64_t>(pruned.size());
        changed = true;
      }
    }
  }
}

// --------------------------------------------------------------- idle nodes

void Engine::on_worker_idle(const SimEvent& e) {
  if (run_over_) return;
  NodeId n = e.payload.node;
  Node& nd = node(n);
  if (!nd.allocated || !nd.up || nd.draining || nd.occupant) return;
  nd.idle_since = now();
  if (dispatch_.mode == DispatchPolicy::Mode::Pull) {
    Sched& sc = scheds_[static_cast<std::size_t>(scheduler_of(n))];
    if (std::find(sc.idle.begin(), sc.idle.end(), n) == sc.idle.end())
      sc.idle.push_back(n);
    try_dispatch();
  } else {
    pop_and_run(n);
    if (!nd.occupant) {
      push_out_work();
      steal_sweep();
    }
  }
  if (!nd.occupant) schedule_idle_release(n);
}

// --------------------------------------------------------------- checkpoint

Checkpoint Engine::make_checkpoint() const {
  Checkpoint cp;
  cp.time = queue_.clock();
  cp.seed = seed_;
  for (const DataId& d : graph_.data_ids()) cp.data.push_back(graph_.data(d));
  for (const TaskId& id : graph_.task_ids()) {
    Checkpoint::TaskDump dump;
    dump.spec = graph_.task(id);
    dump.state = graph_.state(id);
    auto rit = retries_.find(id);
    dump.retries = rit == retries_.end() ? 0 : rit->second;
    cp.tasks.push_back(dump);
  }
  for (const auto& [tid, tpl] : graph_.templates()) cp.templates.push_back(tpl);
  for (const auto& [gather, hook] : graph_.hooks()) {
    Checkpoint::HookDump h;
    h.gather = gather;
    h.template_id = hook.template_id;
    h.iteration = hook.iteration;
    cp.hooks.push_back(h);
  }
  cp.gfs_resident = directory_.gfs_set();
  for (const auto& [d, n] : pending_flush_) cp.lost_unflushed.push_back({d, n});
  cp.provisioner_cursor = provisioner_.cursor();
  cp.static_fired = provisioner_.static_fired();
  return cp;
}

}  // namespace mtc
