#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mtc/config.hpp"
#include "mtc/datamgr.hpp"
#include "mtc/dispatch.hpp"
#include "mtc/error.hpp"
#include "mtc/metrics.hpp"
#include "mtc/platform.hpp"
#include "mtc/provisioner.hpp"
#include "mtc/resilience.hpp"
#include "mtc/sim_kernel.hpp"
#include "mtc/task_graph.hpp"
#include "mtc/workloads.hpp"

namespace mtc {

struct RunResult {
  RunReport report;
  bool completed = true;  // false when the run stopped itself on purpose
  double end_time = 0;
};

// Orchestrates one simulated campaign: provisioning, dispatch, data movement,
// failures and recovery over a single task graph. Every state change happens
// inside an event handler, so the trace alone reproduces the run.
class Engine {
 public:
  Engine(const ExperimentConfig& cfg, BuiltWorkload workload, std::uint64_t seed);
  // Resume from a saved checkpoint on a fixed allocation of `nodes` nodes.
  Engine(const ExperimentConfig& cfg, const Checkpoint& cp, std::int64_t nodes);

  RunResult run();

  const std::vector<SimEvent>& trace() const { return queue_.trace(); }
  std::vector<SimEvent> take_trace() { return queue_.take_trace(); }
  const TaskGraph& graph() const { return graph_; }
  Checkpoint make_checkpoint() const;

 private:
  enum FlowPurpose : int {
    kStageIn,
    kBroadcast,
    kOutputWrite,
    kFlushWrite,
    kMigration,
    kReduction,
  };

  struct Node {
    BlockId block = -1;
    bool allocated = false;
    bool up = false;
    bool draining = false;
    std::optional<TaskId> occupant;
    double idle_since = 0;
    std::unique_ptr<NodeCache> cache;
    int active_links = 0;
  };

  struct Block {
    std::int64_t first = 0;
    std::int64_t count = 0;
    double granted_at = 0;
    bool released = false;
    int migrations_pending = 0;
  };

  struct Sched {
    std::deque<NodeId> idle;
    double next_free = 0;
    bool wake_scheduled = false;
  };

  struct Flow {
    Route route = Route::gfs_read;
    std::int64_t src = kNone;
    std::int64_t dst = kNone;
    DataId data;
    std::int64_t bytes = 0;
    double remaining = 0;
    double started = 0;
    double extra_latency = 0;
    bool draining = false;
    double rate = 0;
    double last_update = 0;
    EventId end_event = 0;
    int purpose = kStageIn;
    TaskId waiter;        // task to wake on delivery, if any
    std::string context;  // broadcast/reduction key, or source node for moves
  };

  struct Staging {
    std::vector<NodeId> nodes;  // primary first
    std::set<DataId> missing;
    std::set<DataId> pinned;
    int attempt = 1;
    bool start_scheduled = false;
  };

  struct Running {
    std::vector<NodeId> nodes;
    std::set<DataId> pinned;
    double started = 0;
    double runtime = 0;  // remaining when frozen for migration
    int attempt = 1;
    EventId compute_event = 0;
    EventId fail_event = 0;
    EventId end_event = 0;
    std::set<DataId> writes_open;
    bool compute_finished = false;
    bool frozen = false;
  };

  struct BroadcastState {
    DataId data;
    std::int64_t bytes = 0;
    std::map<std::int64_t, std::vector<NodeId>> children;
    // Stagers on nodes the tree has not reached yet; they ride the broadcast
    // instead of opening their own GFS pull.
    std::map<NodeId, TaskId> parked;
  };

  struct ReductionState {
    TaskId gather;
    NodeId sink = 0;
    std::vector<ReductionStep> steps;
    std::set<NodeId> holding;
    std::map<NodeId, int> inbound;
    std::map<NodeId, std::int64_t> held_bytes;
    std::map<NodeId, DataId> held_repr;
    std::set<DataId> covers;
  };

  void init_common(const ExperimentConfig& cfg);
  RngStream& rng(const std::string& name);
  double now() const { return queue_.clock(); }
  Node& node(std::int64_t n) { return nodes_[static_cast<std::size_t>(n)]; }
  const Node& node(std::int64_t n) const { return nodes_[static_cast<std::size_t>(n)]; }
  int scheduler_of(NodeId n) const;
  std::optional<double> runtime_view(const TaskSpec& t) const;
  std::int64_t idle_allocated_nodes() const;
  bool group_start_pending(const TaskId& id) const;
  void remove_from_idle(NodeId n);
  std::int64_t terminal_count() const {
    return done_count_ + pruned_count_ + failed_permanent_;
  }
  bool all_terminal() const { return terminal_count() >= generated_count_; }

  void handle(const SimEvent& e);
  void on_timer(const SimEvent& e);
  void on_block_granted(const SimEvent& e);
  void on_block_released(const SimEvent& e);
  void on_worker_idle(const SimEvent& e);
  void on_dispatch(const SimEvent& e);
  void on_task_start(const SimEvent& e);
  void on_task_end(const SimEvent& e);
  void on_task_fail(const SimEvent& e);
  void on_transfer_end(const SimEvent& e);
  void on_prune_signal(const SimEvent& e);
  void on_failure_injected(const SimEvent& e);
  void on_chop(const SimEvent& e);
  void on_flush(const SimEvent& e);

  // provisioning
  void evaluate_provisioner();
  void request_nodes(std::int64_t count, bool migrate_after);
  void release_block(BlockId b);
  std::vector<BlockIdleInfo> block_idle_infos() const;
  bool no_work_waiting() const;
  void schedule_idle_release(NodeId n);
  void run_idle_release();

  // dispatch
  void enqueue_ready(const TaskId& id);
  void drop_queue_head_if_dead();
  bool scheduler_gate(int s);
  void charge_scheduler(int s);
  void try_dispatch();
  void push_out_work();
  const std::vector<NodeId>& neighbor_list(NodeId n);
  void steal_sweep();
  void pop_and_run(NodeId n);
  void begin_assignment(const TaskId& id, const std::vector<NodeId>& nodes,
                        int scheduler, const std::string& tag);

  // stage-in and object recovery
  void begin_stage_in(const TaskId& id);
  void stage_input(const TaskId& task, const DataId& d, NodeId dest);
  void requeue_from_staging(const TaskId& task);
  void handle_lost_object(const DataId& d);
  void demote_done_producer(const DataId& d);
  void poke_waiters(const DataId& d);
  void maybe_start(const TaskId& id);

  // task lifecycle
  void cache_insert(NodeId n, const DataId& d, std::int64_t bytes);
  void finish_compute(const TaskId& id);
  void emit_task_fail(const TaskId& id, NodeId where, FailureSpec::Kind kind);
  void apply_prune_results(const std::vector<TaskId>& pruned);
  void kill_task_on_nodes(const TaskId& id, bool requeue);
  void task_terminalized();

  // failures
  void schedule_initial_failures();
  void schedule_rate_arrival(std::size_t idx);
  void node_failure(NodeId n, FailureSpec::Kind kind, bool permanent,
                    double reboot_delay);
  void do_strategic();

  // data movement
  std::set<std::string>* channel_for(Route route);
  std::uint64_t start_flow(Route route, std::int64_t src, std::int64_t dst,
                           const DataId& data, std::int64_t bytes, double extra_latency,
                           int purpose, const TaskId& waiter, const std::string& context);
  void reschedule_channel(Route route);
  void drop_flow(const std::string& key, bool cancel_event);
  void cancel_flows_waiting_on(const TaskId& task);
  void kill_flows_at_node(NodeId n);
  void deliver(Flow f);
  void start_broadcast(const DataId& data, const std::vector<NodeId>& dests);
  void broadcast_from(const std::string& key, std::int64_t holder);
  void start_reduction(const TaskId& gather);
  void reduction_fire_ready(const std::string& key);
  void abort_reduction(const std::string& key);

  // wrap-up
  void finalize_if_done();
  void quiesce_sweep();

  PlatformSpec platform_;
  DispatchPolicy dispatch_;
  DataPolicy data_policy_;
  ResilienceConfig resilience_;
  std::uint64_t seed_ = 0;
  TaskGraph graph_;
  WorkloadHooks hooks_;
  EventQueue queue_;
  Provisioner provisioner_;
  LocationDirectory directory_;

  std::vector<Node> nodes_;
  std::map<BlockId, Block> blocks_;
  std::set<BlockId> free_blocks_;
  std::int64_t allocated_count_ = 0;
  std::int64_t pending_grant_nodes_ = 0;
  int outstanding_requests_ = 0;
  std::set<EventId> grant_events_;
  bool migrate_on_grant_ = false;

  std::vector<Sched> scheds_;
  std::vector<QueuedTask> ready_queue_;  // kept sorted for the active ordering
  std::set<TaskId> in_queue_;
  std::uint64_t enqueue_seq_ = 0;
  std::map<NodeId, std::deque<TaskId>> backlogs_;
  std::map<NodeId, std::vector<NodeId>> neighbors_;
  std::int64_t rr_cursor_ = 0;

  std::map<TaskId, Staging> staging_;
  std::map<TaskId, Running> running_;
  std::map<TaskId, int> retries_;
  std::map<TaskId, TaskId> group_next_;
  std::map<TaskId, TaskId> group_prev_;

  std::map<std::string, Flow> flows_;  // keyed by data|src|dst
  std::set<std::string> gfs_flows_;
  std::set<std::string> ifs_flows_;
  std::map<std::string, std::string> inbound_;  // node|data -> flow key
  std::map<std::string, BroadcastState> broadcasts_;
  std::int64_t next_broadcast_ = 0;
  std::map<std::string, ReductionState> reductions_;
  std::int64_t next_reduction_ = 0;
  std::vector<DataId> common_inputs_;
  std::map<DataId, std::vector<TaskId>> waiting_on_data_;

  std::set<std::pair<DataId, NodeId>> pending_flush_;
  int flush_inflight_ = 0;
  EventId flush_event_ = 0;
  bool final_flush_scheduled_ = false;
  EventId checkpoint_event_ = 0;
  std::vector<EventId> ambient_events_;
  std::set<EventId> housekeeping_;

  std::int64_t generated_count_ = 0;
  std::int64_t done_count_ = 0;
  std::int64_t pruned_count_ = 0;
  std::int64_t failed_permanent_ = 0;
  bool chop_fired_ = false;
  bool strategic_fired_ = false;
  bool finalizing_ = false;
  bool run_over_ = false;
  bool completed_ = true;

  std::map<std::string, std::unique_ptr<RngStream>> rngs_;
};

}  // namespace mtc
