#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mtc/task_graph.hpp"

namespace mtc {

// One injected fault. Hardware and OS failures take out a node (permanently
// or until reboot); application failures kill a task attempt but leave the
// node healthy; a strategic failure is a planned whole-run preemption.
struct FailureSpec {
  enum class Kind { Hardware, Os, Application, Strategic };
  Kind kind = Kind::Hardware;

  std::optional<double> at_time_s;
  std::optional<double> rate_per_node_hour;     // Poisson arrivals (hardware/os)
  std::optional<double> at_completed_fraction;  // strategic trigger

  std::optional<NodeId> node;  // hardware/os target; unset = drawn uniformly
  std::optional<TaskId> task;  // application target
  int fail_attempts = 1;       // application: first N attempts of `task` fail
  double fail_after_start_s = 0;  // application: offset into the attempt
  std::optional<double> runtime_cap_s;  // application: kill any attempt at this age

  bool permanent = false;     // hardware: node never comes back
  double reboot_delay_s = 60;  // transient outage duration

  void validate() const;
};

const char* failure_kind_name(FailureSpec::Kind k);

struct ResilienceConfig {
  std::vector<FailureSpec> failures;
  int max_retries = 3;
  double checkpoint_period_s = 0;  // 0 = no periodic checkpoints
  std::string checkpoint_path;     // where checkpoints are written (json)

  void validate() const;
};

// Everything needed to resume a run on a fresh allocation: the full dynamic
// graph (including unfolded iterations), task states, retry counts, which
// objects survive on the GFS, and provisioning/flush progress. Node-local
// cache contents are deliberately not captured: caches restart cold.
struct Checkpoint {
  int version = 1;
  double time = 0;
  std::uint64_t seed = 0;

  std::vector<DataRef> data;
  struct TaskDump {
    TaskSpec spec;
    TaskState state = TaskState::pending;
    int retries = 0;
  };
  std::vector<TaskDump> tasks;
  std::vector<IterationTemplate> templates;
  struct HookDump {
    TaskId gather;
    std::string template_id;
    int iteration = 0;
  };
  std::vector<HookDump> hooks;

  std::set<DataId> gfs_resident;
  std::vector<std::pair<DataId, NodeId>> lost_unflushed;  // outputs that died with caches
  int provisioner_cursor = 0;
  bool static_fired = false;

  std::string to_json() const;  // stable field order, byte-stable across runs
  static Checkpoint from_json(const std::string& text);  // corrupt_checkpoint on damage
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

// Rebuilds the task graph a checkpoint describes. Tasks that were dispatched
// or running at snapshot time come back as ready; done tasks whose outputs
// are needed again but survive nowhere are demoted to ready along the way.
TaskGraph graph_from_checkpoint(const Checkpoint& cp);

}  // namespace mtc
