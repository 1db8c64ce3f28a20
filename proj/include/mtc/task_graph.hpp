#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtc/error.hpp"

namespace mtc {

using TaskId = std::string;
using DataId = std::string;
using NodeId = std::int64_t;
using BlockId = std::int64_t;

enum class DataKind { common_input, unique_input, intermediate, output };
enum class TaskState { pending, ready, dispatched, running, done, failed, pruned };

const char* data_kind_name(DataKind k);
DataKind parse_data_kind(const std::string& s);
const char* task_state_name(TaskState s);

struct DataRef {
  DataId id;
  std::int64_t size_bytes = 0;
  DataKind kind = DataKind::intermediate;
};

struct TaskSpec {
  TaskId id;
  std::vector<DataId> inputs;
  std::vector<DataId> outputs;
  double runtime_s = 0;               // actual; hidden from policies unless configured
  std::optional<double> estimate_s;   // what ordering policies may see
  double priority = 0;                // larger dispatches earlier
  std::string group;                  // pipeline group id, empty for none
  int width = 1;                      // nodes occupied simultaneously
  bool combinable = false;            // inputs may be combined pairwise en route
};

// A repeatable subgraph for iterative workloads. Instantiation k consumes the
// carry produced by instantiation k-1 (the first consumes initial_carry).
// Proto inputs refer to local data ids; the name "^carry" binds the incoming
// carry. limit caps total instantiations, counting the first.
struct IterationTemplate {
  std::string id;
  struct DataProto {
    std::string local_id;
    std::int64_t size_bytes = 0;
  };
  struct TaskProto {
    std::string local_id;
    double runtime_s = 0;
    std::optional<double> estimate_s;
    double priority = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
  };
  std::vector<DataProto> data;
  std::vector<TaskProto> tasks;
  std::string gather_local_id;  // completion of this task drives unfolding
  std::string carry_out;        // local data id handed to the next instantiation
  DataId initial_carry;
  int limit = 1;

  int instantiated = 0;
  bool closed = false;
};

class TaskGraph {
 public:
  const DataRef& add_data(DataRef d);
  const TaskSpec& add_task(TaskSpec t);

  // Adds the template and instantiates iteration 1; returns its task ids.
  std::vector<TaskId> add_template(IterationTemplate tpl);

  // Called after a gather completes. Instantiates the next iteration if the
  // template still has budget (iteration_result < limit), else closes it.
  std::vector<TaskId> unfold_iteration(const std::string& template_id,
                                       double iteration_result);

  // Moves root (if not done) and every not-yet-done descendant reachable only
  // through root to pruned. Returns the pruned ids, ascending.
  std::vector<TaskId> prune_tasks(const TaskId& root);

  // Dispatchable tasks: state ready, ordered by priority descending then id.
  std::vector<TaskId> ready_tasks() const;

  bool inputs_available(const TaskId& id) const;
  // Promotes pending tasks whose inputs all exist to ready; full scan.
  std::vector<TaskId> promote_ready();
  // Cheaper promotion after `producer` completed: checks its consumers only.
  std::vector<TaskId> promote_ready_after(const TaskId& producer);

  void set_state(const TaskId& id, TaskState next);
  TaskState state(const TaskId& id) const;

  bool has_task(const TaskId& id) const { return tasks_.count(id) != 0; }
  bool has_data(const DataId& id) const { return data_.count(id) != 0; }
  const TaskSpec& task(const TaskId& id) const;
  const DataRef& data(const DataId& id) const;
  std::optional<TaskId> producer_of(const DataId& id) const;
  const std::vector<TaskId>& consumers_of(const DataId& id) const;

  std::size_t task_count() const { return tasks_.size(); }
  std::size_t data_count() const { return data_.size(); }
  std::vector<TaskId> task_ids() const;
  std::vector<DataId> data_ids() const;
  std::size_t count_in_state(TaskState s) const;

  // Members of a pipeline group in chain order; throws group_not_chain if the
  // group is not a linear dependency chain.
  std::vector<TaskId> group_chain(const std::string& group) const;
  std::vector<std::string> group_ids() const;

  struct IterationHook {
    std::string template_id;
    int iteration = 0;
  };
  std::optional<IterationHook> iteration_hook(const TaskId& id) const;
  const std::map<std::string, IterationTemplate>& templates() const { return templates_; }
  void close_template(const std::string& template_id);

  // Deterministic topological order (smallest id first among ready sets);
  // throws cycle_detected if the graph has a cycle.
  std::vector<TaskId> topo_order() const;

  // Structural checks used by `validate`: every consumed intermediate/output
  // has a producer, group chains are chains, widths positive.
  void validate_structure() const;

  // Recovery support: rebuilds bookkeeping exactly (used by checkpoint load).
  void restore_state(const TaskId& id, TaskState s);  // no transition check
  void restore_template(IterationTemplate tpl);
  void restore_hook(const TaskId& gather, const std::string& template_id, int iteration);
  const std::map<TaskId, IterationHook>& hooks() const { return hooks_; }

 private:
  struct TaskEntry {
    TaskSpec spec;
    TaskState state = TaskState::pending;
  };

  std::map<TaskId, TaskEntry> tasks_;
  std::map<DataId, DataRef> data_;
  std::map<DataId, TaskId> producer_;
  std::map<DataId, std::vector<TaskId>> consumers_;
  std::map<std::string, IterationTemplate> templates_;
  std::map<TaskId, IterationHook> hooks_;

  TaskEntry& entry(const TaskId& id);
  const TaskEntry& entry(const TaskId& id) const;
  std::vector<TaskId> instantiate(IterationTemplate& tpl);
  bool reaches(const TaskId& from, const TaskId& target) const;
};

}  // namespace mtc
