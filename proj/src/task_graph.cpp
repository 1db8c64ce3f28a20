#include "mtc/task_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mtc {

const char* data_kind_name(DataKind k) {
  switch (k) {
    case DataKind::common_input: return "common-input";
    case DataKind::unique_input: return "unique-input";
    case DataKind::intermediate: return "intermediate";
    case DataKind::output: return "output";
  }
  return "unknown";
}

DataKind parse_data_kind(const std::string& s) {
  if (s == "common-input") return DataKind::common_input;
  if (s == "unique-input") return DataKind::unique_input;
  if (s == "intermediate") return DataKind::intermediate;
  if (s == "output") return DataKind::output;
  raise(Errc::invalid_parameters, "unknown data kind '" + s + "'");
}

const char* task_state_name(TaskState s) {
  switch (s) {
    case TaskState::pending: return "pending";
    case TaskState::ready: return "ready";
    case TaskState::dispatched: return "dispatched";
    case TaskState::running: return "running";
    case TaskState::done: return "done";
    case TaskState::failed: return "failed";
    case TaskState::pruned: return "pruned";
  }
  return "unknown";
}

TaskGraph::TaskEntry& TaskGraph::entry(const TaskId& id) {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) raise(Errc::unknown_task, "task '" + id + "'");
  return it->second;
}

const TaskGraph::TaskEntry& TaskGraph::entry(const TaskId& id) const {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) raise(Errc::unknown_task, "task '" + id + "'");
  return it->second;
}

const DataRef& TaskGraph::add_data(DataRef d) {
  if (d.id.empty()) raise(Errc::invalid_parameters, "data id is empty");
  if (d.size_bytes < 0) raise(Errc::invalid_parameters, "data '" + d.id + "' has negative size");
  if (data_.count(d.id)) raise(Errc::duplicate_id, "data '" + d.id + "'");
  auto id = d.id;
  return data_.emplace(id, std::move(d)).first->second;
}

bool TaskGraph::reaches(const TaskId& from, const TaskId& target) const {
  std::vector<TaskId> stack{from};
  std::set<TaskId> seen;
  bool first = true;
  while (!stack.empty()) {
    TaskId cur = std::move(stack.back());
    stack.pop_back();
    if (!first && cur == target) return true;
    first = false;
    if (!seen.insert(cur).second) continue;
    const TaskSpec& spec = entry(cur).spec;
    for (const DataId& out : spec.outputs) {
      auto cit = consumers_.find(out);
      if (cit == consumers_.end()) continue;
      for (const TaskId& c : cit->second) stack.push_back(c);
    }
  }
  return false;
}

const TaskSpec& TaskGraph::add_task(TaskSpec t) {
  if (t.id.empty()) raise(Errc::invalid_parameters, "task id is empty");
  if (tasks_.count(t.id)) raise(Errc::duplicate_id, "task '" + t.id + "'");
  if (t.width < 1) raise(Errc::invalid_parameters, "task '" + t.id + "' width < 1");
  if (!(t.runtime_s >= 0) || !std::isfinite(t.runtime_s))
    raise(Errc::invalid_parameters, "task '" + t.id + "' has bad runtime");
  if (t.estimate_s && (!(*t.estimate_s >= 0) || !std::isfinite(*t.estimate_s)))
    raise(Errc::invalid_parameters, "task '" + t.id + "' has bad estimate");

  std::sort(t.inputs.begin(), t.inputs.end());
  t.inputs.erase(std::unique(t.inputs.begin(), t.inputs.end()), t.inputs.end());
  std::sort(t.outputs.begin(), t.outputs.end());
  t.outputs.erase(std::unique(t.outputs.begin(), t.outputs.end()), t.outputs.end());

  for (const DataId& d : t.inputs)
    if (!data_.count(d))
      raise(Errc::unknown_data_ref, "task '" + t.id + "' input '" + d + "'");
  for (const DataId& d : t.outputs) {
    auto it = data_.find(d);
    if (it == data_.end())
      raise(Errc::unknown_data_ref, "task '" + t.id + "' output '" + d + "'");
    DataKind k = it->second.kind;
    if (k == DataKind::common_input || k == DataKind::unique_input)
      raise(Errc::validation, "task '" + t.id + "' produces input-kind data '" + d + "'");
    if (producer_.count(d))
      raise(Errc::validation,
            "data '" + d + "' already produced by '" + producer_[d] + "'");
    if (std::binary_search(t.inputs.begin(), t.inputs.end(), d))
      raise(Errc::cycle_detected, "task '" + t.id + "' consumes its own output '" + d + "'");
  }

  TaskId id = t.id;
  tasks_.emplace(id, TaskEntry{std::move(t), TaskState::pending});
  const TaskSpec& spec = tasks_.at(id).spec;
  for (const DataId& d : spec.outputs) producer_[d] = id;
  for (const DataId& d : spec.inputs) consumers_[d].push_back(id);

  if (reaches(id, id)) {
    for (const DataId& d : spec.outputs) producer_.erase(d);
    for (const DataId& d : spec.inputs) {
      auto& v = consumers_[d];
      v.erase(std::remove(v.begin(), v.end(), id), v.end());
      if (v.empty()) consumers_.erase(d);
    }
    tasks_.erase(id);
    raise(Errc::cycle_detected, "task '" + id + "' closes a dependency cycle");
  }
  return tasks_.at(id).spec;
}

std::vector<TaskId> TaskGraph::instantiate(IterationTemplate& tpl) {
  int k = tpl.instantiated + 1;
  std::string prefix = tpl.id + "#" + std::to_string(k) + ":";
  DataId carry_in = k == 1 ? tpl.initial_carry
                           : tpl.id + "#" + std::to_string(k - 1) + ":" + tpl.carry_out;
  for (const auto& dp : tpl.data)
    add_data(DataRef{prefix + dp.local_id, dp.size_bytes, DataKind::intermediate});
  std::vector<TaskId> created;
  for (const auto& tp : tpl.tasks) {
    TaskSpec spec;
    spec.id = prefix + tp.local_id;
    spec.runtime_s = tp.runtime_s;
    spec.estimate_s = tp.estimate_s;
    spec.priority = tp.priority;
    for (const auto& in : tp.inputs)
      spec.inputs.push_back(in == "^carry" ? carry_in : prefix + in);
    for (const auto& out : tp.outputs) spec.outputs.push_back(prefix + out);
    add_task(std::move(spec));
    created.push_back(prefix + tp.local_id);
    if (tp.local_id == tpl.gather_local_id)
      hooks_[prefix + tp.local_id] = IterationHook{tpl.id, k};
  }
  tpl.instantiated = k;
  return created;
}

std::vector<TaskId> TaskGraph::add_template(IterationTemplate tpl) {
  if (tpl.id.empty()) raise(Errc::invalid_parameters, "template id is empty");
  if (templates_.count(tpl.id)) raise(Errc::duplicate_id, "template '" + tpl.id + "'");
  if (tpl.limit < 1) raise(Errc::invalid_parameters, "template limit < 1");
  if (!data_.count(tpl.initial_carry))
    raise(Errc::unknown_data_ref, "template initial carry '" + tpl.initial_carry + "'");
  std::set<std::string> locals;
  for (const auto& dp : tpl.data)
    if (!locals.insert(dp.local_id).second)
      raise(Errc::duplicate_id, "template data '" + dp.local_id + "'");
  bool gather_found = false, carry_found = false;
  for (const auto& tp : tpl.tasks) {
    if (tp.local_id == tpl.gather_local_id) gather_found = true;
    for (const auto& in : tp.inputs)
      if (in != "^carry" && !locals.count(in))
        raise(Errc::unknown_data_ref, "template input '" + in + "'");
    for (const auto& out : tp.outputs) {
      if (!locals.count(out)) raise(Errc::unknown_data_ref, "template output '" + out + "'");
      if (out == tpl.carry_out) carry_found = true;
    }
  }
  if (!gather_found)
    raise(Errc::invalid_parameters, "template gather '" + tpl.gather_local_id + "' not in body");
  if (!carry_found)
    raise(Errc::invalid_parameters, "template carry '" + tpl.carry_out + "' not produced");
  tpl.instantiated = 0;
  tpl.closed = false;
  auto& stored = templates_.emplace(tpl.id, std::move(tpl)).first->second;
  return instantiate(stored);
}

std::vector<TaskId> TaskGraph::unfold_iteration(const std::string& template_id,
                                                double iteration_result) {
  auto it = templates_.find(template_id);
  if (it == templates_.end()) raise(Errc::unknown_template, "template '" + template_id + "'");
  IterationTemplate& tpl = it->second;
  if (tpl.closed) raise(Errc::template_closed, "template '" + template_id + "'");
  if (tpl.instantiated >= tpl.limit || !(iteration_result < tpl.limit)) {
    tpl.closed = true;
    return {};
  }
  return instantiate(tpl);
}

void TaskGraph::close_template(const std::string& template_id) {
  auto it = templates_.find(template_id);
  if (it == templates_.end()) raise(Errc::unknown_template, "template '" + template_id + "'");
  it->second.closed = true;
}

std::vector<TaskId> TaskGraph::prune_tasks(const TaskId& root) {
  const TaskEntry& re = entry(root);

  // Descendants via produced-data edges.
  std::set<TaskId> desc;
  std::vector<TaskId> stack{root};
  while (!stack.empty()) {
    TaskId cur = std::move(stack.back());
    stack.pop_back();
    for (const DataId& out : entry(cur).spec.outputs) {
      auto cit = consumers_.find(out);
      if (cit == consumers_.end()) continue;
      for (const TaskId& c : cit->second)
        if (c != root && desc.insert(c).second) stack.push_back(c);
    }
  }

  // A descendant survives if some dependency path reaches it without passing
  // through root: an input born outside the subtree, or a surviving producer.
  std::map<TaskId, bool> alive;
  for (const TaskId& id : topo_order()) {
    if (!desc.count(id)) continue;
    bool a = false;
    for (const DataId& in : entry(id).spec.inputs) {
      DataKind k = data_.at(in).kind;
      if (k == DataKind::common_input || k == DataKind::unique_input) {
        a = true;
        break;
      }
      auto pit = producer_.find(in);
      if (pit == producer_.end()) continue;
      const TaskId& p = pit->second;
      if (p == root) continue;
      if (!desc.count(p) || alive[p]) {
        a = true;
        break;
      }
    }
    alive[id] = a;
  }

  std::vector<TaskId> pruned;
  auto prunable = [&](TaskState s) {
    return s != TaskState::done && s != TaskState::pruned;
  };
  if (prunable(re.state)) pruned.push_back(root);
  for (const TaskId& id : desc)
    if (!alive[id] && prunable(entry(id).state)) pruned.push_back(id);
  std::sort(pruned.begin(), pruned.end());
  for (const TaskId& id : pruned) entry(id).state = TaskState::pruned;
  return pruned;
}

std::vector<TaskId> TaskGraph::ready_tasks() const {
  std::vector<TaskId> out;
  for (const auto& [id, e] : tasks_)
    if (e.state == TaskState::ready) out.push_back(id);
  std::stable_sort(out.begin(), out.end(), [&](const TaskId& a, const TaskId& b) {
    double pa = tasks_.at(a).spec.priority, pb = tasks_.at(b).spec.priority;
    if (pa != pb) return pa > pb;
    return a < b;
  });
  return out;
}

bool TaskGraph::inputs_available(const TaskId& id) const {
  for (const DataId& in : entry(id).spec.inputs) {
    DataKind k = data_.at(in).kind;
    if (k == DataKind::common_input || k == DataKind::unique_input) continue;
    auto pit = producer_.find(in);
    if (pit == producer_.end()) return false;
    if (entry(pit->second).state != TaskState::done) return false;
  }
  return true;
}

std::vector<TaskId> TaskGraph::promote_ready() {
  std::vector<TaskId> promoted;
  for (auto& [id, e] : tasks_) {
    if (e.state != TaskState::pending) continue;
    if (inputs_available(id)) {
      e.state = TaskState::ready;
      promoted.push_back(id);
    }
  }
  return promoted;
}

std::vector<TaskId> TaskGraph::promote_ready_after(const TaskId& producer) {
  std::vector<TaskId> promoted;
  for (const DataId& out : entry(producer).spec.outputs) {
    auto cit = consumers_.find(out);
    if (cit == consumers_.end()) continue;
    for (const TaskId& c : cit->second) {
      TaskEntry& ce = entry(c);
      if (ce.state != TaskState::pending) continue;
      if (inputs_available(c)) {
        ce.state = TaskState::ready;
        promoted.push_back(c);
      }
    }
  }
  std::sort(promoted.begin(), promoted.end());
  promoted.erase(std::unique(promoted.begin(), promoted.end()), promoted.end());
  return promoted;
}

void TaskGraph::set_state(const TaskId& id, TaskState next) {
  TaskEntry& e = entry(id);
  TaskState cur = e.state;
  bool ok = false;
  switch (cur) {
    case TaskState::pending:
      ok = next == TaskState::ready || next == TaskState::pruned;
      break;
    case TaskState::ready:
      ok = next == TaskState::dispatched || next == TaskState::running ||
           next == TaskState::pruned;
      break;
    case TaskState::dispatched:
      ok = next == TaskState::running || next == TaskState::ready ||
           next == TaskState::pruned || next == TaskState::failed;
      break;
    case TaskState::running:
      ok = next == TaskState::done || next == TaskState::failed ||
           next == TaskState::ready || next == TaskState::pruned;
      break;
    case TaskState::done:
      ok = next == TaskState::ready;  // demoted when outputs are lost
      break;
    case TaskState::failed:
      ok = next == TaskState::ready || next == TaskState::pruned;
      break;
    case TaskState::pruned:
      ok = false;
      break;
  }
  if (!ok)
    raise(Errc::invalid_state, "task '" + id + "': " + task_state_name(cur) + " -> " +
                                   task_state_name(next));
  e.state = next;
}

TaskState TaskGraph::state(const TaskId& id) const { return entry(id).state; }

const TaskSpec& TaskGraph::task(const TaskId& id) const { return entry(id).spec; }

const DataRef& TaskGraph::data(const DataId& id) const {
  auto it = data_.find(id);
  if (it == data_.end()) raise(Errc::unknown_data_ref, "data '" + id + "'");
  return it->second;
}

std::optional<TaskId> TaskGraph::producer_of(const DataId& id) const {
  if (!data_.count(id)) raise(Errc::unknown_data_ref, "data '" + id + "'");
  auto it = producer_.find(id);
  if (it == producer_.end()) return std::nullopt;
  return it->second;
}

const std::vector<TaskId>& TaskGraph::consumers_of(const DataId& id) const {
  static const std::vector<TaskId> none;
  if (!data_.count(id)) raise(Errc::unknown_data_ref, "data '" + id + "'");
  auto it = consumers_.find(id);
  return it == consumers_.end() ? none : it->second;
}

std::vector<TaskId> TaskGraph::task_ids() const {
  std::vector<TaskId> out;
  out.reserve(tasks_.size());
  for (const auto& [id, e] : tasks_) out.push_back(id);
  return out;
}

std::vector<DataId> TaskGraph::data_ids() const {
  std::vector<DataId> out;
  out.reserve(data_.size());
  for (const auto& [id, d] : data_) out.push_back(id);
  return out;
}

std::size_t TaskGraph::count_in_state(TaskState s) const {
  std::size_t n = 0;
  for (const auto& [id, e] : tasks_)
    if (e.state == s) ++n;
  return n;
}

std::optional<TaskGraph::IterationHook> TaskGraph::iteration_hook(const TaskId& id) const {
  auto it = hooks_.find(id);
  if (it == hooks_.end()) return std::nullopt;
  return it->second;
}

std::vector<TaskId> TaskGraph::topo_order() const {
  std::map<TaskId, std::size_t> indeg;
  for (const auto& [id, e] : tasks_) {
    std::size_t n = 0;
    for (const DataId& in : e.spec.inputs)
      if (producer_.count(in)) ++n;
    indeg[id] = n;
  }
  std::set<TaskId> frontier;
  for (const auto& [id, n] : indeg)
    if (n == 0) frontier.insert(id);
  std::vector<TaskId> order;
  while (!frontier.empty()) {
    TaskId id = *frontier.begin();
    frontier.erase(frontier.begin());
    order.push_back(id);
    for (const DataId& out : entry(id).spec.outputs) {
      auto cit = consumers_.find(out);
      if (cit == consumers_.end()) continue;
      for (const TaskId& c : cit->second)
        if (--indeg[c] == 0) frontier.insert(c);
    }
  }
  if (order.size() != tasks_.size())
    raise(Errc::cycle_detected, "dependency cycle among " +
                                    std::to_string(tasks_.size() - order.size()) + " tasks");
  return order;
}

std::vector<std::string> TaskGraph::group_ids() const {
  std::set<std::string> groups;
  for (const auto& [id, e] : tasks_)
    if (!e.spec.group.empty()) groups.insert(e.spec.group);
  return {groups.begin(), groups.end()};
}

std::vector<TaskId> TaskGraph::group_chain(const std::string& group) const {
  std::vector<TaskId> members;
  for (const auto& [id, e] : tasks_)
    if (e.spec.group == group) members.push_back(id);
  if (members.empty()) raise(Errc::group_not_chain, "group '" + group + "' has no members");

  std::set<TaskId> in_group(members.begin(), members.end());
  std::map<TaskId, std::set<TaskId>> succ;
  std::map<TaskId, int> indeg;
  for (const TaskId& m : members) indeg[m] = 0;
  for (const TaskId& m : members)
    for (const DataId& in : entry(m).spec.inputs) {
      auto pit = producer_.find(in);
      if (pit == producer_.end() || !in_group.count(pit->second)) continue;
      if (pit->second == m) continue;
      if (succ[pit->second].insert(m).second) ++indeg[m];
    }

  TaskId head;
  int heads = 0;
  for (const TaskId& m : members)
    if (indeg[m] == 0) {
      head = m;
      ++heads;
    }
  if (heads != 1)
    raise(Errc::group_not_chain, "group '" + group + "' has " + std::to_string(heads) +
                                     " heads");
  std::vector<TaskId> chain{head};
  while (chain.size() < members.size()) {
    const auto& nexts = succ[chain.back()];
    if (nexts.size() != 1)
      raise(Errc::group_not_chain, "group '" + group + "' member '" + chain.back() +
                                       "' has " + std::to_string(nexts.size()) +
                                       " in-group successors");
    chain.push_back(*nexts.begin());
  }
  if (!succ[chain.back()].empty())
    raise(Errc::group_not_chain, "group '" + group + "' is not linear");
  return chain;
}

void TaskGraph::validate_structure() const {
  for (const auto& [id, cs] : consumers_) {
    DataKind k = data_.at(id).kind;
    if (k == DataKind::common_input || k == DataKind::unique_input) continue;
    if (!producer_.count(id))
      raise(Errc::validation, "data '" + id + "' is consumed but never produced");
  }
  for (const std::string& g : group_ids()) group_chain(g);
  topo_order();
}

void TaskGraph::restore_state(const TaskId& id, TaskState s) { entry(id).state = s; }

void TaskGraph::restore_template(IterationTemplate tpl) {
  if (templates_.count(tpl.id)) raise(Errc::duplicate_id, "template '" + tpl.id + "'");
  templates_.emplace(tpl.id, std::move(tpl));
}

void TaskGraph::restore_hook(const TaskId& gather, const std::string& template_id,
                             int iteration) {
  hooks_[gather] = IterationHook{template_id, iteration};
}

}  // namespace mtc
