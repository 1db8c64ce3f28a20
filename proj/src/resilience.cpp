#include "mtc/resilience.hpp"

#include <fstream>

#include <json.hpp>

namespace mtc {

using nlohmann::json;

const char* failure_kind_name(FailureSpec::Kind k) {
  switch (k) {
    case FailureSpec::Kind::Hardware: return "hardware";
    case FailureSpec::Kind::Os: return "os";
    case FailureSpec::Kind::Application: return "application";
    case FailureSpec::Kind::Strategic: return "strategic";
  }
  return "unknown";
}

void FailureSpec::validate() const {
  auto has = [](const auto& opt) { return opt.has_value(); };
  switch (kind) {
    case Kind::Hardware:
    case Kind::Os:
      if (has(at_time_s) == has(rate_per_node_hour))
        raise(Errc::invalid_parameters,
              "node failure needs exactly one of a time or a rate");
      if (has(at_completed_fraction) || has(task))
        raise(Errc::invalid_parameters, "node failure cannot target completion or tasks");
      if (rate_per_node_hour && *rate_per_node_hour <= 0)
        raise(Errc::invalid_parameters, "failure rate must be > 0");
      if (reboot_delay_s < 0) raise(Errc::invalid_parameters, "reboot delay must be >= 0");
      break;
    case Kind::Application:
      if (has(runtime_cap_s) == has(task))
        raise(Errc::invalid_parameters,
              "application failure targets a task or caps runtimes, not both");
      if (runtime_cap_s && *runtime_cap_s <= 0)
        raise(Errc::invalid_parameters, "runtime cap must be > 0");
      if (task && fail_attempts < 1)
        raise(Errc::invalid_parameters, "fail attempts must be >= 1");
      if (fail_after_start_s < 0)
        raise(Errc::invalid_parameters, "failure offset must be >= 0");
      break;
    case Kind::Strategic:
      if (has(at_time_s) == has(at_completed_fraction))
        raise(Errc::invalid_parameters,
              "strategic failure needs exactly one of a time or a completed fraction");
      if (at_completed_fraction &&
          (*at_completed_fraction <= 0 || *at_completed_fraction >= 1))
        raise(Errc::invalid_parameters, "completed fraction must be in (0, 1)");
      if (has(node) || has(task))
        raise(Errc::invalid_parameters, "strategic failure hits the whole run");
      break;
  }
}

void ResilienceConfig::validate() const {
  for (const auto& f : failures) f.validate();
  if (max_retries < 0) raise(Errc::invalid_parameters, "max retries must be >= 0");
  if (checkpoint_period_s < 0)
    raise(Errc::invalid_parameters, "checkpoint period must be >= 0");
  bool wants_checkpoint = checkpoint_period_s > 0;
  for (const auto& f : failures)
    if (f.kind == FailureSpec::Kind::Strategic) wants_checkpoint = true;
  if (wants_checkpoint && checkpoint_path.empty())
    raise(Errc::invalid_parameters, "checkpointing needs a checkpoint path");
}

namespace {

json dump_task_spec(const TaskSpec& t) {
  json j;
  j["id"] = t.id;
  j["inputs"] = t.inputs;
  j["outputs"] = t.outputs;
  j["runtime"] = t.runtime_s;
  if (t.estimate_s) j["estimate"] = *t.estimate_s;
  j["priority"] = t.priority;
  if (!t.group.empty()) j["group"] = t.group;
  j["width"] = t.width;
  j["combinable"] = t.combinable;
  return j;
}

TaskSpec load_task_spec(const json& j) {
  TaskSpec t;
  t.id = j.at("id").get<std::string>();
  t.inputs = j.at("inputs").get<std::vector<std::string>>();
  t.outputs = j.at("outputs").get<std::vector<std::string>>();
  t.runtime_s = j.at("runtime").get<double>();
  if (j.contains("estimate")) t.estimate_s = j.at("estimate").get<double>();
  t.priority = j.at("priority").get<double>();
  if (j.contains("group")) t.group = j.at("group").get<std::string>();
  t.width = j.at("width").get<int>();
  t.combinable = j.at("combinable").get<bool>();
  return t;
}

TaskState parse_state(const std::string& s) {
  for (TaskState st : {TaskState::pending, TaskState::ready, TaskState::dispatched,
                       TaskState::running, TaskState::done, TaskState::failed,
                       TaskState::pruned})
    if (s == task_state_name(st)) return st;
  raise(Errc::corrupt_checkpoint, "unknown task state '" + s + "'");
}

}  // namespace

std::string Checkpoint::to_json() const {
  json j;
  j["version"] = version;
  j["time"] = time;
  j["seed"] = seed;
  json jd = json::array();
  for (const auto& d : data)
    jd.push_back({{"id", d.id}, {"size", d.size_bytes}, {"kind", data_kind_name(d.kind)}});
  j["data"] = jd;
  json jt = json::array();
  for (const auto& td : tasks) {
    json t = dump_task_spec(td.spec);
    t["state"] = task_state_name(td.state);
    t["retries"] = td.retries;
    jt.push_back(t);
  }
  j["tasks"] = jt;
  json jtpl = json::array();
  for (const auto& tpl : templates) {
    json t;
    t["id"] = tpl.id;
    json dd = json::array();
    for (const auto& dp : tpl.data)
      dd.push_back({{"local", dp.local_id}, {"size", dp.size_bytes}});
    t["data"] = dd;
    json tt = json::array();
    for (const auto& tp : tpl.tasks) {
      json p;
      p["local"] = tp.local_id;
      p["runtime"] = tp.runtime_s;
      if (tp.estimate_s) p["estimate"] = *tp.estimate_s;
      p["priority"] = tp.priority;
      p["inputs"] = tp.inputs;
      p["outputs"] = tp.outputs;
      tt.push_back(p);
    }
    t["tasks"] = tt;
    t["gather"] = tpl.gather_local_id;
    t["carry_out"] = tpl.carry_out;
    t["initial_carry"] = tpl.initial_carry;
    t["limit"] = tpl.limit;
    t["instantiated"] = tpl.instantiated;
    t["closed"] = tpl.closed;
    jtpl.push_back(t);
  }
  j["templates"] = jtpl;
  json jh = json::array();
  for (const auto& h : hooks)
    jh.push_back({{"gather", h.gather}, {"template", h.template_id}, {"iteration", h.iteration}});
  j["hooks"] = jh;
  j["gfs"] = gfs_resident;
  json jl = json::array();
  for (const auto& [d, n] : lost_unflushed) jl.push_back({{"data", d}, {"node", n}});
  j["lost_unflushed"] = jl;
  j["provisioner_cursor"] = provisioner_cursor;
  j["static_fired"] = static_fired;
  return j.dump(2) + "\n";
}

Checkpoint Checkpoint::from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    Checkpoint cp;
    cp.version = j.at("version").get<int>();
    if (cp.version != 1)
      raise(Errc::corrupt_checkpoint,
            "unsupported checkpoint version " + std::to_string(cp.version));
    cp.time = j.at("time").get<double>();
    cp.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& d : j.at("data"))
      cp.data.push_back(DataRef{d.at("id").get<std::string>(),
                                d.at("size").get<std::int64_t>(),
                                parse_data_kind(d.at("kind").get<std::string>())});
    for (const auto& t : j.at("tasks")) {
      TaskDump td;
      td.spec = load_task_spec(t);
      td.state = parse_state(t.at("state").get<std::string>());
      td.retries = t.at("retries").get<int>();
      cp.tasks.push_back(std::move(td));
    }
    for (const auto& t : j.at("templates")) {
      IterationTemplate tpl;
      tpl.id = t.at("id").get<std::string>();
      for (const auto& d : t.at("data"))
        tpl.data.push_back({d.at("local").get<std::string>(), d.at("size").get<std::int64_t>()});
      for (const auto& p : t.at("tasks")) {
        IterationTemplate::TaskProto tp;
        tp.local_id = p.at("local").get<std::string>();
        tp.runtime_s = p.at("runtime").get<double>();
        if (p.contains("estimate")) tp.estimate_s = p.at("estimate").get<double>();
        tp.priority = p.at("priority").get<double>();
        tp.inputs = p.at("inputs").get<std::vector<std::string>>();
        tp.outputs = p.at("outputs").get<std::vector<std::string>>();
        tpl.tasks.push_back(std::move(tp));
      }
      tpl.gather_local_id = t.at("gather").get<std::string>();
      tpl.carry_out = t.at("carry_out").get<std::string>();
      tpl.initial_carry = t.at("initial_carry").get<std::string>();
      tpl.limit = t.at("limit").get<int>();
      tpl.instantiated = t.at("instantiated").get<int>();
      tpl.closed = t.at("closed").get<bool>();
      cp.templates.push_back(std::move(tpl));
    }
    for (const auto& h : j.at("hooks"))
      cp.hooks.push_back({h.at("gather").get<std::string>(),
                          h.at("template").get<std::string>(),
                          h.at("iteration").get<int>()});
    for (const auto& g : j.at("gfs")) cp.gfs_resident.insert(g.get<std::string>());
    for (const auto& l : j.at("lost_unflushed"))
      cp.lost_unflushed.emplace_back(l.at("data").get<std::string>(),
                                     l.at("node").get<NodeId>());
    cp.provisioner_cursor = j.at("provisioner_cursor").get<int>();
    cp.static_fired = j.at("static_fired").get<bool>();
    return cp;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(Errc::corrupt_checkpoint, e.what());
  }
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io, "cannot write '" + path + "'");
  out << to_json();
  if (!out.flush()) raise(Errc::io, "short write to '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::corrupt_checkpoint, "cannot read '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

TaskGraph graph_from_checkpoint(const Checkpoint& cp) {
  TaskGraph g;
  for (const auto& d : cp.data) g.add_data(d);
  for (const auto& td : cp.tasks) g.add_task(td.spec);
  for (const auto& tpl : cp.templates) g.restore_template(tpl);
  for (const auto& h : cp.hooks) g.restore_hook(h.gather, h.template_id, h.iteration);
  for (const auto& td : cp.tasks) {
    TaskState s = td.state;
    if (s == TaskState::running || s == TaskState::dispatched) s = TaskState::ready;
    g.restore_state(td.spec.id, s);
  }

  auto available = [&](const DataId& id) {
    DataKind k = g.data(id).kind;
    if (k == DataKind::common_input || k == DataKind::unique_input) return true;
    return cp.gfs_resident.count(id) != 0;
  };

  // Work lost with node caches must be redone: demote done producers whose
  // outputs are gone but still wanted, cascading upstream as needed.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const TaskId& id : g.task_ids()) {
      TaskState s = g.state(id);
      if (s != TaskState::done) continue;
      for (const DataId& out : g.task(id).outputs) {
        if (available(out)) continue;
        bool wanted = g.data(out).kind == DataKind::output;
        if (!wanted)
          for (const TaskId& c : g.consumers_of(out)) {
            TaskState cs = g.state(c);
            if (cs == TaskState::pending || cs == TaskState::ready) {
              wanted = true;
              break;
            }
          }
        if (wanted) {
          g.restore_state(id, TaskState::ready);
          changed = true;
          break;
        }
      }
    }
  }
  // Ready tasks whose inputs evaporated wait for the producer to run again.
  for (const TaskId& id : g.task_ids())
    if (g.state(id) == TaskState::ready && !g.inputs_available(id))
      g.restore_state(id, TaskState::pending);
  return g;
}

}  // namespace mtc
