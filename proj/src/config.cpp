#include "mtc/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mtc {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Parser {
  std::string origin;
  std::size_t lineno = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    raise(Errc::config_parse, origin + ":" + std::to_string(lineno) + ": " + msg);
  }

  double number(const std::string& key, const std::string& v) const {
    const char* b = v.c_str();
    char* e = nullptr;
    double x = std::strtod(b, &e);
    if (e == b || *e != '\0') fail("bad number for '" + key + "': '" + v + "'");
    return x;
  }
  std::int64_t integer(const std::string& key, const std::string& v) const {
    const char* b = v.c_str();
    char* e = nullptr;
    long long x = std::strtoll(b, &e, 10);
    if (e == b || *e != '\0') fail("bad integer for '" + key + "': '" + v + "'");
    return x;
  }
  bool boolean(const std::string& key, const std::string& v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("bad boolean for '" + key + "': '" + v + "' (use true/false)");
  }
};

FailureSpec parse_failure(const Parser& p, const std::string& value) {
  FailureSpec f;
  std::istringstream ls(value);
  std::string tok;
  bool kind_seen = false;
  while (ls >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) p.fail("failure needs key=value parts, got '" + tok + "'");
    std::string key = tok.substr(0, eq), v = tok.substr(eq + 1);
    if (key == "kind") {
      kind_seen = true;
      if (v == "hardware") f.kind = FailureSpec::Kind::Hardware;
      else if (v == "os") f.kind = FailureSpec::Kind::Os;
      else if (v == "application") f.kind = FailureSpec::Kind::Application;
      else if (v == "strategic") f.kind = FailureSpec::Kind::Strategic;
      else p.fail("unknown failure kind '" + v + "'");
    } else if (key == "at-sec") {
      f.at_time_s = p.number(key, v);
    } else if (key == "rate-per-node-hour") {
      f.rate_per_node_hour = p.number(key, v);
    } else if (key == "at-completed-fraction") {
      f.at_completed_fraction = p.number(key, v);
    } else if (key == "node") {
      f.node = p.integer(key, v);
    } else if (key == "task") {
      f.task = v;
    } else if (key == "fail-attempts") {
      f.fail_attempts = static_cast<int>(p.integer(key, v));
    } else if (key == "fail-after-start-sec") {
      f.fail_after_start_s = p.number(key, v);
    } else if (key == "runtime-cap-sec") {
      f.runtime_cap_s = p.number(key, v);
    } else if (key == "permanent") {
      f.permanent = p.boolean(key, v);
    } else if (key == "reboot-delay-sec") {
      f.reboot_delay_s = p.number(key, v);
    } else {
      p.fail("unknown failure key '" + key + "'");
    }
  }
  if (!kind_seen) p.fail("failure needs kind=");
  return f;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  Parser p{origin, 0};
  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> seen;

  auto platform_key = [&](const std::string& key, const std::string& v) {
    auto& pf = cfg.platform;
    if (key == "preset") pf = PlatformSpec::preset(v);
    else if (key == "node-count") pf.node_count = p.integer(key, v);
    else if (key == "block-granularity-nodes")
      pf.block_granularity_nodes = static_cast<int>(p.integer(key, v));
    else if (key == "cores-per-node") pf.cores_per_node = static_cast<int>(p.integer(key, v));
    else if (key == "local-storage-capacity-bytes")
      pf.local_storage_capacity_bytes = p.integer(key, v);
    else if (key == "gfs-bandwidth-bytes-per-sec") pf.gfs_bandwidth_bytes_per_s = p.number(key, v);
    else if (key == "gfs-latency-sec") pf.gfs_latency_s = p.number(key, v);
    else if (key == "node-link-bandwidth-bytes-per-sec")
      pf.node_link_bandwidth_bytes_per_s = p.number(key, v);
    else if (key == "node-link-latency-sec") pf.node_link_latency_s = p.number(key, v);
    else if (key == "ifs-enabled") pf.ifs_enabled = p.boolean(key, v);
    else if (key == "ifs-bandwidth-bytes-per-sec") pf.ifs_bandwidth_bytes_per_s = p.number(key, v);
    else if (key == "ifs-latency-sec") pf.ifs_latency_s = p.number(key, v);
    else p.fail("unknown [platform] key '" + key + "'");
  };

  auto policy_key = [&](const std::string& key, const std::string& v) {
    auto& pr = cfg.provision;
    auto& di = cfg.dispatch;
    auto& da = cfg.data;
    auto& re = cfg.resilience;
    if (key == "provision-mode") {
      if (v == "static") pr.mode = ProvisionPolicy::Mode::Static;
      else if (v == "dynamic") pr.mode = ProvisionPolicy::Mode::Dynamic;
      else p.fail("provision-mode is static or dynamic");
    } else if (key == "static-nodes") pr.static_nodes = p.integer(key, v);
    else if (key == "growth") {
      if (v == "constant") pr.growth = ProvisionPolicy::Growth::Constant;
      else if (v == "arithmetic") pr.growth = ProvisionPolicy::Growth::Arithmetic;
      else if (v == "geometric") pr.growth = ProvisionPolicy::Growth::Geometric;
      else p.fail("growth is constant, arithmetic or geometric");
    } else if (key == "growth-start-blocks") pr.start_blocks = p.integer(key, v);
    else if (key == "growth-delta-blocks") pr.delta_blocks = p.integer(key, v);
    else if (key == "growth-ratio") pr.ratio = p.number(key, v);
    else if (key == "idle-release-after-sec") {
      if (v != "none") pr.idle_release_after_s = p.number(key, v);
    } else if (key == "partial-release") pr.partial_release = p.boolean(key, v);
    else if (key == "max-outstanding-requests")
      pr.max_outstanding = static_cast<int>(p.integer(key, v));
    else if (key == "queue-wait-sec") pr.queue_wait_s = p.number(key, v);
    else if (key == "request-overhead-sec") pr.request_overhead_s = p.number(key, v);
    else if (key == "architecture") {
      if (v == "centralized") di.architecture = DispatchPolicy::Architecture::Centralized;
      else if (v == "hierarchical") di.architecture = DispatchPolicy::Architecture::Hierarchical;
      else p.fail("architecture is centralized or hierarchical");
    } else if (key == "scheduler-count") di.scheduler_count = static_cast<int>(p.integer(key, v));
    else if (key == "dispatch-mode") {
      if (v == "pull") di.mode = DispatchPolicy::Mode::Pull;
      else if (v == "push") di.mode = DispatchPolicy::Mode::Push;
      else p.fail("dispatch-mode is pull or push");
    } else if (key == "push-backlog-limit")
      di.push_backlog_limit = static_cast<int>(p.integer(key, v));
    else if (key == "stealing") di.stealing = p.boolean(key, v);
    else if (key == "steal-neighbor-count")
      di.steal_neighbor_count = static_cast<int>(p.integer(key, v));
    else if (key == "ordering") {
      if (v == "fifo") di.ordering = DispatchPolicy::Ordering::Fifo;
      else if (v == "priority") di.ordering = DispatchPolicy::Ordering::Priority;
      else if (v == "longest-first") di.ordering = DispatchPolicy::Ordering::LongestFirst;
      else if (v == "shortest-first") di.ordering = DispatchPolicy::Ordering::ShortestFirst;
      else p.fail("unknown ordering '" + v + "'");
    } else if (key == "runtimes-known") di.runtimes_known = p.boolean(key, v);
    else if (key == "data-aware") di.data_aware = p.boolean(key, v);
    else if (key == "pipeline-grouping") di.pipeline_grouping = p.boolean(key, v);
    else if (key == "migration") di.migration = p.boolean(key, v);
    else if (key == "dispatch-latency-sec") di.dispatch_latency_s = p.number(key, v);
    else if (key == "scheduler-throughput-per-sec")
      di.scheduler_throughput_per_s = p.number(key, v);
    else if (key == "chop-trigger-fraction") {
      if (v != "none") {
        if (!di.chop) di.chop = ChopPolicy{};
        di.chop->trigger_fraction = p.number(key, v);
      }
    } else if (key == "chop-restart-nodes") {
      if (!di.chop) di.chop = ChopPolicy{};
      di.chop->restart_nodes = p.integer(key, v);
    } else if (key == "common-input") {
      if (v == "pull-on-demand") da.common_input = DataPolicy::CommonInput::PullOnDemand;
      else if (v == "push-broadcast") da.common_input = DataPolicy::CommonInput::PushBroadcast;
      else p.fail("common-input is pull-on-demand or push-broadcast");
    } else if (key == "broadcast-fanout")
      da.broadcast_fanout = static_cast<int>(p.integer(key, v));
    else if (key == "intermediate") {
      if (v == "gfs-passthrough") da.intermediate = DataPolicy::Intermediate::GfsPassthrough;
      else if (v == "peer-to-peer") da.intermediate = DataPolicy::Intermediate::PeerToPeer;
      else if (v == "ifs") da.intermediate = DataPolicy::Intermediate::Ifs;
      else p.fail("intermediate is gfs-passthrough, peer-to-peer or ifs");
    } else if (key == "output") {
      if (v == "synchronized") da.output = DataPolicy::Output::Synchronized;
      else if (v == "collective") da.output = DataPolicy::Output::Collective;
      else p.fail("output is synchronized or collective");
    } else if (key == "flush-period-sec") da.flush_period_s = p.number(key, v);
    else if (key == "directory") {
      if (v == "central-map") da.directory = DataPolicy::Directory::CentralMap;
      else if (v == "hashed") da.directory = DataPolicy::Directory::Hashed;
      else p.fail("directory is central-map or hashed");
    } else if (key == "directory-server-count")
      da.directory_server_count = static_cast<int>(p.integer(key, v));
    else if (key == "lookup-latency-sec") da.lookup_latency_s = p.number(key, v);
    else if (key == "reduction") {
      if (v == "tree") da.reduction_trees = true;
      else if (v == "direct") da.reduction_trees = false;
      else p.fail("reduction is direct or tree");
    } else if (key == "reduction-fanout")
      da.reduction_fanout = static_cast<int>(p.integer(key, v));
    else if (key == "max-retries") re.max_retries = static_cast<int>(p.integer(key, v));
    else if (key == "checkpoint-period-sec") re.checkpoint_period_s = p.number(key, v);
    else if (key == "checkpoint-path") re.checkpoint_path = v;
    else if (key == "failure") re.failures.push_back(parse_failure(p, v));
    else p.fail("unknown [policy] key '" + key + "'");
  };

  auto workload_key = [&](const std::string& key, const std::string& v) {
    auto& w = cfg.workload;
    if (key == "archetype") w.archetype = v;
    else if (key == "file") w.file = v;
    else if (key == "tasks") w.tasks = p.integer(key, v);
    else if (key == "runtime-dist") {
      try {
        w.runtime = Distribution::parse(v);
      } catch (const Error& e) {
        p.fail(e.what());
      }
      w.runtime_set = true;
    } else if (key == "common-input-bytes") {
      w.common_bytes = p.integer(key, v);
      w.common_bytes_set = true;
    } else if (key == "unique-input-bytes") {
      w.unique_bytes = p.integer(key, v);
      w.unique_bytes_set = true;
    } else if (key == "output-bytes") w.output_bytes = p.integer(key, v);
    else if (key == "intermediate-bytes") w.intermediate_bytes = p.integer(key, v);
    else if (key == "with-estimates") w.with_estimates = p.boolean(key, v);
    else if (key == "m") w.m = p.integer(key, v);
    else if (key == "k") w.k = p.integer(key, v);
    else if (key == "stages") w.stages = static_cast<int>(p.integer(key, v));
    else if (key == "width") w.width = static_cast<int>(p.integer(key, v));
    else if (key == "depth") w.depth = static_cast<int>(p.integer(key, v));
    else if (key == "branching") w.branching = static_cast<int>(p.integer(key, v));
    else if (key == "prune-probability") w.prune_probability = p.number(key, v);
    else if (key == "body-size") w.body_size = static_cast<int>(p.integer(key, v));
    else if (key == "converge-at") w.converge_at = static_cast<int>(p.integer(key, v));
    else p.fail("unknown [workload] key '" + key + "'");
  };

  auto run_key = [&](const std::string& key, const std::string& v) {
    auto& r = cfg.run;
    if (key == "seeds") {
      r.seeds.clear();
      std::istringstream ss(v);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) p.fail("empty seed in list");
        r.seeds.push_back(static_cast<std::uint64_t>(p.integer(key, tok)));
      }
      if (r.seeds.empty()) p.fail("seeds list is empty");
    } else if (key == "trace") r.trace = p.boolean(key, v);
    else if (key == "output-dir") r.output_dir = v;
    else if (key == "name") r.name = v;
    else p.fail("unknown [run] key '" + key + "'");
  };

  while (std::getline(in, raw)) {
    ++p.lineno;
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') p.fail("unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "platform" && section != "policy" && section != "workload" &&
          section != "run")
        p.fail("unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) p.fail("expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) p.fail("empty key");
    if (section.empty()) p.fail("key '" + key + "' outside any section");
    if (key != "failure" && !seen.insert(section + "." + key).second)
      p.fail("duplicate key '" + key + "' in [" + section + "]");
    if (section == "platform") platform_key(key, value);
    else if (section == "policy") policy_key(key, value);
    else if (section == "workload") workload_key(key, value);
    else run_key(key, value);
  }

  // Structure-enumeration runs kill stuck tasks instead of retrying them.
  if (cfg.workload.archetype == "deem-like") {
    if (!seen.count("policy.max-retries")) cfg.resilience.max_retries = 0;
    bool capped = false;
    for (const auto& f : cfg.resilience.failures)
      if (f.kind == FailureSpec::Kind::Application && f.runtime_cap_s) capped = true;
    if (!capped) {
      FailureSpec cap;
      cap.kind = FailureSpec::Kind::Application;
      cap.runtime_cap_s = 36000;
      cfg.resilience.failures.push_back(cap);
    }
  }

  if (const char* out = std::getenv("MTCSIM_OUT_DIR"); out && *out)
    cfg.run.output_dir = out;
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::config_parse, "cannot read config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ExperimentConfig cfg = parse(text, path);
  if (cfg.run.name.empty()) {
    std::string stem = path;
    auto slash = stem.find_last_of("/\\");
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    auto dot = stem.rfind('.');
    if (dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
    cfg.run.name = stem;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  platform.validate();
  provision.validate();
  dispatch.validate();
  data.validate();
  resilience.validate();
  workload.validate();
  if (run.seeds.empty()) raise(Errc::validation, "no seeds configured");
  if (run.name.empty()) raise(Errc::validation, "run name is empty");
  if (provision.mode == ProvisionPolicy::Mode::Static)
    round_to_granularity(provision.static_nodes, platform.block_granularity_nodes,
                         platform.node_count);
  if (dispatch.chop && dispatch.chop->restart_nodes > platform.node_count)
    raise(Errc::validation, "chop restart allocation exceeds the machine");
  if (data.intermediate == DataPolicy::Intermediate::Ifs && !platform.ifs_enabled)
    raise(Errc::validation, "intermediate=ifs needs ifs-enabled=true");
  if (dispatch.architecture == DispatchPolicy::Architecture::Centralized &&
      dispatch.scheduler_count != 1)
    raise(Errc::validation, "centralized dispatch has exactly one scheduler");
}

}  // namespace mtc
