#include "mtc/sim_kernel.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <unordered_set>

namespace mtc {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::task_start: return "task-start";
    case EventKind::task_end: return "task-end";
    case EventKind::task_fail: return "task-fail";
    case EventKind::transfer_start: return "transfer-start";
    case EventKind::transfer_end: return "transfer-end";
    case EventKind::block_granted: return "block-granted";
    case EventKind::block_released: return "block-released";
    case EventKind::worker_idle: return "worker-idle";
    case EventKind::dispatch: return "dispatch";
    case EventKind::prune_signal: return "prune-signal";
    case EventKind::checkpoint: return "checkpoint";
    case EventKind::failure_injected: return "failure-injected";
    case EventKind::chop_triggered: return "chop-triggered";
    case EventKind::flush: return "flush";
    case EventKind::timer: return "timer";
  }
  return "unknown";
}

const char* route_name(Route r) {
  switch (r) {
    case Route::gfs_read: return "gfs-read";
    case Route::gfs_write: return "gfs-write";
    case Route::node_to_node: return "node-to-node";
    case Route::ifs_read: return "ifs-read";
    case Route::ifs_write: return "ifs-write";
  }
  return "unknown";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  // Integral values print without exponent or fraction.
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  // Otherwise the shortest precision that survives a parse round-trip.
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

std::string format_endpoint(std::int64_t ep) {
  if (ep == kGfs) return "gfs";
  if (ep == kIfs) return "ifs";
  return std::to_string(ep);
}

std::string format_trace_line(const SimEvent& e) {
  std::string line = format_double(e.time);
  line += '\t';
  line += std::to_string(e.seq);
  line += '\t';
  line += event_kind_name(e.kind);
  line += '\t';
  const Payload& p = e.payload;
  bool first = true;
  auto put = [&](const char* key, const std::string& value) {
    if (!first) line += ' ';
    first = false;
    line += key;
    line += '=';
    line += value;
  };
  if (!p.task.empty()) put("task", p.task);
  if (!p.data.empty()) put("data", p.data);
  if (p.node != kNone) put("node", format_endpoint(p.node));
  if (p.src != kNone) put("src", format_endpoint(p.src));
  if (p.dst != kNone) put("dst", format_endpoint(p.dst));
  if (p.bytes != kNone) put("bytes", std::to_string(p.bytes));
  if (p.route) put("route", route_name(*p.route));
  if (p.block != kNone) put("block", std::to_string(p.block));
  if (p.count != kNone) put("count", std::to_string(p.count));
  if (p.scheduler != kNone) put("scheduler", std::to_string(p.scheduler));
  if (p.width != kNone) put("width", std::to_string(p.width));
  if (p.attempt != kNone) put("attempt", std::to_string(p.attempt));
  if (!p.tag.empty()) put("tag", p.tag);
  return line;
}

EventId EventQueue::schedule(double time, EventKind kind, Payload payload) {
  if (std::isnan(time)) raise(Errc::invalid_parameters, "event time is nan");
  if (time < clock_)
    raise(Errc::time_travel, "event at " + format_double(time) + " before clock " +
                                 format_double(clock_));
  EventId id = next_id_++;
  heap_.push(Entry{time, next_seq_++, id, kind, std::move(payload)});
  ++live_;
  pending_.insert(id);
  return id;
}

void EventQueue::cancel(EventId id) {
  auto it = pending_.find(id);
  if (it == pending_.end()) return;
  pending_.erase(it);
  --live_;
}

bool EventQueue::pending(EventId id) const { return pending_.count(id) != 0; }

std::size_t EventQueue::run(double until,
                            const std::function<void(const SimEvent&)>& handler) {
  std::size_t fired = 0;
  while (!heap_.empty() && heap_.top().time <= until) {
    Entry top = heap_.top();
    heap_.pop();
    auto it = pending_.find(top.id);
    if (it == pending_.end()) continue;  // cancelled: skip silently
    pending_.erase(it);
    --live_;
    clock_ = top.time;
    SimEvent ev{top.time, top.seq, top.kind, std::move(top.payload)};
    if (tracing_) trace_.push_back(ev);
    handler(ev);
    ++fired;
  }
  if (live_ != 0 && until > clock_ && !std::isinf(until)) clock_ = until;
  return fired;
}

std::vector<SimEvent> EventQueue::take_trace() {
  std::vector<SimEvent> out;
  out.swap(trace_);
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, const std::string& name)
    : gen_(splitmix64(splitmix64(seed) ^ fnv1a64(name))) {}

std::uint64_t RngStream::next_u64() { return gen_(); }

double RngStream::u01() { return (next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double a, double b) { return a + (b - a) * u01(); }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) raise(Errc::invalid_parameters, "below(0)");
  // Rejection sampling keeps the draw unbiased.
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * u01() - 1.0;
    v = 2.0 * u01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  have_spare_ = true;
  return u * m;
}

Distribution Distribution::constant(double value) { return {Kind::constant, value, 0}; }
Distribution Distribution::uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
Distribution Distribution::lognormal(double mean, double sd) { return {Kind::lognormal, mean, sd}; }
Distribution Distribution::exponential(double mean) { return {Kind::exponential, mean, 0}; }

void Distribution::validate() const {
  switch (kind) {
    case Kind::constant:
      if (a < 0) raise(Errc::invalid_parameters, "constant value must be >= 0");
      break;
    case Kind::uniform:
      if (a < 0 || b < a)
        raise(Errc::invalid_parameters, "uniform needs 0 <= lo <= hi");
      break;
    case Kind::lognormal:
      if (a <= 0 || b < 0)
        raise(Errc::invalid_parameters, "lognormal needs mean > 0 and sd >= 0");
      break;
    case Kind::exponential:
      if (a <= 0) raise(Errc::invalid_parameters, "exponential needs mean > 0");
      break;
  }
}

double Distribution::sample(RngStream& rng) const {
  validate();
  switch (kind) {
    case Kind::constant:
      return a;
    case Kind::uniform:
      return rng.uniform(a, b);
    case Kind::lognormal: {
      if (b == 0) return a;
      // Parameterised by target mean/sd of the resulting values.
      double cv2 = (b / a) * (b / a);
      double sigma2 = std::log1p(cv2);
      double mu = std::log(a) - sigma2 / 2.0;
      return std::exp(mu + std::sqrt(sigma2) * rng.normal());
    }
    case Kind::exponential:
      return -a * std::log1p(-rng.u01());
  }
  return 0;
}

std::string Distribution::to_string() const {
  switch (kind) {
    case Kind::constant: return "constant(" + format_double(a) + ")";
    case Kind::uniform: return "uniform(" + format_double(a) + "," + format_double(b) + ")";
    case Kind::lognormal: return "lognormal(" + format_double(a) + "," + format_double(b) + ")";
    case Kind::exponential: return "exponential(" + format_double(a) + ")";
  }
  return "constant(0)";
}

namespace {

double parse_number(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || !end || *end != '\0')
    raise(Errc::invalid_parameters, "bad number '" + s + "' in distribution");
  return v;
}

}  // namespace

Distribution Distribution::parse(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != ' ' && c != '\t') s += c;
  auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')')
    raise(Errc::invalid_parameters, "bad distribution '" + text + "'");
  std::string name = s.substr(0, open);
  std::string args = s.substr(open + 1, s.size() - open - 2);
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= args.size() && !args.empty()) {
    auto comma = args.find(',', pos);
    std::string tok = args.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos);
    vals.push_back(parse_number(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  Distribution d;
  if (name == "constant" && vals.size() == 1) d = constant(vals[0]);
  else if (name == "uniform" && vals.size() == 2) d = uniform(vals[0], vals[1]);
  else if (name == "lognormal" && vals.size() == 2) d = lognormal(vals[0], vals[1]);
  else if (name == "exponential" && vals.size() == 1) d = exponential(vals[0]);
  else raise(Errc::invalid_parameters, "bad distribution '" + text + "'");
  d.validate();
  return d;
}

}  // namespace mtc
