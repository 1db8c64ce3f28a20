#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "mtc/error.hpp"

namespace mtc {

// Special endpoint ids used in transfer payloads alongside real node numbers.
inline constexpr std::int64_t kNone = -1;
inline constexpr std::int64_t kGfs = -2;   // global (shared) file system
inline constexpr std::int64_t kIfs = -3;   // intermediate file system tier

enum class EventKind {
  task_start,
  task_end,
  task_fail,
  transfer_start,
  transfer_end,
  block_granted,
  block_released,
  worker_idle,
  dispatch,
  prune_signal,
  checkpoint,
  failure_injected,
  chop_triggered,
  flush,
  timer,
};

const char* event_kind_name(EventKind k);

enum class Route {
  gfs_read,
  gfs_write,
  node_to_node,
  ifs_read,
  ifs_write,
};

const char* route_name(Route r);

// One bag of optional fields; each event kind fills the subset it needs.
// Unset integer fields hold kNone, unset strings are empty.
struct Payload {
  std::string task;
  std::string data;
  std::int64_t node = kNone;
  std::int64_t src = kNone;
  std::int64_t dst = kNone;
  std::int64_t bytes = kNone;
  std::int64_t block = kNone;
  std::int64_t count = kNone;
  std::int64_t scheduler = kNone;
  std::int64_t width = kNone;
  std::int64_t attempt = kNone;
  std::optional<Route> route;
  std::string tag;
};

struct SimEvent {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind{};
  Payload payload;
};

// Shortest decimal string that round-trips to the same double. Used for the
// trace and CSV writers so identical runs produce byte-identical files.
std::string format_double(double v);

std::string format_endpoint(std::int64_t ep);
std::string format_trace_line(const SimEvent& e);

using EventId = std::uint64_t;

// Deterministic event queue. Events fire in (time, seq) order; seq is a
// monotonic schedule counter, so equal-time events fire in schedule order.
// Cancelled events are skipped silently: they are not handled, traced or
// counted.
class EventQueue {
 public:
  EventQueue() = default;

  EventId schedule(double time, EventKind kind, Payload payload);
  void cancel(EventId id);
  bool pending(EventId id) const;

  // Fires events with time <= until (all of them if until is infinity).
  // Returns the number of events handled. The handler may schedule and
  // cancel further events.
  std::size_t run(double until, const std::function<void(const SimEvent&)>& handler);

  double clock() const { return clock_; }
  bool empty() const { return live_ == 0; }
  std::size_t size() const { return live_; }

  const std::vector<SimEvent>& trace() const { return trace_; }
  void set_tracing(bool on) { tracing_ = on; }
  std::vector<SimEvent> take_trace();

 private:
  struct Entry {
    double time;
    std::uint64_t seq;
    EventId id;
    EventKind kind;
    Payload payload;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::unordered_set<EventId> pending_;  // membership only, never iterated
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_id_ = 1;
  std::size_t live_ = 0;
  double clock_ = 0.0;
  bool tracing_ = true;
  std::vector<SimEvent> trace_;
};

// Named deterministic random stream: the same (seed, name) pair always yields
// the same sequence, independent of any other stream drawn from the same seed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, const std::string& name);

  double u01();                       // uniform in [0, 1)
  double uniform(double a, double b); // uniform in [a, b]
  double normal();                    // standard normal
  std::uint64_t next_u64();
  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct Distribution {
  enum class Kind { constant, uniform, lognormal, exponential };
  Kind kind = Kind::constant;
  double a = 0.0;  // constant: value; uniform: lo; lognormal: mean; exponential: mean
  double b = 0.0;  // uniform: hi; lognormal: standard deviation

  static Distribution constant(double value);
  static Distribution uniform(double lo, double hi);
  static Distribution lognormal(double mean, double sd);
  static Distribution exponential(double mean);

  void validate() const;
  double sample(RngStream& rng) const;

  std::string to_string() const;
  static Distribution parse(const std::string& text);
};

}  // namespace mtc
