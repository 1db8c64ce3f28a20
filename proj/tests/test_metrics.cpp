#include <algorithm>

#include "doctest.h"
#include "mtc/metrics.hpp"

using namespace mtc;

namespace {

struct TraceBuilder {
  std::vector<SimEvent> events;
  std::uint64_t seq = 0;

  Payload& add(double t, EventKind k) {
    events.push_back({t, seq++, k, {}});
    return events.back().payload;
  }
  void grant(double t, std::int64_t block, std::int64_t first, std::int64_t count) {
    auto& p = add(t, EventKind::block_granted);
    p.block = block;
    p.node = first;
    p.count = count;
  }
  void release(double t, std::int64_t block) { add(t, EventKind::block_released).block = block; }
  void dispatch(double t, const std::string& task, std::int64_t node,
                const std::string& tag, std::int64_t attempt = 1) {
    auto& p = add(t, EventKind::dispatch);
    p.task = task;
    p.node = node;
    p.attempt = attempt;
    p.tag = tag;
  }
  void start(double t, const std::string& task, std::int64_t node,
             std::int64_t attempt = 1) {
    auto& p = add(t, EventKind::task_start);
    p.task = task;
    p.node = node;
    p.attempt = attempt;
  }
  void end(double t, const std::string& task, std::int64_t node) {
    auto& p = add(t, EventKind::task_end);
    p.task = task;
    p.node = node;
  }
  void fail(double t, const std::string& task, std::int64_t node) {
    auto& p = add(t, EventKind::task_fail);
    p.task = task;
    p.node = node;
  }
  void prune(double t, const std::string& task, std::int64_t node) {
    auto& p = add(t, EventKind::prune_signal);
    p.task = task;
    p.node = node;
  }
  void xfer(double t0, double t1, const std::string& data, std::int64_t src,
            std::int64_t dst, std::int64_t bytes, Route route) {
    auto& a = add(t0, EventKind::transfer_start);
    a.data = data;
    a.src = src;
    a.dst = dst;
    a.bytes = bytes;
    a.route = route;
    // Re-sort later; keep end separate so callers can interleave.
    auto& b = add(t1, EventKind::transfer_end);
    b.data = data;
    b.src = src;
    b.dst = dst;
    b.bytes = bytes;
    b.route = route;
  }
  std::vector<SimEvent> take() {
    std::stable_sort(events.begin(), events.end(),
                     [](const SimEvent& a, const SimEvent& b) { return a.time < b.time; });
    for (std::uint64_t i = 0; i < events.size(); ++i) events[i].seq = i;
    return events;
  }
};

}  // namespace

TEST_CASE("an empty trace reports a clean zero-length run") {
  RunReport r = report_from_trace({}, 1);
  CHECK(r.makespan_s == 0);
  CHECK(r.allocated_core_s == 0);
  CHECK(r.utilization == 1.0);  // nothing allocated, nothing wasted
  CHECK(r.tasks_done == 0);
  CHECK(r.transfers == 0);
}

TEST_CASE("pull dispatches reserve the worker before the task starts") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 2);
  tb.dispatch(5, "t1", 0, "pull");
  tb.start(6, "t1", 0);
  tb.end(16, "t1", 0);
  tb.release(20, 0);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.makespan_s == 20);
  CHECK(r.allocated_core_s == 40);   // 2 nodes for 20 s
  CHECK(r.busy_core_s == 11);        // reserved at dispatch, not at start
  CHECK(r.utilization == 11.0 / 40.0);
  CHECK(r.tasks_done == 1);
  CHECK(r.task_starts == 1);
  CHECK(r.distinct_tasks_started == 1);
  CHECK(r.dispatch_p50_s == 1);      // start minus dispatch
  CHECK(r.dispatch_max_s == 1);
}

TEST_CASE("push work occupies the worker only from task start") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 1);
  tb.dispatch(5, "t1", 0, "push");
  tb.start(8, "t1", 0);
  tb.end(18, "t1", 0);
  tb.release(20, 0);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.busy_core_s == 10);
  CHECK(r.dispatch_p50_s == 3);
}

TEST_CASE("cores per node scales both sides of utilization") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 1);
  tb.start(0, "t1", 0);
  tb.end(10, "t1", 0);
  tb.release(10, 0);
  RunReport r = report_from_trace(tb.take(), 32);
  CHECK(r.allocated_core_s == 320);
  CHECK(r.busy_core_s == 320);
  CHECK(r.utilization == 1.0);
}

TEST_CASE("width weights a reservation by the nodes it holds") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 4);
  auto& p = tb.add(0, EventKind::task_start);
  p.task = "wide";
  p.node = 0;
  p.width = 4;
  p.attempt = 1;
  tb.end(10, "wide", 0);
  tb.release(10, 0);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.busy_core_s == 40);
  CHECK(r.utilization == 1.0);
}

TEST_CASE("a block release closes reservations stranded on its nodes") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 2);
  tb.start(2, "t1", 1);
  tb.release(10, 0);  // no task-end: the kill is implicit
  tb.add(12, EventKind::timer);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.busy_core_s == 8);  // [2, 10]
  CHECK(r.allocated_core_s == 20);
  CHECK(r.tasks_done == 0);
}

TEST_CASE("reservations still open at the end stretch to the makespan") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 1);
  tb.start(2, "t1", 0);
  tb.add(10, EventKind::timer);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.makespan_s == 10);
  CHECK(r.busy_core_s == 8);
  CHECK(r.allocated_core_s == 10);
}

TEST_CASE("a prune kill closes only the named node") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 2);
  tb.dispatch(0, "t1", 0, "pull");
  tb.start(1, "t1", 1);  // second reservation on another node
  tb.prune(5, "t1", 0);
  tb.end(9, "t1", 1);
  tb.release(10, 0);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.busy_core_s == 5 + 8);  // [0,5] on node 0, [1,9] on node 1
}

TEST_CASE("failures close the attempt and are counted") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 1);
  tb.start(0, "t1", 0, 1);
  tb.fail(4, "t1", 0);
  tb.start(5, "t1", 0, 2);
  tb.end(10, "t1", 0);
  tb.release(10, 0);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.task_failures == 1);
  CHECK(r.tasks_done == 1);
  CHECK(r.task_starts == 2);
  CHECK(r.distinct_tasks_started == 1);
  CHECK(r.busy_core_s == 4 + 5);
}

TEST_CASE("transfers sum bytes by route") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 2);
  tb.xfer(0, 2, "d1", kGfs, 0, 1000, Route::gfs_read);
  tb.xfer(1, 3, "d1", 0, 1, 500, Route::node_to_node);
  tb.xfer(3, 4, "d2", 1, kGfs, 200, Route::gfs_write);
  tb.release(5, 0);
  auto bytes = bytes_moved(tb.take());
  CHECK(bytes[Route::gfs_read] == 1000);
  CHECK(bytes[Route::node_to_node] == 500);
  CHECK(bytes[Route::gfs_write] == 200);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.transfers == 3);
}

TEST_CASE("malformed traces are rejected") {
  TraceBuilder tb;
  tb.end(5, "ghost", 0);
  CHECK_THROWS_AS(report_from_trace(tb.take(), 1), Error);

  TraceBuilder tb2;
  auto& p = tb2.add(1, EventKind::transfer_end);
  p.data = "d";
  p.src = 0;
  p.dst = 1;
  p.route = Route::node_to_node;
  CHECK_THROWS_AS(report_from_trace(tb2.take(), 1), Error);

  TraceBuilder tb3;
  tb3.release(1, 99);
  CHECK_THROWS_AS(report_from_trace(tb3.take(), 1), Error);
}

TEST_CASE("flush events are counted") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 1);
  tb.add(60, EventKind::flush);
  tb.add(120, EventKind::flush);
  tb.release(130, 0);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.flushes == 2);
}

TEST_CASE("dispatch latency percentiles use rank order") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 1);
  for (int i = 1; i <= 10; ++i) {
    std::string id = "t" + std::to_string(i);
    tb.dispatch(100 - i, id, 0, "push");
    tb.start(100, id, 0);
    tb.end(100.5 + i, id, 0);
  }
  tb.release(200, 0);
  RunReport r = report_from_trace(tb.take(), 1);
  CHECK(r.dispatch_p50_s == 5);
  CHECK(r.dispatch_p90_s == 9);
  CHECK(r.dispatch_p99_s == 10);
  CHECK(r.dispatch_max_s == 10);
}

TEST_CASE("windowed utilization isolates the tail") {
  TraceBuilder tb;
  tb.grant(0, 0, 0, 4);
  auto& p = tb.add(0, EventKind::task_start);
  p.task = "t1";
  p.node = 0;
  p.width = 4;
  tb.end(50, "t1", 0);
  tb.release(100, 0);
  auto trace = tb.take();
  CHECK(utilization_window(trace, 1, 0, 50) == 1.0);
  CHECK(utilization_window(trace, 1, 50, 100) == 0.0);
  CHECK(utilization(trace, 1) == 0.5);
  CHECK_THROWS_AS(utilization_window(trace, 1, 50, 50), Error);

  auto deciles = tail_profile(trace, 1);
  CHECK(deciles[0] == 1.0);
  CHECK(deciles[4] == 1.0);
  CHECK(deciles[5] == 0.0);
  CHECK(deciles[9] == 0.0);
}

TEST_CASE("csv rows line up with the header") {
  RunReport r;
  r.makespan_s = 12.5;
  r.generated = 4;
  r.tasks_done = 4;
  r.completed = true;
  std::string header = csv_header();
  std::string row = csv_row("cfg", "sweep", 7, r);
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(row.substr(0, 15) == "cfg,sweep,7,12.");
  CHECK(header.substr(0, 7) == "config,");
}
