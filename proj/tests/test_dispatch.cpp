#include <algorithm>

#include "doctest.h"
#include "mtc/dispatch.hpp"

using namespace mtc;

namespace {

QueuedTask qt(const std::string& id, std::uint64_t seq, double priority = 0,
              std::optional<double> runtime = std::nullopt) {
  return QueuedTask{id, priority, runtime, seq};
}

std::vector<TaskId> order(DispatchPolicy::Ordering o, std::vector<QueuedTask> q) {
  std::stable_sort(q.begin(), q.end(),
                   [&](const QueuedTask& a, const QueuedTask& b) {
                     return queued_before(o, a, b);
                   });
  std::vector<TaskId> ids;
  for (const auto& e : q) ids.push_back(e.id);
  return ids;
}

}  // namespace

TEST_CASE("chop threshold floors the trigger fraction") {
  CHECK(chop_threshold(4, 0.9) == 3);      // floor(3.6)
  CHECK(chop_threshold(1000, 0.9) == 900);
  CHECK(chop_threshold(10, 0.75) == 7);    // floor(7.5)
  CHECK(chop_threshold(10, 1.0) == 10);    // never fires early
  CHECK(chop_threshold(3, 0.1) == 1);      // clamped up to one completion
  CHECK_THROWS_AS(chop_threshold(-1, 0.9), Error);
}

TEST_CASE("fifo orders by enqueue sequence") {
  auto got = order(DispatchPolicy::Ordering::Fifo,
                   {qt("b", 2), qt("a", 1), qt("c", 3)});
  std::vector<TaskId> want{"a", "b", "c"};
  CHECK(got == want);
}

TEST_CASE("priority orders descending with fifo ties") {
  auto got = order(DispatchPolicy::Ordering::Priority,
                   {qt("low", 1, 0), qt("hi", 2, 9), qt("low2", 3, 0)});
  std::vector<TaskId> want{"hi", "low", "low2"};
  CHECK(got == want);
}

TEST_CASE("longest-first and shortest-first use the runtime view") {
  std::vector<QueuedTask> q{qt("short", 1, 0, 10.0), qt("long", 2, 0, 500.0),
                            qt("mid", 3, 0, 60.0)};
  auto lf = order(DispatchPolicy::Ordering::LongestFirst, q);
  std::vector<TaskId> wl{"long", "mid", "short"};
  CHECK(lf == wl);
  auto sf = order(DispatchPolicy::Ordering::ShortestFirst, q);
  std::vector<TaskId> ws{"short", "mid", "long"};
  CHECK(sf == ws);
}

TEST_CASE("tasks without a runtime view sort after estimated ones") {
  auto got = order(DispatchPolicy::Ordering::ShortestFirst,
                   {qt("blind", 1), qt("slow", 2, 0, 900.0), qt("blind2", 3),
                    qt("fast", 4, 0, 1.0)});
  std::vector<TaskId> want{"fast", "slow", "blind", "blind2"};
  CHECK(got == want);
}

TEST_CASE("rank_workers prefers resident input bytes then low node ids") {
  std::vector<std::pair<DataId, std::int64_t>> inputs{
      {"big", 1000}, {"small", 10}};
  auto resident = [](NodeId n, const DataId& d) {
    if (n == 7) return d == "big";
    if (n == 3) return d == "small";
    if (n == 5) return true;
    return false;
  };
  auto ranked = rank_workers(inputs, {1, 3, 5, 7}, resident);
  std::vector<NodeId> want{5, 7, 3, 1};
  CHECK(ranked == want);

  // All equal: ascending node id.
  auto flat = rank_workers({}, {9, 2, 4}, [](NodeId, const DataId&) { return false; });
  std::vector<NodeId> wantflat{2, 4, 9};
  CHECK(flat == wantflat);
}

TEST_CASE("steal victim is the first neighbor with a backlog") {
  auto backlog = [](NodeId n) -> std::size_t { return n == 4 || n == 6 ? 2 : 0; };
  auto v = pick_steal_victim({1, 4, 6}, backlog);
  REQUIRE(v.has_value());
  CHECK(*v == 4);
  CHECK_FALSE(pick_steal_victim({1, 2}, backlog).has_value());
  CHECK_FALSE(pick_steal_victim({}, backlog).has_value());
}

TEST_CASE("dispatch policy validation catches contradictions") {
  DispatchPolicy p;
  p.stealing = true;  // pull mode
  CHECK_THROWS_AS(p.validate(), Error);
  p.stealing = false;
  p.scheduler_count = 4;  // centralized wants exactly one
  CHECK_THROWS_AS(p.validate(), Error);
  p.architecture = DispatchPolicy::Architecture::Hierarchical;
  p.validate();
  CHECK(p.hops() == 2);
  p.migration = true;  // without chopping
  CHECK_THROWS_AS(p.validate(), Error);
  p.chop = ChopPolicy{0.9, 32};
  p.validate();
  p.chop->trigger_fraction = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}
