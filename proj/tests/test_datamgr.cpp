#include <set>

#include "doctest.h"
#include "mtc/datamgr.hpp"

using namespace mtc;

TEST_CASE("directory tracks replicas and gfs residency") {
  LocationDirectory dir(DataPolicy::Directory::CentralMap, 1, 0.25);
  dir.add_replica("d", 4);
  dir.add_replica("d", 2);
  dir.add_replica("d", 4);  // duplicate is fine
  auto look = dir.locate("d");
  std::vector<NodeId> want{2, 4};
  CHECK(look.replicas == want);
  CHECK_FALSE(look.on_gfs);
  CHECK(look.charge_s == 0.25);

  dir.set_gfs_resident("d", true);
  CHECK(dir.locate("d").on_gfs);
  dir.remove_replica("d", 2);
  dir.remove_replica("d", 99);  // unknown node is a no-op
  dir.drop_node(4);
  auto only_gfs = dir.locate("d");
  CHECK(only_gfs.replicas.empty());
  CHECK(only_gfs.on_gfs);

  dir.set_gfs_resident("d", false);
  CHECK_THROWS_AS(dir.locate("d"), Error);
  CHECK_THROWS_AS(dir.locate("never-seen"), Error);
}

TEST_CASE("hashed directories spread ownership over servers") {
  LocationDirectory central(DataPolicy::Directory::CentralMap, 1, 0);
  CHECK(central.server_for("anything") == 0);

  LocationDirectory hashed(DataPolicy::Directory::Hashed, 8, 0);
  std::set<int> seen;
  for (int i = 0; i < 200; ++i) {
    int s = hashed.server_for("obj" + std::to_string(i));
    CHECK(s >= 0);
    CHECK(s < 8);
    seen.insert(s);
  }
  CHECK(seen.size() == 8);  // 200 draws over 8 buckets hit them all
  // Ownership is stable.
  CHECK(hashed.server_for("obj0") == hashed.server_for("obj0"));
  CHECK_THROWS_AS(LocationDirectory(DataPolicy::Directory::CentralMap, 3, 0), Error);
}

TEST_CASE("broadcast from a node fans out in levels") {
  auto plan = plan_broadcast(0, {1, 2, 3, 4, 5, 6, 7, 8}, 2);
  CHECK(plan.depth == 3);
  CHECK(plan.gfs_reads == 0);
  CHECK(plan.steps.size() == 8);
  // Every destination appears exactly once and each sender stays within fanout.
  std::set<NodeId> dsts;
  std::map<std::int64_t, int> out_degree;
  for (const auto& s : plan.steps) {
    CHECK(dsts.insert(s.dst).second);
    ++out_degree[s.src];
    CHECK(out_degree[s.src] <= 2);
  }
  CHECK(dsts.size() == 8);
  CHECK(out_degree[0] == 2);
}

TEST_CASE("broadcast from the gfs reads the object exactly once") {
  auto plan = plan_broadcast(kGfs, {1, 2, 3, 4, 5, 6, 7, 8}, 2);
  CHECK(plan.gfs_reads == 1);
  CHECK(plan.depth == 4);  // one extra hop for the single gfs read
  CHECK(plan.steps[0].src == kGfs);
}

TEST_CASE("broadcast skips the source and duplicate destinations") {
  auto plan = plan_broadcast(3, {3, 5, 5, 7}, 4);
  CHECK(plan.steps.size() == 2);
  CHECK(plan.depth == 1);
  for (const auto& s : plan.steps) CHECK(s.src == 3);
}

TEST_CASE("fanout one degenerates to a chain") {
  auto plan = plan_broadcast(0, {1, 2, 3}, 1);
  CHECK(plan.depth == 3);
  REQUIRE(plan.steps.size() == 3);
  CHECK(plan.steps[0].src == 0);
  CHECK(plan.steps[1].src == 1);
  CHECK(plan.steps[2].src == 2);
}

TEST_CASE("combinable reduction builds a bounded-degree tree") {
  auto plan = plan_reduction({1, 2, 3, 4, 5, 6, 7, 8}, 0, 2, true);
  CHECK(plan.depth == 3);
  CHECK(plan.sink_in_degree == 2);
  CHECK(plan.steps.size() == 7);
  // Interior combines run on the first member of each pair.
  CHECK(plan.steps[0].dst == 1);
  std::vector<NodeId> sink_senders = plan.steps.back().sources;
  std::vector<NodeId> want{1, 5};
  CHECK(sink_senders == want);
  CHECK(plan.steps.back().dst == 0);
}

TEST_CASE("non-combinable reduction is a star onto the sink") {
  auto plan = plan_reduction({1, 2, 3, 4, 5, 6, 7, 8}, 0, 2, false);
  CHECK(plan.depth == 1);
  CHECK(plan.sink_in_degree == 8);
  REQUIRE(plan.steps.size() == 1);
  CHECK(plan.steps[0].sources.size() == 8);
  CHECK(plan.steps[0].dst == 0);
}

TEST_CASE("reduction ignores the sink's own partial") {
  auto plan = plan_reduction({0, 1, 2}, 0, 4, true);
  REQUIRE(plan.steps.size() == 1);
  std::vector<NodeId> want{1, 2};
  CHECK(plan.steps[0].sources == want);

  auto none = plan_reduction({0}, 0, 4, true);
  CHECK(none.steps.empty());
  CHECK(none.depth == 0);
}

TEST_CASE("data policy validation catches contradictions") {
  DataPolicy p;
  p.validate();
  p.directory_server_count = 4;  // central map wants one
  CHECK_THROWS_AS(p.validate(), Error);
  p.directory = DataPolicy::Directory::Hashed;
  p.validate();
  p.output = DataPolicy::Output::Collective;
  p.flush_period_s = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}
