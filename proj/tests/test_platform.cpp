#include "doctest.h"
#include "mtc/platform.hpp"

using namespace mtc;

TEST_CASE("presets differ mainly in allocation quantum") {
  CHECK(PlatformSpec::preset("fine").block_granularity_nodes == 1);
  CHECK(PlatformSpec::preset("mid").block_granularity_nodes == 32);
  CHECK(PlatformSpec::preset("coarse").block_granularity_nodes == 64);
  for (const char* name : {"fine", "mid", "coarse"}) {
    auto p = PlatformSpec::preset(name);
    p.validate();
    CHECK(p.node_count % p.block_granularity_nodes == 0);
  }
  CHECK_THROWS_AS(PlatformSpec::preset("medium"), Error);
}

TEST_CASE("platform validation rejects inconsistent shapes") {
  PlatformSpec p;
  p.node_count = 100;
  p.block_granularity_nodes = 32;  // 100 is not a multiple of 32
  CHECK_THROWS_AS(p.validate(), Error);
  p.block_granularity_nodes = 25;
  p.validate();
  p.gfs_bandwidth_bytes_per_s = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("transfer time is latency plus bytes over the bandwidth share") {
  PlatformSpec p;
  p.gfs_bandwidth_bytes_per_s = 1e9;
  p.gfs_latency_s = 0.5;
  p.node_link_bandwidth_bytes_per_s = 2e9;
  p.node_link_latency_s = 0.001;

  CHECK(transfer_time(p, 1'000'000'000, Route::gfs_read, 1) == 1.5);
  // Four concurrent readers each see a quarter of the channel.
  CHECK(transfer_time(p, 1'000'000'000, Route::gfs_read, 4) == 4.5);
  // Load 0 means alone.
  CHECK(transfer_time(p, 1'000'000'000, Route::gfs_write, 0) ==
        transfer_time(p, 1'000'000'000, Route::gfs_write, 1));
  // Node links are unshared, so load does not matter.
  CHECK(transfer_time(p, 2'000'000'000, Route::node_to_node, 8) == 1.001);
  // The intermediate tier must be switched on before it can be used.
  CHECK_THROWS_AS(transfer_time(p, 1, Route::ifs_read, 1), Error);
  p.ifs_enabled = true;
  p.ifs_bandwidth_bytes_per_s = 4e9;
  CHECK(transfer_time(p, 4'000'000'000, Route::ifs_write, 2) == 2.0);
  CHECK_THROWS_AS(transfer_time(p, -1, Route::gfs_read, 1), Error);
}

TEST_CASE("cache evicts cold unpinned entries oldest first") {
  NodeCache c(100);
  CHECK(c.put("a", 40).empty());
  CHECK(c.put("b", 40).empty());
  auto evicted = c.put("c", 40);  // needs 20 more; a is coldest
  REQUIRE(evicted.size() == 1);
  CHECK(evicted[0] == "a");
  CHECK_FALSE(c.contains("a"));
  CHECK(c.resident_bytes() == 80);
}

TEST_CASE("get refreshes recency") {
  NodeCache c(100);
  c.put("a", 40);
  c.put("b", 40);
  CHECK(c.get("a"));  // a becomes hottest, b is now coldest
  auto evicted = c.put("c", 40);
  REQUIRE(evicted.size() == 1);
  CHECK(evicted[0] == "b");
  CHECK_FALSE(c.get("missing"));
}

TEST_CASE("one insert can evict several residents") {
  NodeCache c(100);
  c.put("a", 30);
  c.put("b", 30);
  c.put("c", 30);
  auto evicted = c.put("big", 90);
  std::vector<DataId> want{"a", "b", "c"};
  CHECK(evicted == want);
}

TEST_CASE("pinned objects are never evicted") {
  NodeCache c(100);
  c.put("keep", 60);
  c.pin("keep");
  c.put("cold", 30);
  auto evicted = c.put("new", 40);  // must skip the pinned entry
  REQUIRE(evicted.size() == 1);
  CHECK(evicted[0] == "cold");
  CHECK(c.contains("keep"));
  // With 60 pinned of 100, a 50-byte object cannot fit at all.
  CHECK_FALSE(c.can_fit(50));
  CHECK(c.can_fit(40));
  c.unpin("keep");
  CHECK(c.can_fit(50));
}

TEST_CASE("a cache full of pinned objects rejects inserts") {
  NodeCache c(100);
  c.put("p1", 50);
  c.put("p2", 50);
  c.pin("p1");
  c.pin("p2");
  try {
    c.put("x", 10);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::local_storage_full);
  }
}

TEST_CASE("objects larger than the whole cache are rejected") {
  NodeCache c(100);
  try {
    c.put("huge", 101);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::object_larger_than_cache);
  }
  CHECK(c.can_fit(100));
  CHECK_FALSE(c.can_fit(101));
}

TEST_CASE("re-putting an object refreshes instead of duplicating") {
  NodeCache c(100);
  c.put("a", 40);
  c.put("b", 40);
  CHECK(c.put("a", 40).empty());
  CHECK(c.resident_bytes() == 80);
  auto evicted = c.put("c", 40);  // b is coldest after the refresh
  REQUIRE(evicted.size() == 1);
  CHECK(evicted[0] == "b");
  CHECK_THROWS_AS(c.put("a", 99), Error);  // same id, different size
}

TEST_CASE("erase and clear release space") {
  NodeCache c(100);
  c.put("a", 40);
  c.put("b", 40);
  CHECK(c.erase("a"));
  CHECK_FALSE(c.erase("a"));
  CHECK(c.resident_bytes() == 40);
  c.clear();
  CHECK(c.resident_bytes() == 0);
  CHECK(c.resident_ids().empty());
}

TEST_CASE("resident ids come back sorted") {
  NodeCache c(100);
  c.put("zz", 10);
  c.put("aa", 10);
  c.put("mm", 10);
  std::vector<DataId> want{"aa", "mm", "zz"};
  CHECK(c.resident_ids() == want);
}
