#include <filesystem>

#include "doctest.h"
#include "mtc/workload_io.hpp"
#include "mtc/workloads.hpp"

using namespace mtc;

TEST_CASE("sweep generates independent tasks around shared input") {
  RngStream rng(1, "w");
  auto g = gen_sweep(10, Distribution::constant(60), 1000, 50, 10, rng);
  CHECK(g.task_count() == 10);
  // One common input, ten unique inputs, ten outputs.
  CHECK(g.data_count() == 21);
  CHECK(g.data("d-common").kind == DataKind::common_input);
  const auto& t = g.task("t3");
  CHECK(t.runtime_s == 60);
  REQUIRE(t.inputs.size() == 2);
  CHECK(g.data(t.outputs[0]).kind == DataKind::output);
  g.validate_structure();

  // No common input when its size is zero.
  RngStream rng2(1, "w");
  auto g2 = gen_sweep(5, Distribution::constant(1), 0, 0, 10, rng2);
  CHECK(g2.data_count() == 5);
  CHECK(g2.task("t0").inputs.empty());
}

TEST_CASE("all-pairs crosses every row with every column") {
  RngStream rng(1, "w");
  auto g = gen_all_pairs(3, 4, Distribution::constant(30), 1000, 10, rng);
  CHECK(g.task_count() == 3 * 4 + 1);
  CHECK(g.task("gather").inputs.size() == 12);
  CHECK(g.task("gather").combinable);
  CHECK(g.task("c2x3").inputs.size() == 2);
  g.validate_structure();
}

TEST_CASE("pipeline tags each column as a group chain") {
  RngStream rng(1, "w");
  auto g = gen_pipeline(3, 4, Distribution::constant(10), 100, 1000, 10, rng);
  CHECK(g.task_count() == 12);
  CHECK(g.group_ids().size() == 4);
  auto chain = g.group_chain("col2");
  std::vector<TaskId> want{"s0c2", "s1c2", "s2c2"};
  CHECK(chain == want);
  g.validate_structure();
}

TEST_CASE("scatter-gather fans out and collects") {
  RngStream rng(1, "w");
  auto g = gen_scatter_gather(5, Distribution::constant(10), 1000, 10, rng);
  CHECK(g.task_count() == 6);
  CHECK(g.task("gather").inputs.size() == 5);
  g.validate_structure();
}

TEST_CASE("iterative workloads start with one unfolded iteration") {
  RngStream rng(1, "w");
  auto built = gen_iterative(5, 4, Distribution::constant(10), 100, 100, rng);
  auto& g = built.graph;
  CHECK(g.task_count() == 5);  // 4 body tasks plus the gather
  CHECK(g.templates().count("iter") == 1);
  CHECK(g.templates().at("iter").limit == 4);
  auto hook = g.iteration_hook("iter#1:g");
  REQUIRE(hook.has_value());
  CHECK(hook->iteration == 1);
  g.validate_structure();
}

TEST_CASE("branch and bound builds the full tree") {
  RngStream rng(1, "w");
  auto small = gen_branch_and_bound(4, 2, 0.5, Distribution::constant(1), 10, rng);
  CHECK(small.graph.task_count() == 31);
  CHECK(small.hooks.prune_probability == 0.5);
  // Every non-root task with siblings carries a prune hook.
  CHECK(small.hooks.prune_siblings.size() == 30);
  auto sibs = small.hooks.prune_siblings.at("n1");
  std::vector<TaskId> want{"n2"};
  CHECK(sibs == want);
  small.graph.validate_structure();

  RngStream rng2(1, "w");
  auto big = gen_branch_and_bound(8, 2, 0, Distribution::constant(1), 10, rng2);
  CHECK(big.graph.task_count() == 511);
  CHECK(big.hooks.prune_siblings.empty());
}

TEST_CASE("mosaic serializes corrections between parallel phases") {
  RngStream rng(1, "w");
  auto g = gen_mosaic(20, Distribution::constant(10), 1'000'000, rng);
  // 20 projections, 20 fits, 2 corrections, 20 rectifications, 1 co-add.
  CHECK(g.task_count() == 63);
  CHECK(g.task("corr1").inputs.size() > 1);
  CHECK(g.task("coadd").inputs.size() == 20);
  g.validate_structure();
  auto order = g.topo_order();
  CHECK(order.size() == 63);
}

TEST_CASE("generated runtimes are deterministic per seed") {
  WorkloadSpec spec;
  spec.archetype = "sweep";
  spec.tasks = 20;
  spec.runtime = Distribution::lognormal(100, 50);
  spec.runtime_set = true;
  auto a = build_workload(spec, 7);
  auto b = build_workload(spec, 7);
  auto c = build_workload(spec, 8);
  bool all_same = true, any_diff = false;
  for (const auto& id : a.graph.task_ids()) {
    if (a.graph.task(id).runtime_s != b.graph.task(id).runtime_s) all_same = false;
    if (a.graph.task(id).runtime_s != c.graph.task(id).runtime_s) any_diff = true;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("named presets fill their knobs but explicit keys win") {
  WorkloadSpec spec;
  spec.archetype = "dock-like";
  auto built = build_workload(spec, 1);
  CHECK(built.graph.task_count() == 1000);
  CHECK(built.graph.data("d-common").size_bytes == 10'000'000);

  spec.tasks = 50;
  spec.common_bytes = 777;
  spec.common_bytes_set = true;
  auto tuned = build_workload(spec, 1);
  CHECK(tuned.graph.task_count() == 50);
  CHECK(tuned.graph.data("d-common").size_bytes == 777);
}

TEST_CASE("workload spec validation rejects nonsense") {
  WorkloadSpec spec;
  spec.archetype = "does-not-exist";
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.archetype = "file";
  CHECK_THROWS_AS(spec.validate(), Error);  // no path given
  spec.archetype = "sweep";
  spec.tasks = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("workload files round-trip byte for byte") {
  RngStream rng(1, "w");
  auto g = gen_pipeline(2, 3, Distribution::uniform(5, 15), 100, 1000, 10, rng);
  std::string text = serialize_workload(g);
  TaskGraph back = parse_workload(text);
  CHECK(serialize_workload(back) == text);
  CHECK(back.task_count() == g.task_count());
  CHECK(back.data_count() == g.data_count());
  CHECK(back.task("s0c1").group == "col1");

  auto path = std::filesystem::temp_directory_path() / "mtcsim-wl-test.txt";
  save_workload(g, path.string());
  TaskGraph loaded = load_workload(path.string());
  CHECK(serialize_workload(loaded) == text);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_workload(path.string()), Error);
}

TEST_CASE("workload parsing reports the offending line") {
  CHECK_THROWS_AS(parse_workload("bogus x runtime=1"), Error);
  CHECK_THROWS_AS(parse_workload("task t1"), Error);  // missing runtime
  CHECK_THROWS_AS(parse_workload("data d size=1"), Error);  // missing kind
  CHECK_THROWS_AS(parse_workload("data d size=1 kind=weird"), Error);
  try {
    parse_workload("# fine\ntask t1 oops", "wl.txt");
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_parse);
    CHECK(std::string(e.what()).find("wl.txt:2") != std::string::npos);
  }
  // Comments and blank lines are ignored; order is free.
  auto g = parse_workload(
      "task t1 runtime=5 in=d1\n"
      "\n"
      "# a comment\n"
      "data d1 size=10 kind=unique-input\n");
  CHECK(g.task_count() == 1);
}
