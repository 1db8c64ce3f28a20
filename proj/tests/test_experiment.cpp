#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mtc/experiment.hpp"

using namespace mtc;
namespace fs = std::filesystem;

namespace {

ExperimentConfig sweep_cfg(const std::string& name, const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.platform.node_count = 2;
  cfg.provision.static_nodes = 2;
  cfg.workload.archetype = "sweep";
  cfg.workload.tasks = 4;
  cfg.workload.runtime = Distribution::constant(5);
  cfg.workload.runtime_set = true;
  cfg.run.name = name;
  cfg.run.output_dir = out_dir;
  cfg.run.seeds = {1, 2};
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("an experiment writes one trace per seed and a summary csv") {
  const std::string dir = "exp-out-basic";
  fs::remove_all(dir);
  ExperimentOutcome out = run_experiment(sweep_cfg("demo", dir));
  REQUIRE(out.seeds.size() == 2);
  CHECK(out.seeds[0].seed == 1);
  CHECK(out.seeds[1].seed == 2);
  for (const SeedOutcome& so : out.seeds) {
    CHECK(so.result.completed);
    CHECK(so.result.report.tasks_done == 4);
    REQUIRE(fs::exists(so.trace_path));
    CHECK(fs::file_size(so.trace_path) > 0);
  }
  std::vector<std::string> rows = lines_of(slurp(out.csv_path));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rfind("config,", 0) == 0);
  CHECK(rows[1].rfind("demo,sweep,1,", 0) == 0);
  CHECK(rows[2].rfind("demo,sweep,2,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("tracing can be turned off") {
  const std::string dir = "exp-out-notrace";
  fs::remove_all(dir);
  ExperimentConfig cfg = sweep_cfg("quiet", dir);
  cfg.run.trace = false;
  ExperimentOutcome out = run_experiment(cfg);
  for (const SeedOutcome& so : out.seeds) CHECK(so.trace_path.empty());
  CHECK(fs::exists(out.csv_path));
  fs::remove_all(dir);
}

TEST_CASE("identical configs compare with zero makespan delta") {
  const std::string dir = "exp-out-compare";
  fs::remove_all(dir);
  ExperimentConfig a = sweep_cfg("a", dir);
  ExperimentConfig b = sweep_cfg("b", dir);
  CompareOutcome out = compare_experiments({a, b});
  REQUIRE(out.rows.size() == 2);
  CHECK(out.rows[0].name == "a");
  CHECK(out.rows[1].name == "b");
  CHECK(out.rows[0].makespan_delta_pct == 0.0);
  CHECK(out.rows[1].makespan_delta_pct == 0.0);
  CHECK(out.rows[0].mean_makespan_s == out.rows[1].mean_makespan_s);
  std::vector<std::string> table = lines_of(out.table);
  REQUIRE(table.size() == 3);
  CHECK(table[0].rfind("config\t", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("compare refuses configs that run different work") {
  const std::string dir = "exp-out-mismatch";
  fs::remove_all(dir);
  ExperimentConfig a = sweep_cfg("a", dir);

  ExperimentConfig other_tasks = sweep_cfg("b", dir);
  other_tasks.workload.tasks = 5;
  try {
    compare_experiments({a, other_tasks});
    FAIL("different workloads were accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::incompatible_workloads);
  }

  ExperimentConfig other_seeds = sweep_cfg("c", dir);
  other_seeds.run.seeds = {1, 3};
  try {
    compare_experiments({a, other_seeds});
    FAIL("different seed lists were accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::incompatible_workloads);
  }
  fs::remove_all(dir);
}

TEST_CASE("experiment validation catches impossible placements") {
  ExperimentConfig cfg = sweep_cfg("bad", "exp-out-unused");
  cfg.platform.local_storage_capacity_bytes = 1000000;
  cfg.workload.common_bytes = 2000000;
  cfg.workload.common_bytes_set = true;
  try {
    validate_experiment(cfg);
    FAIL("an oversized working set was accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation);
  }

  ExperimentConfig ifs_less = sweep_cfg("bad2", "exp-out-unused");
  ifs_less.data.intermediate = DataPolicy::Intermediate::Ifs;
  try {
    validate_experiment(ifs_less);
    FAIL("an ifs policy without an ifs was accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation);
  }
}

TEST_CASE("a preempted experiment recovers from its checkpoint file") {
  const std::string dir = "exp-out-recover";
  fs::remove_all(dir);
  const std::string ckpt = dir + "/run.ckpt";
  fs::create_directories(dir);

  ExperimentConfig cfg = sweep_cfg("camp", dir);
  cfg.workload.tasks = 8;
  cfg.workload.runtime = Distribution::constant(1);
  cfg.run.seeds = {9};
  FailureSpec f;
  f.kind = FailureSpec::Kind::Strategic;
  f.at_completed_fraction = 0.5;
  cfg.resilience.failures.push_back(f);
  cfg.resilience.checkpoint_path = ckpt;

  ExperimentOutcome first = run_experiment(cfg);
  REQUIRE(first.seeds.size() == 1);
  CHECK_FALSE(first.seeds[0].result.completed);
  CHECK(first.seeds[0].result.report.tasks_done == 4);
  REQUIRE(fs::exists(ckpt));

  ExperimentConfig cfg2 = cfg;
  cfg2.resilience.failures.clear();
  ExperimentOutcome second = recover_experiment(cfg2, ckpt, 2);
  REQUIRE(second.seeds.size() == 1);
  CHECK(second.seeds[0].seed == 9);
  CHECK(second.seeds[0].result.completed);
  CHECK(second.seeds[0].result.report.tasks_done == 4);
  CHECK(second.csv_path.find("-recovered.csv") != std::string::npos);
  CHECK(second.seeds[0].trace_path.find("-recovered.trace") != std::string::npos);
  CHECK(fs::exists(second.csv_path));
  CHECK(fs::exists(second.seeds[0].trace_path));
  fs::remove_all(dir);
}
