#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtc/config.hpp"
#include "mtc/engine.hpp"

namespace mtc {

struct SeedOutcome {
  std::uint64_t seed = 0;
  RunResult result;
  std::string trace_path;  // empty when tracing is off
};

struct ExperimentOutcome {
  std::string name;
  std::vector<SeedOutcome> seeds;
  std::string csv_path;
};

// Runs every seed of the experiment, writing one trace file per seed and a
// summary CSV into the run section's output directory.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

// Resumes a checkpointed run on a fixed allocation. The checkpoint pins the
// seed, so this always produces exactly one outcome row.
ExperimentOutcome recover_experiment(const ExperimentConfig& cfg,
                                     const std::string& checkpoint_path,
                                     std::int64_t nodes);

struct CompareRow {
  std::string name;
  double mean_makespan_s = 0;
  double mean_utilization = 0;
  std::int64_t total_bytes_moved = 0;
  double makespan_delta_pct = 0;  // vs the first config
};

struct CompareOutcome {
  std::vector<CompareRow> rows;
  std::string table;  // rendered, one line per config
};

// Runs several configs over the same workload and seed list and tabulates the
// deltas against the first config. Throws incompatible_workloads when the
// workload or seed list differs between configs.
CompareOutcome compare_experiments(const std::vector<ExperimentConfig>& cfgs);

// Static checks beyond ExperimentConfig::validate: the workload builds, the
// graph is sound, every task's working set fits node-local storage, and the
// policy combination can actually place every task.
void validate_experiment(const ExperimentConfig& cfg);

}  // namespace mtc
