#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtc/sim_kernel.hpp"
#include "mtc/task_graph.hpp"

namespace mtc {

// Run-time behaviour a generated graph carries beyond its structure.
struct WorkloadHooks {
  // Search workloads: when a task completes while any listed sibling subtree
  // is still live, one Bernoulli(prune_probability) draw decides whether the
  // live siblings are pruned.
  std::map<TaskId, std::vector<TaskId>> prune_siblings;
  double prune_probability = 0;
};

struct BuiltWorkload {
  TaskGraph graph;
  WorkloadHooks hooks;
};

// Independent tasks sharing one common input, each with an optional private
// input and a small output.
TaskGraph gen_sweep(std::int64_t count, const Distribution& runtime,
                    std::int64_t common_bytes, std::int64_t unique_bytes,
                    std::int64_t output_bytes, RngStream& rng, bool with_estimates = false);

// Cross product: m row items times k column items, one compare task per pair,
// plus a combinable gather over all pair results.
TaskGraph gen_all_pairs(std::int64_t m, std::int64_t k, const Distribution& runtime,
                        std::int64_t item_bytes, std::int64_t pair_result_bytes,
                        RngStream& rng);

// `width` parallel columns of `stages` sequential tasks; each column is
// tagged as a pipeline group and hands an intermediate down the chain.
TaskGraph gen_pipeline(int stages, int width, const Distribution& runtime,
                       std::int64_t input_bytes, std::int64_t intermediate_bytes,
                       std::int64_t output_bytes, RngStream& rng);

// One shared input fanned out to `count` workers whose results one gather
// collects.
TaskGraph gen_scatter_gather(std::int64_t count, const Distribution& runtime,
                             std::int64_t common_bytes, std::int64_t result_bytes,
                             RngStream& rng);

// Iterative refinement: body_size tasks per iteration (body_size - 1 parallel
// plus one gather that carries the result forward), unfolding until the
// converge_at-th iteration completes.
BuiltWorkload gen_iterative(int body_size, int converge_at, const Distribution& runtime,
                            std::int64_t carry_bytes, std::int64_t partial_bytes,
                            RngStream& rng);

// Full search tree: levels 0..depth, `branching` children per interior node.
// Sibling-prune hooks fire with prune_probability at run time.
BuiltWorkload gen_branch_and_bound(int depth, int branching, double prune_probability,
                                   const Distribution& runtime, std::int64_t node_bytes,
                                   RngStream& rng);

// Sky-mosaic shape: n parallel reprojections, n parallel background fits
// feeding a serialized correction chain of max(1, n/10) tasks, n parallel
// rectifications, one final co-add.
TaskGraph gen_mosaic(std::int64_t n, const Distribution& runtime,
                     std::int64_t image_bytes, RngStream& rng);

// Config-facing description of a workload; build_workload turns it into a
// graph. Presets fill the knobs of the matching archetype; explicitly set
// keys win over preset defaults (the *_set flags track that).
struct WorkloadSpec {
  std::string archetype = "sweep";
  std::string file;  // archetype "file": load this workload file

  std::int64_t tasks = 100;
  Distribution runtime = Distribution::constant(60);
  bool runtime_set = false;
  std::int64_t common_bytes = 0;
  bool common_bytes_set = false;
  std::int64_t unique_bytes = 0;
  bool unique_bytes_set = false;
  std::int64_t output_bytes = 0;
  std::int64_t intermediate_bytes = 1 << 20;
  bool with_estimates = false;

  std::int64_t m = 8, k = 8;          // all-pairs
  int stages = 3, width = 16;         // pipeline
  int depth = 4, branching = 2;       // branch and bound
  double prune_probability = 0;
  int body_size = 5, converge_at = 4; // iterative

  void validate() const;
};

BuiltWorkload build_workload(const WorkloadSpec& spec, std::uint64_t seed);

}  // namespace mtc
