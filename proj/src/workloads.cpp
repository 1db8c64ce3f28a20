#include "mtc/workloads.hpp"

#include <algorithm>

#include "mtc/workload_io.hpp"

namespace mtc {

namespace {

std::string num(std::int64_t v) { return std::to_string(v); }

double draw(const Distribution& d, RngStream& rng) { return d.sample(rng); }

}  // namespace

TaskGraph gen_sweep(std::int64_t count, const Distribution& runtime,
                    std::int64_t common_bytes, std::int64_t unique_bytes,
                    std::int64_t output_bytes, RngStream& rng, bool with_estimates) {
  if (count < 1) raise(Errc::invalid_parameters, "sweep needs at least 1 task");
  TaskGraph g;
  bool common = common_bytes > 0;
  if (common) g.add_data({"d-common", common_bytes, DataKind::common_input});
  for (std::int64_t i = 0; i < count; ++i) {
    TaskSpec t;
    t.id = "t" + num(i);
    if (common) t.inputs.push_back("d-common");
    if (unique_bytes > 0) {
      g.add_data({"u" + num(i), unique_bytes, DataKind::unique_input});
      t.inputs.push_back("u" + num(i));
    }
    g.add_data({"o" + num(i), output_bytes, DataKind::output});
    t.outputs.push_back("o" + num(i));
    t.runtime_s = draw(runtime, rng);
    if (with_estimates) t.estimate_s = t.runtime_s;
    g.add_task(std::move(t));
  }
  return g;
}

TaskGraph gen_all_pairs(std::int64_t m, std::int64_t k, const Distribution& runtime,
                        std::int64_t item_bytes, std::int64_t pair_result_bytes,
                        RngStream& rng) {
  if (m < 1 || k < 1) raise(Errc::invalid_parameters, "all-pairs needs m, k >= 1");
  TaskGraph g;
  for (std::int64_t i = 0; i < m; ++i)
    g.add_data({"a" + num(i), item_bytes, DataKind::unique_input});
  for (std::int64_t j = 0; j < k; ++j)
    g.add_data({"b" + num(j), item_bytes, DataKind::unique_input});
  TaskSpec gather;
  gather.id = "gather";
  gather.combinable = true;
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < k; ++j) {
      std::string pair = num(i) + "x" + num(j);
      g.add_data({"p" + pair, pair_result_bytes, DataKind::intermediate});
      TaskSpec t;
      t.id = "c" + pair;
      t.inputs = {"a" + num(i), "b" + num(j)};
      t.outputs = {"p" + pair};
      t.runtime_s = draw(runtime, rng);
      g.add_task(std::move(t));
      gather.inputs.push_back("p" + pair);
    }
  g.add_data({"result", pair_result_bytes, DataKind::output});
  gather.outputs = {"result"};
  gather.runtime_s = draw(runtime, rng);
  g.add_task(std::move(gather));
  return g;
}

TaskGraph gen_pipeline(int stages, int width, const Distribution& runtime,
                       std::int64_t input_bytes, std::int64_t intermediate_bytes,
                       std::int64_t output_bytes, RngStream& rng) {
  if (stages < 1 || width < 1)
    raise(Errc::invalid_parameters, "pipeline needs stages, width >= 1");
  TaskGraph g;
  for (int c = 0; c < width; ++c) {
    g.add_data({"in" + num(c), input_bytes, DataKind::unique_input});
    for (int s = 0; s + 1 < stages; ++s)
      g.add_data({"m" + num(s) + "c" + num(c), intermediate_bytes, DataKind::intermediate});
    g.add_data({"out" + num(c), output_bytes, DataKind::output});
    for (int s = 0; s < stages; ++s) {
      TaskSpec t;
      t.id = "s" + num(s) + "c" + num(c);
      t.group = "col" + num(c);
      t.inputs = {s == 0 ? "in" + num(c) : "m" + num(s - 1) + "c" + num(c)};
      t.outputs = {s + 1 == stages ? "out" + num(c) : "m" + num(s) + "c" + num(c)};
      t.runtime_s = draw(runtime, rng);
      g.add_task(std::move(t));
    }
  }
  return g;
}

TaskGraph gen_scatter_gather(std::int64_t count, const Distribution& runtime,
                             std::int64_t common_bytes, std::int64_t result_bytes,
                             RngStream& rng) {
  if (count < 1) raise(Errc::invalid_parameters, "scatter-gather needs at least 1 task");
  TaskGraph g;
  g.add_data({"d-common", common_bytes, DataKind::common_input});
  TaskSpec gather;
  gather.id = "gather";
  gather.combinable = true;
  for (std::int64_t i = 0; i < count; ++i) {
    g.add_data({"r" + num(i), result_bytes, DataKind::intermediate});
    TaskSpec t;
    t.id = "w" + num(i);
    t.inputs = {"d-common"};
    t.outputs = {"r" + num(i)};
    t.runtime_s = draw(runtime, rng);
    g.add_task(std::move(t));
    gather.inputs.push_back("r" + num(i));
  }
  g.add_data({"result", result_bytes, DataKind::output});
  gather.outputs = {"result"};
  gather.runtime_s = draw(runtime, rng);
  g.add_task(std::move(gather));
  return g;
}

BuiltWorkload gen_iterative(int body_size, int converge_at, const Distribution& runtime,
                            std::int64_t carry_bytes, std::int64_t partial_bytes,
                            RngStream& rng) {
  if (body_size < 1) raise(Errc::invalid_parameters, "iterative body must be >= 1 task");
  if (converge_at < 1) raise(Errc::invalid_parameters, "convergence iteration must be >= 1");
  BuiltWorkload out;
  out.graph.add_data({"seed", carry_bytes, DataKind::unique_input});
  IterationTemplate tpl;
  tpl.id = "iter";
  tpl.data.push_back({"carry", carry_bytes});
  IterationTemplate::TaskProto gather;
  gather.local_id = "g";
  gather.outputs = {"carry"};
  gather.runtime_s = draw(runtime, rng);
  if (body_size == 1) {
    gather.inputs = {"^carry"};
  } else {
    for (int i = 0; i + 1 < body_size; ++i) {
      tpl.data.push_back({"p" + num(i), partial_bytes});
      IterationTemplate::TaskProto body;
      body.local_id = "b" + num(i);
      body.inputs = {"^carry"};
      body.outputs = {"p" + num(i)};
      body.runtime_s = draw(runtime, rng);
      tpl.tasks.push_back(std::move(body));
      gather.inputs.push_back("p" + num(i));
    }
  }
  tpl.tasks.push_back(std::move(gather));
  tpl.gather_local_id = "g";
  tpl.carry_out = "carry";
  tpl.initial_carry = "seed";
  tpl.limit = converge_at;
  out.graph.add_template(std::move(tpl));
  return out;
}

BuiltWorkload gen_branch_and_bound(int depth, int branching, double prune_probability,
                                   const Distribution& runtime, std::int64_t node_bytes,
                                   RngStream& rng) {
  if (depth < 0) raise(Errc::invalid_parameters, "depth must be >= 0");
  if (branching < 1) raise(Errc::invalid_parameters, "branching must be >= 1");
  if (prune_probability < 0 || prune_probability > 1)
    raise(Errc::invalid_parameters, "prune probability must be in [0, 1]");
  std::int64_t total = 0, level_count = 1;
  for (int l = 0; l <= depth; ++l) {
    total += level_count;
    level_count *= branching;
  }
  BuiltWorkload out;
  out.hooks.prune_probability = prune_probability;
  out.graph.add_data({"root-in", node_bytes, DataKind::unique_input});
  for (std::int64_t kk = 0; kk < total; ++kk)
    out.graph.add_data({"e" + num(kk), node_bytes, DataKind::intermediate});
  for (std::int64_t kk = 0; kk < total; ++kk) {
    TaskSpec t;
    t.id = "n" + num(kk);
    t.inputs = {kk == 0 ? "root-in" : "e" + num((kk - 1) / branching)};
    t.outputs = {"e" + num(kk)};
    t.runtime_s = draw(runtime, rng);
    out.graph.add_task(std::move(t));
  }
  if (prune_probability > 0)
    for (std::int64_t kk = 1; kk < total; ++kk) {
      std::int64_t parent = (kk - 1) / branching;
      std::vector<TaskId> sibs;
      for (int c = 0; c < branching; ++c) {
        std::int64_t sib = parent * branching + 1 + c;
        if (sib != kk && sib < total) sibs.push_back("n" + num(sib));
      }
      if (!sibs.empty()) out.hooks.prune_siblings["n" + num(kk)] = std::move(sibs);
    }
  return out;
}

TaskGraph gen_mosaic(std::int64_t n, const Distribution& runtime,
                     std::int64_t image_bytes, RngStream& rng) {
  if (n < 1) raise(Errc::invalid_parameters, "mosaic needs at least 1 image");
  TaskGraph g;
  std::int64_t fit_bytes = std::max<std::int64_t>(1, image_bytes / 100);
  std::int64_t chain = std::max<std::int64_t>(1, n / 10);
  for (std::int64_t i = 0; i < n; ++i) {
    g.add_data({"raw" + num(i), image_bytes, DataKind::unique_input});
    g.add_data({"pim" + num(i), image_bytes, DataKind::intermediate});
    TaskSpec t;
    t.id = "proj" + num(i);
    t.inputs = {"raw" + num(i)};
    t.outputs = {"pim" + num(i)};
    t.runtime_s = draw(runtime, rng);
    g.add_task(std::move(t));
  }
  for (std::int64_t i = 0; i < n; ++i) {
    g.add_data({"fit" + num(i), fit_bytes, DataKind::intermediate});
    TaskSpec t;
    t.id = "bg" + num(i);
    t.inputs = {"pim" + num(i)};
    t.outputs = {"fit" + num(i)};
    t.runtime_s = draw(runtime, rng);
    g.add_task(std::move(t));
  }
  for (std::int64_t j = 0; j < chain; ++j) {
    g.add_data({"c" + num(j), fit_bytes, DataKind::intermediate});
    TaskSpec t;
    t.id = "corr" + num(j);
    if (j > 0) t.inputs.push_back("c" + num(j - 1));
    std::int64_t lo = j * n / chain, hi = (j + 1) * n / chain;
    for (std::int64_t i = lo; i < hi; ++i) t.inputs.push_back("fit" + num(i));
    t.outputs = {"c" + num(j)};
    t.runtime_s = draw(runtime, rng);
    g.add_task(std::move(t));
  }
  for (std::int64_t i = 0; i < n; ++i) {
    g.add_data({"rim" + num(i), image_bytes, DataKind::intermediate});
    TaskSpec t;
    t.id = "rect" + num(i);
    t.inputs = {"pim" + num(i), "c" + num(chain - 1)};
    t.outputs = {"rim" + num(i)};
    t.runtime_s = draw(runtime, rng);
    g.add_task(std::move(t));
  }
  g.add_data({"mosaic", image_bytes, DataKind::output});
  TaskSpec coadd;
  coadd.id = "coadd";
  coadd.combinable = true;
  for (std::int64_t i = 0; i < n; ++i) coadd.inputs.push_back("rim" + num(i));
  coadd.outputs = {"mosaic"};
  coadd.runtime_s = draw(runtime, rng);
  g.add_task(std::move(coadd));
  return g;
}

void WorkloadSpec::validate() const {
  static const char* known[] = {"sweep",        "all-pairs",      "pipeline",
                                "scatter-gather", "iterative",    "branch-and-bound",
                                "mosaic",       "file",           "dock-like",
                                "blast-like",   "oops-like",      "deem-like",
                                "montage-like", "social-learning"};
  bool ok = false;
  for (const char* k : known)
    if (archetype == k) ok = true;
  if (!ok) raise(Errc::invalid_parameters, "unknown archetype '" + archetype + "'");
  if (archetype == "file" && file.empty())
    raise(Errc::invalid_parameters, "file archetype needs a workload file path");
  runtime.validate();
  if (tasks < 1) raise(Errc::invalid_parameters, "tasks must be >= 1");
  if (common_bytes < 0 || unique_bytes < 0 || output_bytes < 0 || intermediate_bytes < 0)
    raise(Errc::invalid_parameters, "data sizes must be >= 0");
  if (m < 1 || k < 1) raise(Errc::invalid_parameters, "m and k must be >= 1");
  if (stages < 1 || width < 1) raise(Errc::invalid_parameters, "stages and width must be >= 1");
  if (depth < 0 || branching < 1)
    raise(Errc::invalid_parameters, "depth must be >= 0 and branching >= 1");
  if (prune_probability < 0 || prune_probability > 1)
    raise(Errc::invalid_parameters, "prune probability must be in [0, 1]");
  if (body_size < 1 || converge_at < 1)
    raise(Errc::invalid_parameters, "body size and convergence iteration must be >= 1");
}

BuiltWorkload build_workload(const WorkloadSpec& spec, std::uint64_t seed) {
  spec.validate();
  RngStream rng(seed, "workload");
  BuiltWorkload out;

  auto sweep_preset = [&](std::int64_t def_tasks, Distribution def_rt, std::int64_t common,
                          std::int64_t unique, std::int64_t output) {
    std::int64_t n = spec.tasks != 100 ? spec.tasks : def_tasks;
    Distribution rt = spec.runtime_set ? spec.runtime : def_rt;
    std::int64_t cb = spec.common_bytes_set ? spec.common_bytes : common;
    std::int64_t ub = spec.unique_bytes_set ? spec.unique_bytes : unique;
    out.graph = gen_sweep(n, rt, cb, ub, output, rng, spec.with_estimates);
  };

  if (spec.archetype == "sweep") {
    out.graph = gen_sweep(spec.tasks, spec.runtime, spec.common_bytes, spec.unique_bytes,
                          spec.output_bytes, rng, spec.with_estimates);
  } else if (spec.archetype == "all-pairs") {
    out.graph = gen_all_pairs(spec.m, spec.k, spec.runtime, spec.unique_bytes,
                              spec.intermediate_bytes, rng);
  } else if (spec.archetype == "pipeline") {
    out.graph = gen_pipeline(spec.stages, spec.width, spec.runtime, spec.unique_bytes,
                             spec.intermediate_bytes, spec.output_bytes, rng);
  } else if (spec.archetype == "scatter-gather") {
    out.graph = gen_scatter_gather(spec.tasks, spec.runtime, spec.common_bytes,
                                   spec.intermediate_bytes, rng);
  } else if (spec.archetype == "iterative") {
    out = gen_iterative(spec.body_size, spec.converge_at, spec.runtime,
                        spec.intermediate_bytes, spec.intermediate_bytes, rng);
  } else if (spec.archetype == "branch-and-bound") {
    out = gen_branch_and_bound(spec.depth, spec.branching, spec.prune_probability,
                               spec.runtime, spec.intermediate_bytes, rng);
  } else if (spec.archetype == "mosaic") {
    out.graph = gen_mosaic(spec.tasks, spec.runtime, spec.intermediate_bytes, rng);
  } else if (spec.archetype == "file") {
    out.graph = load_workload(spec.file);
  } else if (spec.archetype == "dock-like") {
    // Screening: heavy-tailed minutes-long tasks, a shared target grid of
    // about 10 MB and roughly 10 KB per-molecule inputs and outputs.
    sweep_preset(1000, Distribution::lognormal(713, 560), 10'000'000, 10'000, 10'000);
  } else if (spec.archetype == "blast-like") {
    // Sequence search: a ~1 GB shared database, tiny per-query inputs.
    sweep_preset(1000, Distribution::lognormal(60, 20), 1'000'000'000, 1'000, 10'000);
  } else if (spec.archetype == "oops-like") {
    // Fold prediction: a 27 MB shared dataset, multi-hour tasks.
    sweep_preset(1000, Distribution::lognormal(5400, 2700), 27'000'000, 10'000, 100'000);
  } else if (spec.archetype == "deem-like") {
    // Structure enumeration: minutes-to-hours with a very heavy tail; pairs
    // with a runtime-cap failure rule so stuck tasks are killed, not rerun.
    sweep_preset(1000, Distribution::lognormal(1800, 1800), 1'000'000, 10'000, 100'000);
  } else if (spec.archetype == "social-learning") {
    std::int64_t mm = spec.m != 8 ? spec.m : 104;
    std::int64_t kk = spec.k != 8 ? spec.k : 104;
    Distribution rt = spec.runtime_set ? spec.runtime : Distribution::lognormal(30, 10);
    out.graph = gen_all_pairs(mm, kk, rt, 100'000, 1'000, rng);
  } else if (spec.archetype == "montage-like") {
    std::int64_t n = spec.tasks != 100 ? spec.tasks : 1254;
    Distribution rt = spec.runtime_set ? spec.runtime : Distribution::lognormal(20, 10);
    out.graph = gen_mosaic(n, rt, 2'000'000, rng);
  }
  return out;
}

}  // namespace mtc
