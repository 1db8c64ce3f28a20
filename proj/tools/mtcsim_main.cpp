#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mtc/experiment.hpp"
#include "mtc/workload_io.hpp"

namespace {

int exit_code_for(mtc::Errc code) {
  switch (code) {
    case mtc::Errc::config_parse:
      return 2;
    case mtc::Errc::validation:
      return 3;
    case mtc::Errc::invariant_violation:
      return 4;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for many-task campaigns on large machines"};
  app.require_subcommand(1);

  std::string run_config;
  std::string recover_path;
  std::int64_t recover_nodes = 0;
  CLI::App* run_cmd = app.add_subcommand("run", "Run every seed of an experiment config");
  run_cmd->add_option("config", run_config, "experiment config file")->required();
  CLI::Option* rec_opt =
      run_cmd->add_option("--recover", recover_path, "resume from this checkpoint file");
  run_cmd->add_option("--nodes", recover_nodes, "allocation size for a recovery run")
      ->needs(rec_opt);

  std::vector<std::string> cmp_configs;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "Run several configs over one workload and tabulate the deltas");
  cmp_cmd->add_option("configs", cmp_configs, "two or more config files")
      ->required()
      ->expected(2, -1);

  std::string val_config;
  CLI::App* val_cmd =
      app.add_subcommand("validate", "Check a config and its workload without running");
  val_cmd->add_option("config", val_config, "experiment config file")->required();

  mtc::WorkloadSpec gspec;
  std::string gen_out;
  std::string gen_runtime;
  std::uint64_t gen_seed = 1;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a workload file");
  gen_cmd
      ->add_option("archetype", gspec.archetype,
                   "sweep|all-pairs|pipeline|scatter-gather|iterative|branch-and-bound|mosaic")
      ->required();
  gen_cmd->add_option("-o,--output", gen_out, "workload file to write")->required();
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--tasks", gspec.tasks, "task count (sweep)");
  gen_cmd->add_option("--runtime", gen_runtime,
                      "runtime distribution, e.g. lognormal(713,560)");
  CLI::Option* common_opt =
      gen_cmd->add_option("--common-bytes", gspec.common_bytes, "shared input size");
  CLI::Option* unique_opt =
      gen_cmd->add_option("--unique-bytes", gspec.unique_bytes, "per-task input size");
  gen_cmd->add_option("--output-bytes", gspec.output_bytes, "per-task output size");
  gen_cmd->add_option("--intermediate-bytes", gspec.intermediate_bytes,
                      "stage-to-stage object size");
  gen_cmd->add_flag("--with-estimates", gspec.with_estimates,
                    "attach runtime estimates for ordering policies");
  gen_cmd->add_option("--m", gspec.m, "item count per axis (all-pairs)");
  gen_cmd->add_option("--k", gspec.k, "item count per axis (all-pairs)");
  gen_cmd->add_option("--stages", gspec.stages, "pipeline depth");
  gen_cmd->add_option("--width", gspec.width, "pipeline width");
  gen_cmd->add_option("--depth", gspec.depth, "search tree depth");
  gen_cmd->add_option("--branching", gspec.branching, "search tree branching factor");
  gen_cmd->add_option("--body-size", gspec.body_size, "tasks per iteration");
  gen_cmd->add_option("--converge-at", gspec.converge_at,
                      "iteration at which the loop closes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      mtc::ExperimentConfig cfg = mtc::ExperimentConfig::load(run_config);
      mtc::ExperimentOutcome out;
      if (recover_path.empty()) {
        out = mtc::run_experiment(cfg);
      } else {
        if (recover_nodes <= 0)
          mtc::raise(mtc::Errc::validation, "a recovery run needs --nodes");
        out = mtc::recover_experiment(cfg, recover_path, recover_nodes);
      }
      for (const mtc::SeedOutcome& so : out.seeds) {
        std::cout << "seed " << so.seed
                  << ": makespan=" << mtc::format_double(so.result.report.makespan_s)
                  << " utilization="
                  << mtc::format_double(so.result.report.utilization)
                  << " tasks-done=" << so.result.report.tasks_done
                  << (so.result.completed ? "" : " (stopped at a checkpoint)") << "\n";
      }
      std::cout << "wrote " << out.csv_path << "\n";
    } else if (cmp_cmd->parsed()) {
      std::vector<mtc::ExperimentConfig> cfgs;
      for (const std::string& p : cmp_configs)
        cfgs.push_back(mtc::ExperimentConfig::load(p));
      mtc::CompareOutcome out = mtc::compare_experiments(cfgs);
      std::cout << out.table;
    } else if (val_cmd->parsed()) {
      mtc::validate_experiment(mtc::ExperimentConfig::load(val_config));
      std::cout << "ok\n";
    } else if (gen_cmd->parsed()) {
      if (!gen_runtime.empty()) {
        gspec.runtime = mtc::Distribution::parse(gen_runtime);
        gspec.runtime_set = true;
      }
      gspec.common_bytes_set = common_opt->count() > 0;
      gspec.unique_bytes_set = unique_opt->count() > 0;
      mtc::BuiltWorkload wl = mtc::build_workload(gspec, gen_seed);
      mtc::save_workload(wl.graph, gen_out);
      std::cout << "wrote " << gen_out << " (" << wl.graph.task_count() << " tasks, "
                << wl.graph.data_count() << " objects)\n";
    }
  } catch (const mtc::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err.code());
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
