#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtc/datamgr.hpp"
#include "mtc/dispatch.hpp"
#include "mtc/platform.hpp"
#include "mtc/provisioner.hpp"
#include "mtc/resilience.hpp"
#include "mtc/workloads.hpp"

namespace mtc {

struct RunSection {
  std::vector<std::uint64_t> seeds{1};
  bool trace = true;
  std::string output_dir = "out";
  std::string name;  // label used in file names and the CSV; defaults to the file stem
};

// One experiment file: platform shape, policy knobs, workload and run plan.
// Sections: [platform], [policy], [workload], [run]. Lines are `key = value`;
// `#` starts a comment; the `failure` key may repeat. The MTCSIM_OUT_DIR
// environment variable overrides [run] output-dir.
struct ExperimentConfig {
  PlatformSpec platform;
  ProvisionPolicy provision;
  DispatchPolicy dispatch;
  DataPolicy data;
  ResilienceConfig resilience;
  WorkloadSpec workload;
  RunSection run;

  void validate() const;

  static ExperimentConfig parse(const std::string& text, const std::string& origin);
  static ExperimentConfig load(const std::string& path);
};

}  // namespace mtc
