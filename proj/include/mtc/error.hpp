#pragma once

#include <stdexcept>
#include <string>

namespace mtc {

// Stable error codes. Each maps to one failure mode callers can test for;
// the CLI maps a subset onto process exit codes.
enum class Errc {
  duplicate_id,
  unknown_data_ref,
  unknown_task,
  unknown_template,
  template_closed,
  cycle_detected,
  invalid_state,
  time_travel,
  invalid_parameters,
  request_exceeds_machine,
  object_larger_than_cache,
  local_storage_full,
  group_not_chain,
  unknown_data,
  corrupt_checkpoint,
  malformed_trace,
  incompatible_workloads,
  config_parse,
  validation,
  invariant_violation,
  io,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg);
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& msg);

}  // namespace mtc
