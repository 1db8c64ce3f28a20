#include "mtc/error.hpp"

namespace mtc {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::unknown_data_ref: return "unknown-data-ref";
    case Errc::unknown_task: return "unknown-task";
    case Errc::unknown_template: return "unknown-template";
    case Errc::template_closed: return "template-closed";
    case Errc::cycle_detected: return "cycle-detected";
    case Errc::invalid_state: return "invalid-state";
    case Errc::time_travel: return "time-travel";
    case Errc::invalid_parameters: return "invalid-parameters";
    case Errc::request_exceeds_machine: return "request-exceeds-machine";
    case Errc::object_larger_than_cache: return "object-larger-than-cache";
    case Errc::local_storage_full: return "local-storage-full";
    case Errc::group_not_chain: return "group-not-chain";
    case Errc::unknown_data: return "unknown-data";
    case Errc::corrupt_checkpoint: return "corrupt-checkpoint";
    case Errc::malformed_trace: return "malformed-trace";
    case Errc::incompatible_workloads: return "incompatible-workloads";
    case Errc::config_parse: return "config-parse";
    case Errc::validation: return "validation";
    case Errc::invariant_violation: return "invariant-violation";
    case Errc::io: return "io";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& msg)
    : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace mtc
