#pragma once

#include <stdexcept>
#include <string>

namespace agvsched {

// Machine-readable failure categories. The CLI prints the code verbatim.
enum class ErrorCode {
  disconnected_world,
  overlapping_roles,
  out_of_bounds,
  infeasible_quantity,
  unknown_task_id,
  unknown_agv_id,
  missing_arrival,
  unreachable_node,
  no_feasible_insertion,
  infeasible_instance,
  nonpositive_temperature,
  invalid_argument,
  malformed_channel_set,
  wrong_direction,
  config_invalid,
  io_error,
  budget_exhausted,
  broken_chain,
  invariant_violation,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace agvsched
