#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sybilwatch {

enum class Errc {
  duplicate_account,
  missing_account,
  invalid_account_id,
  self_loop,
  duplicate_edge,
  time_before_creation,
  invalid_config,
  calibration_failed,
  out_of_order_event,
  unknown_account,
  unmatched_response,
  unknown_feature_name,
  malformed_event,
  degenerate_training,
  unlabeled_account,
  missing_origin_event,
  parse_error,
  io_error,
  unsupported_checkpoint,
  checkpoint_mismatch,
};

std::string_view to_string(Errc code) noexcept;

// All library failures are reported through this exception; code() lets
// callers (CLI exit codes, HTTP status mapping, tests) branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sybilwatch
