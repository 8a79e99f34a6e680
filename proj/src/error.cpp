#include "sybilwatch/error.hpp"

namespace sybilwatch {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::duplicate_account: return "DuplicateAccount";
    case Errc::missing_account: return "MissingAccount";
    case Errc::invalid_account_id: return "InvalidAccountId";
    case Errc::self_loop: return "SelfLoop";
    case Errc::duplicate_edge: return "DuplicateEdge";
    case Errc::time_before_creation: return "TimeBeforeCreation";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::calibration_failed: return "CalibrationFailed";
    case Errc::out_of_order_event: return "OutOfOrderEvent";
    case Errc::unknown_account: return "UnknownAccount";
    case Errc::unmatched_response: return "UnmatchedResponse";
    case Errc::unknown_feature_name: return "UnknownFeatureName";
    case Errc::malformed_event: return "MalformedEvent";
    case Errc::degenerate_training: return "DegenerateTraining";
    case Errc::unlabeled_account: return "UnlabeledAccount";
    case Errc::missing_origin_event: return "MissingOriginEvent";
    case Errc::parse_error: return "ParseError";
    case Errc::io_error: return "IoError";
    case Errc::unsupported_checkpoint: return "UnsupportedCheckpoint";
    case Errc::checkpoint_mismatch: return "CheckpointMismatch";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace sybilwatch
