#include "qkd/protocol/messages.hpp"

#include <cmath>

namespace qkd::protocol {

std::string_view to_string(Role role) { return role == Role::alice ? "alice" : "bob"; }

std::string_view to_string(MessageType type) {
  switch (type) {
    case MessageType::hello: return "HELLO";
    case MessageType::session_params: return "SESSION_PARAMS";
    case MessageType::detection_report: return "DETECTION_REPORT";
    case MessageType::match_mask: return "MATCH_MASK";
    case MessageType::sample_indices: return "SAMPLE_INDICES";
    case MessageType::sample_bits: return "SAMPLE_BITS";
    case MessageType::qber_result: return "QBER_RESULT";
    case MessageType::abort: return "ABORT";
    case MessageType::done: return "DONE";
  }
  return "UNKNOWN";
}

std::string_view to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::parameter_mismatch: return "parameter_mismatch";
    case AbortReason::protocol_violation: return "protocol_violation";
    case AbortReason::qber_exceeded: return "qber_exceeded";
    case AbortReason::inconclusive: return "inconclusive";
    case AbortReason::sync_failure: return "sync_failure";
  }
  return "unknown";
}

void SessionParams::validate() const {
  if (!(qber_abort_threshold > 0.0 && qber_abort_threshold < 0.5))
    throw ConfigError("protocol.qber_abort_threshold", "must be in (0, 0.5)");
  if (sample_fraction && !(*sample_fraction > 0.0 && *sample_fraction <= 1.0))
    throw ConfigError("protocol.sample_fraction", "must be in (0, 1] or \"all\"");
}

MessageType type_of(const Message& message) {
  static constexpr MessageType types[] = {
      MessageType::hello,          MessageType::session_params, MessageType::detection_report,
      MessageType::match_mask,     MessageType::sample_indices, MessageType::sample_bits,
      MessageType::qber_result,    MessageType::abort,          MessageType::done,
  };
  return types[message.index()];
}

}  // namespace qkd::protocol
