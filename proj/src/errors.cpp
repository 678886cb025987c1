#include "siltlab/errors.hpp"

namespace siltlab {

const char* err_name(Err e) {
  switch (e) {
    case Err::insufficient_coins: return "InsufficientCoins";
    case Err::path_too_short: return "PathTooShort";
    case Err::level_mismatch: return "LevelMismatch";
    case Err::length_mismatch: return "LengthMismatch";
    case Err::horizon_exceeded: return "HorizonExceeded";
    case Err::out_of_window: return "OutOfWindow";
    case Err::not_conservative: return "NotConservative";
    case Err::nonpositive_delta: return "NonpositiveDelta";
    case Err::nonpositive_time: return "NonpositiveTime";
    case Err::negative_argument: return "NegativeArgument";
    case Err::domain_error: return "DomainError";
    case Err::ladder_too_aggressive: return "LadderTooAggressive";
    case Err::proxy_too_short: return "ProxyTooShort";
    case Err::config_invalid: return "ConfigInvalid";
    case Err::resource_exhausted: return "ResourceExhausted";
    case Err::io_error: return "IoError";
  }
  return "UnknownError";
}

Error::Error(Err kind, const std::string& msg)
    : std::runtime_error(std::string(err_name(kind)) + ": " + msg), kind_(kind) {}

void fail(Err kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace siltlab
