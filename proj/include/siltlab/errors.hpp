#pragma once

#include <stdexcept>
#include <string>

namespace siltlab {

enum class Err {
  insufficient_coins,
  path_too_short,
  level_mismatch,
  length_mismatch,
  horizon_exceeded,
  out_of_window,
  not_conservative,
  nonpositive_delta,
  nonpositive_time,
  negative_argument,
  domain_error,
  ladder_too_aggressive,
  proxy_too_short,
  config_invalid,
  resource_exhausted,
  io_error,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err kind, const std::string& msg);
  Err kind() const { return kind_; }

 private:
  Err kind_;
};

[[noreturn]] void fail(Err kind, const std::string& msg);

}  // namespace siltlab
