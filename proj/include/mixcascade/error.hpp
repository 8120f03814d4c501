#pragma once

#include <stdexcept>
#include <string>

namespace mixcascade {

enum class Errc {
  invalid_parameter,
  non_degenerate_condition_failed,
  domain_error,
  resource_limit,
  index_error,
  insufficient_pool,
  granularity_too_fine,
  unsupported_exponent,
  degenerate_fit,
  insufficient_data,
  insufficient_trials,
  config_error,
  io_error,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::non_degenerate_condition_failed: return "non-degenerate-condition-failed";
    case Errc::domain_error: return "domain-error";
    case Errc::resource_limit: return "resource-limit";
    case Errc::index_error: return "index-error";
    case Errc::insufficient_pool: return "insufficient-pool";
    case Errc::granularity_too_fine: return "granularity-too-fine";
    case Errc::unsupported_exponent: return "unsupported-exponent";
    case Errc::degenerate_fit: return "degenerate-fit";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::insufficient_trials: return "insufficient-trials";
    case Errc::config_error: return "config-error";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the toolkit carries one of the Errc kinds.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace mixcascade
