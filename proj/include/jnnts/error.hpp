#pragma once

#include <stdexcept>
#include <string>

namespace jnnts {

/// Failure categories. Values double as process exit codes for the CLI.
enum class ErrorCode : int {
  kInput = 2,
  kConfiguration = 3,
  kNumerical = 4,
  kNonConvergence = 5,
  kDiagnostic = 6,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_input(const std::string& msg) { throw Error(ErrorCode::kInput, msg); }
[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCode::kConfiguration, msg); }
[[noreturn]] inline void throw_numerical(const std::string& msg) { throw Error(ErrorCode::kNumerical, msg); }
[[noreturn]] inline void throw_diagnostic(const std::string& msg) { throw Error(ErrorCode::kDiagnostic, msg); }

/// Sink for non-fatal warnings (diagonal zeroing, eigenvalue flooring, ...).
/// Defaults to stderr; tests may swap it out.
using WarningHandler = void (*)(const std::string&);
void set_warning_handler(WarningHandler handler) noexcept;
void warn(const std::string& message);

}  // namespace jnnts
