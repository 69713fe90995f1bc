#pragma once

#include <stdexcept>
#include <string>

namespace san {

enum class ErrorCode {
  InvalidArgument,
  Config,
  Io,
  Dominance,
  Infeasible,
  Unidentifiable,
  NonConvergence,
};

/// Library-wide exception. `subject` names the offending variable,
/// constraint or config key when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string subject = {})
      : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

const char* error_code_name(ErrorCode code) noexcept;

/// Process exit status for the CLI: 2 config/input, 3 infeasible, 4 non-convergence.
int exit_status(ErrorCode code) noexcept;

}  // namespace san
