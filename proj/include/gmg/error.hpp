#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gmg {

// Values double as process exit codes for the command-line tool.
enum class ErrorCode : int {
  kUsage = 2,
  kFormat = 3,
  kDimension = 4,
  kMissingArtifact = 5,
  kNumerical = 6,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const { return code_; }
  int exit_status() const { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

}  // namespace gmg
