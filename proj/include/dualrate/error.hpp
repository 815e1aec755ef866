#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dualrate {

enum class ErrorCategory {
  validation,
  io,
  convergence,
  calibration,
  sequencing,
  incomplete_window,
  no_antecedent,
};

std::string_view category_name(ErrorCategory category);

/// Library error. The category is machine-readable and maps onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Raised when the cascade iteration fails to settle.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual, int iterations)
      : Error(ErrorCategory::convergence, message), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

inline std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::io: return "io";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::calibration: return "insufficient-calibration-data";
    case ErrorCategory::sequencing: return "sequencing";
    case ErrorCategory::incomplete_window: return "incomplete-coefficient-window";
    case ErrorCategory::no_antecedent: return "no-antecedent-sample";
  }
  return "unknown";
}

}  // namespace dualrate
