#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kldobs {

/// Failure categories raised by the library. Each maps onto one of the
/// documented error contracts of the public operations.
enum class ErrorKind {
  kDimension,
  kNonFinite,
  kNotSymmetric,
  kNotPsd,
  kDomain,
  kInstability,
  kDegenerateImpact,
  kIllConditioned,
  kStructure,
  kMarginalStability,
  kLemmaInapplicable,
  kNumericalSingularity,
  kDegenerateNoise,
  kDetectabilityAssumption,
  kRelaxationInfeasible,
  kInitializer,
  kDivergence,
  kNumericalFailure,
  kInvalidModel,
  kConfig,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace kldobs
