#pragma once

#include <stdexcept>
#include <string>

namespace liftnet {

enum class ErrorCode {
  Domain,
  InvalidArgument,
  UnbalancedMeasures,
  NotOnBoundary,
  DimensionMismatch,
  NotSemiRegular,
  UnrelatedGrids,
  NoJunctionGeometry,
  DivergenceViolation,
  NumericalFailure,
  Config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace liftnet
