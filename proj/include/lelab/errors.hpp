#pragma once

#include <stdexcept>
#include <string>

namespace lelab {

/// Base of every error raised by the library. `kind()` is a stable tag used in
/// reports and CSV status columns.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define LELAB_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

// geometry
LELAB_DEFINE_ERROR(InvalidDomain)
LELAB_DEFINE_ERROR(NotStarShaped)
LELAB_DEFINE_ERROR(MeshFailure)
// numerics
LELAB_DEFINE_ERROR(NotConverged)
LELAB_DEFINE_ERROR(NotSPD)
LELAB_DEFINE_ERROR(DimensionMismatch)
// fem
LELAB_DEFINE_ERROR(DegenerateTriangle)
LELAB_DEFINE_ERROR(Overflow)
// solver
LELAB_DEFINE_ERROR(NoBracket)
LELAB_DEFINE_ERROR(LineSearchFailure)
LELAB_DEFINE_ERROR(CollapsedToZero)
LELAB_DEFINE_ERROR(SweepEmpty)
// diagnostics
LELAB_DEFINE_ERROR(PoleTooCloseToBoundary)
LELAB_DEFINE_ERROR(InsufficientResolution)
// cli
LELAB_DEFINE_ERROR(ConfigError)

#undef LELAB_DEFINE_ERROR

}  // namespace lelab
