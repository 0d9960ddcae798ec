#pragma once

#include <stdexcept>
#include <string>

namespace freeconv {

enum class ErrorCode {
  Domain = 1,
  Pole,
  Inversion,
  Convergence,
  Boundary,
  Family,
  Size,
  Config,
  Singular,
  InvalidMeasure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define FREECONV_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

// z inside the support of a measure, or an argument outside an operation's domain.
FREECONV_DEFINE_ERROR(DomainError, Domain)
// |G| below the pole cutoff: the reciprocal transform blows up.
FREECONV_DEFINE_ERROR(PoleError, Pole)
FREECONV_DEFINE_ERROR(InversionError, Inversion)
FREECONV_DEFINE_ERROR(ConvergenceError, Convergence)
FREECONV_DEFINE_ERROR(BoundaryError, Boundary)
// Closed-form R-transform requested for a measure that has none.
FREECONV_DEFINE_ERROR(FamilyError, Family)
FREECONV_DEFINE_ERROR(SizeError, Size)
FREECONV_DEFINE_ERROR(ConfigError, Config)
FREECONV_DEFINE_ERROR(SingularError, Singular)
FREECONV_DEFINE_ERROR(MeasureError, InvalidMeasure)

#undef FREECONV_DEFINE_ERROR

}  // namespace freeconv
