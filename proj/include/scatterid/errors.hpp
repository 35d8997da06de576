#pragma once

#include <stdexcept>
#include <string>

namespace scatterid {

// Every failure raised by the library derives from Error so callers can catch
// the whole family at pipeline boundaries and still dispatch on the kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SCATTERID_DEFINE_ERROR(Name)                 \
  class Name : public Error {                        \
   public:                                           \
    explicit Name(const std::string& what) : Error(what) {} \
  }

SCATTERID_DEFINE_ERROR(DomainError);
SCATTERID_DEFINE_ERROR(RangeError);
SCATTERID_DEFINE_ERROR(IdentityError);
SCATTERID_DEFINE_ERROR(ConfigError);
SCATTERID_DEFINE_ERROR(ParameterError);
SCATTERID_DEFINE_ERROR(ShapeError);
SCATTERID_DEFINE_ERROR(SegmentationError);
SCATTERID_DEFINE_ERROR(MaskError);
SCATTERID_DEFINE_ERROR(DegenerateSignatureError);
SCATTERID_DEFINE_ERROR(InsufficientDataError);
SCATTERID_DEFINE_ERROR(TrainingDataError);
SCATTERID_DEFINE_ERROR(TrainingDivergenceError);
SCATTERID_DEFINE_ERROR(MetricsUndefinedError);

#undef SCATTERID_DEFINE_ERROR

// Centered vector too short to define a direction; `side` says which argument.
class DegenerateCenteringError : public Error {
 public:
  enum class Side { first, second };
  DegenerateCenteringError(Side side, const std::string& what) : Error(what), side_(side) {}
  Side side() const { return side_; }

 private:
  Side side_;
};

}  // namespace scatterid
