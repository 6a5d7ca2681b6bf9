#pragma once

#include <stdexcept>
#include <string>

namespace geoflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define GEOFLOW_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                       \
   public:                                                          \
    using Error::Error;                                             \
    const char* kind() const noexcept override { return #Name; }   \
  };

GEOFLOW_DEFINE_ERROR(DegenerateDecomposition)
GEOFLOW_DEFINE_ERROR(LogUndefined)
GEOFLOW_DEFINE_ERROR(InvalidGroup)
GEOFLOW_DEFINE_ERROR(BallTooLarge)
GEOFLOW_DEFINE_ERROR(SectionTooLarge)
GEOFLOW_DEFINE_ERROR(NotOnSection)
GEOFLOW_DEFINE_ERROR(CoordsOutOfRange)
GEOFLOW_DEFINE_ERROR(NoIntersection)
GEOFLOW_DEFINE_ERROR(MultipleIntersections)
GEOFLOW_DEFINE_ERROR(TooFarApart)
GEOFLOW_DEFINE_ERROR(DenominatorNearZero)
GEOFLOW_DEFINE_ERROR(RectangleTooLarge)
GEOFLOW_DEFINE_ERROR(NotInRectangle)
GEOFLOW_DEFINE_ERROR(ChartMismatch)
GEOFLOW_DEFINE_ERROR(HolonomyDegenerate)
GEOFLOW_DEFINE_ERROR(HypothesisViolated)
GEOFLOW_DEFINE_ERROR(CoverFailure)
GEOFLOW_DEFINE_ERROR(OffsetExhausted)
GEOFLOW_DEFINE_ERROR(ReturnNotFound)
GEOFLOW_DEFINE_ERROR(ScheduleViolation)
GEOFLOW_DEFINE_ERROR(EmptySubdivision)
GEOFLOW_DEFINE_ERROR(SampleTooSparse)
GEOFLOW_DEFINE_ERROR(ShiftExhausted)
GEOFLOW_DEFINE_ERROR(BudgetExceeded)
GEOFLOW_DEFINE_ERROR(ConfigError)
GEOFLOW_DEFINE_ERROR(WriteFailure)

#undef GEOFLOW_DEFINE_ERROR

}  // namespace geoflow
