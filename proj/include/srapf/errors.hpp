#pragma once

#include <stdexcept>
#include <string>

namespace srapf {

// Base of every error raised by the toolkit. Callers that do not care about
// the category can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SRAPF_DEFINE_ERROR(Name)           \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

SRAPF_DEFINE_ERROR(ArgumentError);
SRAPF_DEFINE_ERROR(ShapeError);
SRAPF_DEFINE_ERROR(FormatError);
SRAPF_DEFINE_ERROR(StructuralError);
SRAPF_DEFINE_ERROR(NumericError);
SRAPF_DEFINE_ERROR(IngestionError);
SRAPF_DEFINE_ERROR(InsufficientDataError);
SRAPF_DEFINE_ERROR(ConfigurationError);
SRAPF_DEFINE_ERROR(TrainingError);
SRAPF_DEFINE_ERROR(EvaluationError);
SRAPF_DEFINE_ERROR(AggregationError);
SRAPF_DEFINE_ERROR(IoError);

#undef SRAPF_DEFINE_ERROR

}  // namespace srapf
