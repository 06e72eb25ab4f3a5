#pragma once

#include <stdexcept>
#include <string>

namespace mlspeak {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MLSPEAK_DEFINE_ERROR(Name, Base) \
  class Name : public Base {             \
   public:                               \
    using Base::Base;                    \
  }

// turn model
MLSPEAK_DEFINE_ERROR(AllZeroLikelihood, Error);
MLSPEAK_DEFINE_ERROR(ZeroProbabilityEvent, Error);
MLSPEAK_DEFINE_ERROR(InvalidArgument, Error);

// trait network
MLSPEAK_DEFINE_ERROR(DegenerateTrait, Error);
MLSPEAK_DEFINE_ERROR(NonFiniteLoss, Error);

// synthetic data
MLSPEAK_DEFINE_ERROR(LengthExceeded, Error);
MLSPEAK_DEFINE_ERROR(IndivisiblePool, Error);

// baselines
MLSPEAK_DEFINE_ERROR(SingularDesign, Error);

// statistics
MLSPEAK_DEFINE_ERROR(AllZeroDiffs, Error);

// experiments
MLSPEAK_DEFINE_ERROR(InsufficientTeams, Error);
MLSPEAK_DEFINE_ERROR(WrongTeamCount, Error);

// dataset io
MLSPEAK_DEFINE_ERROR(DatasetError, Error);
MLSPEAK_DEFINE_ERROR(SchemaError, DatasetError);
MLSPEAK_DEFINE_ERROR(ReferentialError, DatasetError);
MLSPEAK_DEFINE_ERROR(GapError, DatasetError);
MLSPEAK_DEFINE_ERROR(AbsentSpeakerError, DatasetError);
MLSPEAK_DEFINE_ERROR(IoError, Error);

#undef MLSPEAK_DEFINE_ERROR

}  // namespace mlspeak
