#pragma once

#include <stdexcept>
#include <string>

namespace msiph {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define MSIPH_ERROR(Name)                     \
    struct Name : Error {                     \
        using Error::Error;                   \
    }

MSIPH_ERROR(NonConvergence);
MSIPH_ERROR(DomainExceeded);
MSIPH_ERROR(InfeasiblePlan);
MSIPH_ERROR(InterleaveConflict);
MSIPH_ERROR(CalibrationFailure);
MSIPH_ERROR(DimensionMismatch);
MSIPH_ERROR(UncalibratedDevice);
MSIPH_ERROR(GainSpreadExceeded);
MSIPH_ERROR(PlanMissing);
MSIPH_ERROR(ZeroDiagonal);
MSIPH_ERROR(RankDeficient);
MSIPH_ERROR(ConfigError);
MSIPH_ERROR(IoError);

#undef MSIPH_ERROR

}  // namespace msiph
