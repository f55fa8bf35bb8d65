#pragma once

#include <stdexcept>
#include <string>

namespace pam {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PAM_ERROR_TYPE(NAME)     \
    class NAME : public Error {  \
    public:                      \
        using Error::Error;      \
    };

// numerics
PAM_ERROR_TYPE(InvalidConfig)
PAM_ERROR_TYPE(StepUnderflow)
PAM_ERROR_TYPE(MaxStepsExceeded)
PAM_ERROR_TYPE(NonFiniteState)
PAM_ERROR_TYPE(OutOfRange)
PAM_ERROR_TYPE(GridTooCoarse)

// potentials / reference pairs
PAM_ERROR_TYPE(NonPositiveRadius)
PAM_ERROR_TYPE(UnsupportedEll)
PAM_ERROR_TYPE(NonPositiveArgument)
PAM_ERROR_TYPE(NonPositiveEnergy)
PAM_ERROR_TYPE(InvalidWell)
PAM_ERROR_TYPE(InvalidPotential)

// solvers
PAM_ERROR_TYPE(NodeAtMatch)
PAM_ERROR_TYPE(MatchRadiusTooSmall)
PAM_ERROR_TYPE(TurningPointInSpan)
PAM_ERROR_TYPE(AmplitudeCollapse)
PAM_ERROR_TYPE(SingularShortRange)
PAM_ERROR_TYPE(TrialBoundaryViolation)

#undef PAM_ERROR_TYPE

} // namespace pam
