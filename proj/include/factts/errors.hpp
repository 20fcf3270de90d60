#pragma once

#include <stdexcept>
#include <string>

namespace factts {

// Base class for all library errors. CLI maps subtypes to exit codes:
// configuration/usage errors -> 1, numerical failures -> 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidFactorIndex : Error { using Error::Error; };
struct InvalidPlacement : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct InvalidTopology : Error { using Error::Error; };
struct InvalidState : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct DegenerateDimension : Error { using Error::Error; };
struct DegenerateVariance : Error { using Error::Error; };
struct InsufficientVoicedFrames : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct ReportError : Error { using Error::Error; };

}  // namespace factts
