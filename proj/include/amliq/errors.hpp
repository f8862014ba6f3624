#pragma once

#include <stdexcept>
#include <string>

namespace amliq {

// Base for all library errors so callers can catch amliq::Error wholesale.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- parameter / grid validation ---
struct NonPositiveVolatility : Error { using Error::Error; };
struct CorrelationNotPSD : Error { using Error::Error; };
struct ZetaOutOfRange : Error { using Error::Error; };
struct NegativeKappa : Error { using Error::Error; };
struct NegativeLiquidity : Error { using Error::Error; };
struct GridTooSmall : Error { using Error::Error; };

// --- operators / solvers ---
struct IndexOutOfInterior : Error { using Error::Error; };
struct NegativeRadicand : Error { using Error::Error; };
struct SingularPivot : Error { using Error::Error; };
struct PointOutsideGrid : Error { using Error::Error; };
struct InstabilityDetected : Error { using Error::Error; };

// --- calibration ---
struct NonPositivePrice : Error { using Error::Error; };
struct NonPositiveSigma : Error { using Error::Error; };
struct InnovationCovSingular : Error { using Error::Error; };
struct DivergedFilter : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct NonPositiveInput : Error { using Error::Error; };

// --- data ingestion ---
struct MalformedRow : Error { using Error::Error; };
struct DuplicateDate : Error { using Error::Error; };
struct SeriesTooShort : Error { using Error::Error; };

} // namespace amliq
