#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twomode {

enum class ErrorCode {
    InvalidArgument,
    NonPositiveOverlap,
    NoSelfTrapping,
    SingularAmplitudeTerm,
    StepUnderflow,
    EnergyOutOfRange,
    PeriodNotConverged,
    BadInitialRegion,
    BracketFailed,
    WindowTooShort,
    DegenerateOccupancy,
    RootNotBracketed,
    CutoffAboveNyquist,
    CFLViolation,
    DegenerateProfile,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells callers which
/// contract was broken.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveOverlap: return "NonPositiveOverlap";
    case ErrorCode::NoSelfTrapping: return "NoSelfTrapping";
    case ErrorCode::SingularAmplitudeTerm: return "SingularAmplitudeTerm";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::EnergyOutOfRange: return "EnergyOutOfRange";
    case ErrorCode::PeriodNotConverged: return "PeriodNotConverged";
    case ErrorCode::BadInitialRegion: return "BadInitialRegion";
    case ErrorCode::BracketFailed: return "BracketFailed";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::DegenerateOccupancy: return "DegenerateOccupancy";
    case ErrorCode::RootNotBracketed: return "RootNotBracketed";
    case ErrorCode::CutoffAboveNyquist: return "CutoffAboveNyquist";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::DegenerateProfile: return "DegenerateProfile";
    }
    return "Unknown";
}

} // namespace twomode
