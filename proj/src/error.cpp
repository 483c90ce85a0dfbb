#include "corvid/error.hpp"

namespace corvid {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnknownColorCode: return "UnknownColorCode";
        case ErrorKind::InvalidLength: return "InvalidLength";
        case ErrorKind::ZeroOrMultipleAluminium: return "ZeroOrMultipleAluminium";
        case ErrorKind::InvalidAbsentCount: return "InvalidAbsentCount";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::MissingClass: return "MissingClass";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::DuplicateBirdId: return "DuplicateBirdId";
        case ErrorKind::DuplicateCombination: return "DuplicateCombination";
        case ErrorKind::NestingViolation: return "NestingViolation";
        case ErrorKind::EmptyRoster: return "EmptyRoster";
        case ErrorKind::OverlapError: return "OverlapError";
        case ErrorKind::IdentityMismatch: return "IdentityMismatch";
        case ErrorKind::TrueIdNotInRoster: return "TrueIdNotInRoster";
    }
    return "Unknown";
}

bool is_input_error(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnknownColorCode:
        case ErrorKind::InvalidLength:
        case ErrorKind::ZeroOrMultipleAluminium:
        case ErrorKind::InvalidAbsentCount:
        case ErrorKind::SchemaError:
        case ErrorKind::MissingClass:
        case ErrorKind::IoError:
            return true;
        default:
            return false;
    }
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace corvid
