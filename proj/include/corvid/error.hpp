#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corvid {

enum class ErrorKind {
    // input / schema problems (CLI exit code 2)
    UnknownColorCode,
    InvalidLength,
    ZeroOrMultipleAluminium,
    InvalidAbsentCount,
    SchemaError,
    MissingClass,
    IoError,
    // domain invariant violations (CLI exit code 3)
    DuplicateBirdId,
    DuplicateCombination,
    NestingViolation,
    EmptyRoster,
    OverlapError,
    IdentityMismatch,
    TrueIdNotInRoster,
};

std::string_view to_string(ErrorKind kind);

// True for errors caused by malformed input rather than violated domain rules.
bool is_input_error(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);

    ErrorKind kind() const noexcept { return kind_; }

    // 2 for input/schema errors, 3 for domain-invariant violations.
    int exit_code() const noexcept { return is_input_error(kind_) ? 2 : 3; }

private:
    ErrorKind kind_;
};

}  // namespace corvid
