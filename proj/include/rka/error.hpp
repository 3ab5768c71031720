#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rka {

enum class ErrorCode {
    InvalidArgument,
    ShapeMismatch,
    RankDeficient,
    ZeroRow,
    CouplingViolated,
    DomainError,
    ParseError,
    IoError,
};

constexpr std::string_view error_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::CouplingViolated: return "CouplingViolated";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable error kind. The C API maps `code()`
/// onto its status enum.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace rka
