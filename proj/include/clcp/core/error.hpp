#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clcp {

enum class ErrorCode {
    invalid_argument,
    shape_mismatch,
    degenerate_sample,
    non_finite,
    index_out_of_range,
    io,
    format,
    config,
    missing_data,
    divergence,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::shape_mismatch: return "shape_mismatch";
        case ErrorCode::degenerate_sample: return "degenerate_sample";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::index_out_of_range: return "index_out_of_range";
        case ErrorCode::io: return "io";
        case ErrorCode::format: return "format";
        case ErrorCode::config: return "config";
        case ErrorCode::missing_data: return "missing_data";
        case ErrorCode::divergence: return "divergence";
    }
    return "unknown";
}

/// Structured error carried by every fallible operation in the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        throw Error(code, message);
    }
}

}  // namespace clcp
