#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigamp {

enum class ErrorCode {
    invalid_argument,
    duplicate_signal,
    unknown_signal,
    node_mismatch,
    no_baseline,
    degenerate_baseline,
    unscorable,
    not_found,
    unsorted_input,
    infeasible_config,
    malformed_input,
    io,
};

std::string_view to_string(ErrorCode code);

/// The single exception type thrown by the library. The code is stable and
/// is what the CLI prints as its machine-parsable diagnostic prefix.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace sigamp
