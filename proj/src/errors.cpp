#include "sigamp/errors.hpp"

namespace sigamp {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::duplicate_signal: return "duplicate_signal";
        case ErrorCode::unknown_signal: return "unknown_signal";
        case ErrorCode::node_mismatch: return "node_mismatch";
        case ErrorCode::no_baseline: return "no_baseline";
        case ErrorCode::degenerate_baseline: return "degenerate_baseline";
        case ErrorCode::unscorable: return "unscorable";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::unsorted_input: return "unsorted_input";
        case ErrorCode::infeasible_config: return "infeasible_config";
        case ErrorCode::malformed_input: return "malformed_input";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace sigamp
