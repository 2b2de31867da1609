#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csi {

enum class ErrorCode {
    InvalidArgument,
    ParseError,
    ConfigInvalid,
    RosterTooSmall,
    PartitionInfeasible,
    LateEvent,
    NoSeries,
    DistillFailed,
    RelayAfterDeadline,
    QuestionNotFound,
    SessionNotFound,
    BadState,
    DeadlinePassed,
    NotJoined,
    MessageInvalid,
    DegenerateDistribution,
    NoVotes,
    DegeneratePairs,
    QuestionMismatch,
    TargetBelowChance,
    InvalidLog,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries a code so callers (REST layer,
// CLI, tests) can branch on the contract name rather than on message text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace csi
