#pragma once

#include <stdexcept>
#include <string>

namespace repcount {

enum class ErrorCode {
    DegenerateSegment,
    SideMismatch,
    ModeMismatch,
    UnknownAction,
    EmptyDataset,
    MixedModes,
    NonFiniteLoss,
    BadLabel,
    BadRule,
    BadWindow,
    BadConfig,
    MissingPrediction,
    DuplicatePrediction,
    ZeroGroundTruth,
    StaleCorrection,
    ParseError,
    WrongLandmarkCount,
    NonMonotonicFrameIndex,
    DuplicateVideoId,
    BadSpec,
    IoFailure,
};

const char* to_string(ErrorCode code);

// Single exception type for the whole engine. `line` is 1-based and only set
// for errors raised while reading a text stream; `subject` names the offending
// joint, video id or action when one applies.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string subject = {}, int line = 0);

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }
    int line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::string subject_;
    int line_;
};

}  // namespace repcount
