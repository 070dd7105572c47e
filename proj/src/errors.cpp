#include "repcount/errors.hpp"

namespace repcount {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateSegment: return "DegenerateSegment";
        case ErrorCode::SideMismatch: return "SideMismatch";
        case ErrorCode::ModeMismatch: return "ModeMismatch";
        case ErrorCode::UnknownAction: return "UnknownAction";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::MixedModes: return "MixedModes";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::BadLabel: return "BadLabel";
        case ErrorCode::BadRule: return "BadRule";
        case ErrorCode::BadWindow: return "BadWindow";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::MissingPrediction: return "MissingPrediction";
        case ErrorCode::DuplicatePrediction: return "DuplicatePrediction";
        case ErrorCode::ZeroGroundTruth: return "ZeroGroundTruth";
        case ErrorCode::StaleCorrection: return "StaleCorrection";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::WrongLandmarkCount: return "WrongLandmarkCount";
        case ErrorCode::NonMonotonicFrameIndex: return "NonMonotonicFrameIndex";
        case ErrorCode::DuplicateVideoId: return "DuplicateVideoId";
        case ErrorCode::BadSpec: return "BadSpec";
        case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& subject, int line) {
    std::string out = to_string(code);
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!subject.empty()) out += " [" + subject + "]";
    if (!message.empty()) out += ": " + message;
    return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string subject, int line)
    : std::runtime_error(compose(code, message, subject, line)),
      code_(code),
      subject_(std::move(subject)),
      line_(line) {}

}  // namespace repcount
