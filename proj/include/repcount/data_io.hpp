#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "repcount/action_trigger.hpp"
#include "repcount/metrics_eval.hpp"
#include "repcount/pose_geometry.hpp"

namespace repcount {

struct LandmarkSequence {
    std::filesystem::path path;
    std::string video_id;
    std::vector<LandmarkFrame> frames;
};

// Landmark files (.lmjsonl), one frame per line:
//   {"frame": 0, "ts_ms": -1, "lm": [[x,y,z,vis],...33 entries]}
// Canonical output prints coordinates and visibility with six decimals and
// ts_ms with three (or the literal -1 when absent).
LandmarkSequence parse_landmarks(std::istream& in, std::string video_id = {});
LandmarkSequence parse_landmarks(std::string_view text, std::string video_id = {});
void write_landmarks(std::ostream& out, const std::vector<LandmarkFrame>& frames);
std::string format_landmark_line(const LandmarkFrame& frame);

// Annotation CSV: `video_id,count,action[,salient_I,salient_II]`; salient
// columns hold ';'-joined frame indices. Counts of zero parse fine and are
// rejected later by evaluate().
std::vector<VideoAnnotation> parse_annotations(std::istream& in);
std::vector<VideoAnnotation> parse_annotations(std::string_view text);
void write_annotations(std::ostream& out, const std::vector<VideoAnnotation>& annotations);

// Correction ledger CSV: `video_id,wrong,corrected,reason`. The reason is the
// remainder of the line and may itself contain commas.
CorrectionLedger parse_ledger(std::istream& in, std::string name = "ledger");
void write_ledger(std::ostream& out, const CorrectionLedger& ledger);

// Per-video count CSV written by the count command:
//   video_id,action,count,final_state,events
// with events as ';'-joined `poseI:poseII` frame pairs.
struct CountRow {
    std::string video_id;
    std::string action;
    CountResult result;
};
void write_counts(std::ostream& out, const std::vector<CountRow>& rows);

// Reads any CSV with `video_id` and `count` columns (the count CSV above
// qualifies).
std::vector<Prediction> parse_predictions(std::istream& in);

// File helpers. Writes go to `<path>.tmp` and are renamed into place.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
LandmarkSequence load_landmarks(const std::filesystem::path& path);

}  // namespace repcount
