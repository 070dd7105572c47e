#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repcount/pose_geometry.hpp"

namespace repcount {

struct VideoAnnotation {
    std::string video_id;
    long ground_truth_count = 0;
    std::string action;
    std::vector<long> salient_I_frames;
    std::vector<long> salient_II_frames;

    friend bool operator==(const VideoAnnotation&, const VideoAnnotation&) = default;
};

struct Prediction {
    std::string video_id;
    long predicted_count = 0;
};

struct VideoResult {
    std::string video_id;
    long ground_truth = 0;
    long predicted = 0;
    double abs_err_normalized = 0.0;
    bool within_one = false;
};

struct EvalReport {
    std::size_t n_videos = 0;
    double mae = 0.0;
    double obo = 0.0;
    std::vector<VideoResult> per_video;
    std::string ledger = "none";  // which correction ledger was active
};

struct Correction {
    std::string video_id;
    long wrong_count = 0;
    long corrected_count = 0;
    std::string reason;
};

struct CorrectionLedger {
    std::string name = "none";
    std::vector<Correction> entries;

    void validate() const;  // DuplicateVideoId on repeated ids
};

// MAE = mean(|gt - pred| / gt), OBO = mean([|gt - pred| <= 1]). Rows follow
// the annotation order; predictions for unannotated videos are ignored.
EvalReport evaluate(const std::vector<VideoAnnotation>& annotations, const std::vector<Prediction>& predictions);

// Substitutes corrected counts. Entries for videos absent from `annotations`
// are skipped; an entry whose wrong_count disagrees with the current value
// raises StaleCorrection.
std::vector<VideoAnnotation> apply_corrections(const std::vector<VideoAnnotation>& annotations,
                                               const CorrectionLedger& ledger);

struct ModeRanking {
    std::string label;  // feature mode name
    std::size_t n_videos = 0;
    double mae = 0.0;
    double obo = 0.0;
};

// Ascending MAE, ties by descending OBO, then by mode order.
std::vector<ModeRanking> compare_modes(const std::map<FeatureMode, EvalReport>& reports);

std::string format_comparison_table(const std::vector<ModeRanking>& rows);
void write_comparison_csv(std::ostream& out, const std::vector<ModeRanking>& rows);

void write_report_csv(std::ostream& out, const EvalReport& report);

// One line: `mode=<m> n_videos=<N> mae=<..> obo=<..> ledger=<name>`.
std::string summary_line(const EvalReport& report, std::optional<FeatureMode> mode = std::nullopt);

struct ReportSummary {
    std::optional<FeatureMode> mode;
    std::size_t n_videos = 0;
    double mae = 0.0;
    double obo = 0.0;
    std::string ledger = "none";
};

ReportSummary parse_summary_line(const std::string& line);

}  // namespace repcount
