#include "repcount/metrics_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "repcount/errors.hpp"

namespace repcount {

void CorrectionLedger::validate() const {
    std::set<std::string> seen;
    for (const Correction& c : entries) {
        if (!seen.insert(c.video_id).second) {
            throw Error(ErrorCode::DuplicateVideoId, "ledger lists the video twice", c.video_id);
        }
    }
}

EvalReport evaluate(const std::vector<VideoAnnotation>& annotations, const std::vector<Prediction>& predictions) {
    if (annotations.empty()) throw Error(ErrorCode::EmptyDataset, "no annotations to evaluate");

    std::unordered_map<std::string, long> predicted;
    for (const Prediction& p : predictions) {
        if (p.predicted_count < 0) throw Error(ErrorCode::BadConfig, "negative predicted count", p.video_id);
        if (!predicted.emplace(p.video_id, p.predicted_count).second) {
            throw Error(ErrorCode::DuplicatePrediction, "more than one prediction", p.video_id);
        }
    }

    EvalReport report;
    report.per_video.reserve(annotations.size());
    double err_sum = 0.0;
    std::size_t within = 0;
    for (const VideoAnnotation& a : annotations) {
        if (a.ground_truth_count <= 0) {
            throw Error(ErrorCode::ZeroGroundTruth, "ground truth count must be >= 1", a.video_id);
        }
        const auto it = predicted.find(a.video_id);
        if (it == predicted.end()) throw Error(ErrorCode::MissingPrediction, "no prediction", a.video_id);

        VideoResult row;
        row.video_id = a.video_id;
        row.ground_truth = a.ground_truth_count;
        row.predicted = it->second;
        const long diff = std::labs(row.ground_truth - row.predicted);
        row.abs_err_normalized = static_cast<double>(diff) / static_cast<double>(row.ground_truth);
        row.within_one = diff <= 1;
        err_sum += row.abs_err_normalized;
        within += row.within_one ? 1 : 0;
        report.per_video.push_back(std::move(row));
    }
    report.n_videos = report.per_video.size();
    report.mae = err_sum / static_cast<double>(report.n_videos);
    report.obo = static_cast<double>(within) / static_cast<double>(report.n_videos);
    return report;
}

std::vector<VideoAnnotation> apply_corrections(const std::vector<VideoAnnotation>& annotations,
                                               const CorrectionLedger& ledger) {
    ledger.validate();
    std::vector<VideoAnnotation> out = annotations;
    for (const Correction& c : ledger.entries) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const VideoAnnotation& a) { return a.video_id == c.video_id; });
        if (it == out.end()) continue;
        if (it->ground_truth_count != c.wrong_count) {
            throw Error(ErrorCode::StaleCorrection,
                        "annotation holds " + std::to_string(it->ground_truth_count) + ", ledger expects " +
                            std::to_string(c.wrong_count),
                        c.video_id);
        }
        it->ground_truth_count = c.corrected_count;
    }
    return out;
}

std::vector<ModeRanking> compare_modes(const std::map<FeatureMode, EvalReport>& reports) {
    std::vector<ModeRanking> rows;
    for (const auto& [mode, report] : reports) {
        rows.push_back({std::string(to_string(mode)), report.n_videos, report.mae, report.obo});
    }
    // std::map already iterates in mode order, so a stable sort keeps that as the last tie-break.
    std::stable_sort(rows.begin(), rows.end(), [](const ModeRanking& a, const ModeRanking& b) {
        if (a.mae != b.mae) return a.mae < b.mae;
        return a.obo > b.obo;
    });
    return rows;
}

std::string format_comparison_table(const std::vector<ModeRanking>& rows) {
    std::size_t width = 4;
    for (const ModeRanking& r : rows) width = std::max(width, r.label.size());
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s  %-*s  %8s  %8s  %8s\n", "rank", static_cast<int>(width), "mode", "MAE", "OBO",
                  "videos");
    out << buf;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-4zu  %-*s  %8.3f  %8.3f  %8zu\n", i + 1, static_cast<int>(width),
                      rows[i].label.c_str(), rows[i].mae, rows[i].obo, rows[i].n_videos);
        out << buf;
    }
    return out.str();
}

void write_comparison_csv(std::ostream& out, const std::vector<ModeRanking>& rows) {
    out << "rank,mode,mae,obo,n_videos\n";
    char buf[160];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.6f,%.6f,%zu\n", i + 1, rows[i].label.c_str(), rows[i].mae, rows[i].obo,
                      rows[i].n_videos);
        out << buf;
    }
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "video_id,gt,pred,norm_err,within_one\n";
    char buf[64];
    for (const VideoResult& r : report.per_video) {
        std::snprintf(buf, sizeof buf, "%.6f", r.abs_err_normalized);
        out << r.video_id << ',' << r.ground_truth << ',' << r.predicted << ',' << buf << ','
            << (r.within_one ? "true" : "false") << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing report csv");
}

std::string summary_line(const EvalReport& report, std::optional<FeatureMode> mode) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "n_videos=%zu mae=%.6f obo=%.6f ledger=", report.n_videos, report.mae, report.obo);
    std::string out;
    if (mode) out = "mode=" + std::string(to_string(*mode)) + " ";
    return out + buf + report.ledger;
}

ReportSummary parse_summary_line(const std::string& line) {
    ReportSummary s;
    std::istringstream in(line);
    std::string field;
    bool have_mae = false, have_obo = false;
    while (in >> field) {
        const std::size_t eq = field.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "bad summary field '" + field + "'", {}, 1);
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        try {
            if (key == "mode") {
                s.mode = parse_feature_mode(value);
            } else if (key == "n_videos") {
                s.n_videos = std::stoul(value);
            } else if (key == "mae") {
                s.mae = std::stod(value);
                have_mae = true;
            } else if (key == "obo") {
                s.obo = std::stod(value);
                have_obo = true;
            } else if (key == "ledger") {
                s.ledger = value;
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "bad value for '" + key + "'", {}, 1);
        }
    }
    if (!have_mae || !have_obo) throw Error(ErrorCode::ParseError, "summary needs mae and obo", {}, 1);
    if (!(s.mae >= 0.0) || !(s.obo >= 0.0 && s.obo <= 1.0)) {
        throw Error(ErrorCode::ParseError, "mae must be >= 0 and obo in [0,1]", {}, 1);
    }
    return s;
}

}  // namespace repcount
