#include "repcount/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "repcount/errors.hpp"

namespace repcount {

namespace {

using nlohmann::json;

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

long parse_long(const std::string& s, int line_no, const char* what) {
    if (s.empty()) throw Error(ErrorCode::ParseError, std::string("empty ") + what, {}, line_no);
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw Error(ErrorCode::ParseError, std::string("bad ") + what + " '" + s + "'", {}, line_no);
    return v;
}

std::vector<long> parse_frame_list(const std::string& s, int line_no) {
    std::vector<long> out;
    if (s.empty()) return out;
    for (const std::string& part : split(s, ';')) {
        const long f = parse_long(part, line_no, "frame index");
        if (f < 0) throw Error(ErrorCode::ParseError, "negative frame index", {}, line_no);
        if (!out.empty() && f <= out.back()) {
            throw Error(ErrorCode::ParseError, "salient frames must be strictly increasing", {}, line_no);
        }
        out.push_back(f);
    }
    return out;
}

std::string join_frames(const std::vector<long>& frames) {
    std::string out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(frames[i]);
    }
    return out;
}

double require_number(const json& v, int line_no, const char* what) {
    if (!v.is_number()) throw Error(ErrorCode::ParseError, std::string(what) + " must be a number", {}, line_no);
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(ErrorCode::ParseError, std::string(what) + " must be finite", {}, line_no);
    return d;
}

LandmarkFrame frame_from_json(const std::string& line, int line_no) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed JSON: ") + e.what(), {}, line_no);
    }
    if (!doc.is_object()) throw Error(ErrorCode::ParseError, "record must be a JSON object", {}, line_no);
    for (const auto& item : doc.items()) {
        if (item.key() != "frame" && item.key() != "ts_ms" && item.key() != "lm") {
            throw Error(ErrorCode::ParseError, "unexpected key '" + item.key() + "'", {}, line_no);
        }
    }
    if (!doc.contains("frame") || !doc.contains("ts_ms") || !doc.contains("lm")) {
        throw Error(ErrorCode::ParseError, "record needs frame, ts_ms and lm", {}, line_no);
    }
    LandmarkFrame frame;
    const json& f = doc["frame"];
    if (!f.is_number_integer() || f.get<long long>() < 0) {
        throw Error(ErrorCode::ParseError, "frame must be a non-negative integer", {}, line_no);
    }
    frame.frame_index = static_cast<long>(f.get<long long>());
    frame.timestamp_ms = require_number(doc["ts_ms"], line_no, "ts_ms");
    if (frame.timestamp_ms < 0.0 && frame.timestamp_ms != -1.0) {
        throw Error(ErrorCode::ParseError, "ts_ms must be >= 0 or -1", {}, line_no);
    }
    const json& lms = doc["lm"];
    if (!lms.is_array()) throw Error(ErrorCode::ParseError, "lm must be an array", {}, line_no);
    if (lms.size() != kNumLandmarks) {
        throw Error(ErrorCode::WrongLandmarkCount, "expected 33 landmarks, got " + std::to_string(lms.size()), {},
                    line_no);
    }
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        const json& p = lms[i];
        if (!p.is_array() || p.size() != 4) {
            throw Error(ErrorCode::ParseError, "landmark " + std::to_string(i) + " must be [x,y,z,vis]", {}, line_no);
        }
        Landmark& l = frame.landmarks[i];
        l.x = require_number(p[0], line_no, "x");
        l.y = require_number(p[1], line_no, "y");
        l.z = require_number(p[2], line_no, "z");
        l.visibility = require_number(p[3], line_no, "visibility");
        if (!(l.visibility >= 0.0 && l.visibility <= 1.0)) {
            throw Error(ErrorCode::ParseError, "visibility outside [0,1] at landmark " + std::to_string(i), {},
                        line_no);
        }
    }
    return frame;
}

}  // namespace

LandmarkSequence parse_landmarks(std::istream& in, std::string video_id) {
    LandmarkSequence seq;
    seq.video_id = std::move(video_id);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) throw Error(ErrorCode::ParseError, "blank line", seq.video_id, line_no);
        LandmarkFrame frame = frame_from_json(line, line_no);
        if (!seq.frames.empty() && frame.frame_index <= seq.frames.back().frame_index) {
            throw Error(ErrorCode::NonMonotonicFrameIndex,
                        "frame " + std::to_string(frame.frame_index) + " after " +
                            std::to_string(seq.frames.back().frame_index),
                        seq.video_id, line_no);
        }
        seq.frames.push_back(frame);
    }
    if (seq.frames.empty()) throw Error(ErrorCode::ParseError, "no frames", seq.video_id, 1);
    return seq;
}

LandmarkSequence parse_landmarks(std::string_view text, std::string video_id) {
    std::istringstream in{std::string(text)};
    return parse_landmarks(in, std::move(video_id));
}

std::string format_landmark_line(const LandmarkFrame& frame) {
    std::string out;
    out.reserve(40 + kNumLandmarks * 44);
    char buf[160];
    if (frame.timestamp_ms == -1.0) {
        std::snprintf(buf, sizeof buf, "{\"frame\": %ld, \"ts_ms\": -1, \"lm\": [", frame.frame_index);
    } else {
        std::snprintf(buf, sizeof buf, "{\"frame\": %ld, \"ts_ms\": %.3f, \"lm\": [", frame.frame_index,
                      frame.timestamp_ms);
    }
    out += buf;
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        const Landmark& l = frame.landmarks[i];
        std::snprintf(buf, sizeof buf, "%s[%.6f,%.6f,%.6f,%.6f]", i ? "," : "", l.x, l.y, l.z, l.visibility);
        out += buf;
    }
    out += "]}";
    return out;
}

void write_landmarks(std::ostream& out, const std::vector<LandmarkFrame>& frames) {
    for (const LandmarkFrame& f : frames) out << format_landmark_line(f) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing landmarks");
}

std::vector<VideoAnnotation> parse_annotations(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header", {}, 1);
    strip_cr(line);
    bool with_salient = false;
    if (line == "video_id,count,action,salient_I,salient_II") {
        with_salient = true;
    } else if (line != "video_id,count,action") {
        throw Error(ErrorCode::ParseError, "unexpected header '" + line + "'", {}, 1);
    }
    const std::size_t n_fields = with_salient ? 5 : 3;

    std::vector<VideoAnnotation> out;
    std::set<std::string> seen;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split(line, ',');
        if (fields.size() != n_fields) {
            throw Error(ErrorCode::ParseError,
                        "expected " + std::to_string(n_fields) + " fields, got " + std::to_string(fields.size()), {},
                        line_no);
        }
        VideoAnnotation a;
        a.video_id = fields[0];
        if (a.video_id.empty()) throw Error(ErrorCode::ParseError, "empty video_id", {}, line_no);
        a.ground_truth_count = parse_long(fields[1], line_no, "count");
        if (a.ground_truth_count < 0) throw Error(ErrorCode::ParseError, "negative count", a.video_id, line_no);
        a.action = fields[2];
        if (with_salient) {
            a.salient_I_frames = parse_frame_list(fields[3], line_no);
            a.salient_II_frames = parse_frame_list(fields[4], line_no);
        }
        if (!seen.insert(a.video_id).second) {
            throw Error(ErrorCode::DuplicateVideoId, "video listed twice", a.video_id, line_no);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<VideoAnnotation> parse_annotations(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_annotations(in);
}

void write_annotations(std::ostream& out, const std::vector<VideoAnnotation>& annotations) {
    bool with_salient = false;
    for (const VideoAnnotation& a : annotations) {
        with_salient = with_salient || !a.salient_I_frames.empty() || !a.salient_II_frames.empty();
    }
    out << (with_salient ? "video_id,count,action,salient_I,salient_II\n" : "video_id,count,action\n");
    for (const VideoAnnotation& a : annotations) {
        out << a.video_id << ',' << a.ground_truth_count << ',' << a.action;
        if (with_salient) out << ',' << join_frames(a.salient_I_frames) << ',' << join_frames(a.salient_II_frames);
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing annotations");
}

CorrectionLedger parse_ledger(std::istream& in, std::string name) {
    CorrectionLedger ledger;
    ledger.name = std::move(name);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header", {}, 1);
    strip_cr(line);
    if (line != "video_id,wrong,corrected,reason") {
        throw Error(ErrorCode::ParseError, "unexpected header '" + line + "'", {}, 1);
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        const std::size_t c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
        if (c3 == std::string::npos) throw Error(ErrorCode::ParseError, "expected 4 fields", {}, line_no);
        Correction c;
        c.video_id = line.substr(0, c1);
        c.wrong_count = parse_long(line.substr(c1 + 1, c2 - c1 - 1), line_no, "wrong count");
        c.corrected_count = parse_long(line.substr(c2 + 1, c3 - c2 - 1), line_no, "corrected count");
        c.reason = line.substr(c3 + 1);
        if (c.video_id.empty() || c.wrong_count < 0 || c.corrected_count < 0) {
            throw Error(ErrorCode::ParseError, "bad ledger entry", c.video_id, line_no);
        }
        ledger.entries.push_back(std::move(c));
    }
    ledger.validate();
    return ledger;
}

void write_ledger(std::ostream& out, const CorrectionLedger& ledger) {
    out << "video_id,wrong,corrected,reason\n";
    for (const Correction& c : ledger.entries) {
        out << c.video_id << ',' << c.wrong_count << ',' << c.corrected_count << ',' << c.reason << '\n';
    }
}

void write_counts(std::ostream& out, const std::vector<CountRow>& rows) {
    out << "video_id,action,count,final_state,events\n";
    for (const CountRow& r : rows) {
        out << r.video_id << ',' << r.action << ',' << r.result.count << ',' << to_string(r.result.final_state) << ',';
        for (std::size_t i = 0; i < r.result.events.size(); ++i) {
            out << (i ? ";" : "") << r.result.events[i].pose_I_frame << ':' << r.result.events[i].pose_II_frame;
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing counts");
}

std::vector<Prediction> parse_predictions(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header", {}, 1);
    strip_cr(line);
    const std::vector<std::string> header = split(line, ',');
    std::size_t id_col = header.size(), count_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "video_id") id_col = i;
        if (header[i] == "count") count_col = i;
    }
    if (id_col == header.size() || count_col == header.size()) {
        throw Error(ErrorCode::ParseError, "header needs video_id and count columns", {}, 1);
    }
    std::vector<Prediction> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split(line, ',');
        if (fields.size() != header.size()) throw Error(ErrorCode::ParseError, "field count mismatch", {}, line_no);
        Prediction p;
        p.video_id = fields[id_col];
        p.predicted_count = parse_long(fields[count_col], line_no, "count");
        if (p.predicted_count < 0) throw Error(ErrorCode::ParseError, "negative count", p.video_id, line_no);
        out.push_back(std::move(p));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open for reading", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot open for writing", tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::IoFailure, "write failed", tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "rename failed: " + ec.message(), path.string());
}

LandmarkSequence load_landmarks(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open for reading", path.string());
    LandmarkSequence seq = parse_landmarks(in, path.stem().string());
    seq.path = path;
    return seq;
}

}  // namespace repcount
