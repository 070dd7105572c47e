#include "repcount/action_trigger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "repcount/errors.hpp"

namespace repcount {

void DensityMap::validate() const {
    if (scores.size() != valid_mask.size()) {
        throw Error(ErrorCode::BadConfig, "scores and valid_mask differ in length", video_id);
    }
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::BadConfig, "density score outside [0,1]", video_id);
    }
}

void TriggerConfig::validate() const {
    if (!(lower >= 0.0 && lower < upper && upper <= 1.0)) {
        throw Error(ErrorCode::BadConfig, "trigger limits must satisfy 0 <= lower < upper <= 1");
    }
    if (smoothing_window < 1 || smoothing_window % 2 == 0) {
        throw Error(ErrorCode::BadWindow, "smoothing window must be odd and >= 1");
    }
}

const char* to_string(TriggerState state) { return state == TriggerState::Neutral ? "NEUTRAL" : "SEEN_I"; }

std::vector<double> smooth(std::span<const double> scores, int window) {
    const auto n = static_cast<long>(scores.size());
    if (window < 1 || window % 2 == 0 || window > n) {
        throw Error(ErrorCode::BadWindow, "window " + std::to_string(window) + " for length " + std::to_string(n));
    }
    const long half = window / 2;
    std::vector<double> out(scores.size());
    for (long i = 0; i < n; ++i) {
        const long lo = std::max(0L, i - half);
        const long hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (long k = lo; k <= hi; ++k) sum += scores[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

CountResult count_reps(const DensityMap& density, const TriggerConfig& config) {
    config.validate();
    density.validate();
    CountResult result;
    if (density.scores.empty()) return result;

    int window = config.smoothing_window;
    const auto n = static_cast<int>(density.scores.size());
    if (window > n) window = (n % 2 == 1) ? n : n - 1;
    const std::vector<double> s = smooth(density.scores, window);

    const bool i_first = config.order == TriggerOrder::PoseIThenII;
    std::size_t opening_frame = 0;
    TriggerState state = TriggerState::Neutral;
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (!density.valid_mask[f]) continue;
        const bool high = s[f] >= config.upper;
        const bool low = s[f] <= config.lower;
        const bool opens = i_first ? high : low;
        const bool closes = i_first ? low : high;
        if (state == TriggerState::Neutral && opens) {
            state = TriggerState::SeenI;
            opening_frame = f;
        } else if (state == TriggerState::SeenI && closes) {
            RepEvent ev;
            ev.rep_index = result.events.size();
            ev.pose_I_frame = i_first ? opening_frame : f;
            ev.pose_II_frame = i_first ? f : opening_frame;
            result.events.push_back(ev);
            state = TriggerState::Neutral;
        }
    }
    result.count = result.events.size();
    result.final_state = state;
    return result;
}

void write_density_csv(std::ostream& out, const DensityMap& density) {
    density.validate();
    out << "frame,score,valid\n";
    char buf[64];
    for (std::size_t i = 0; i < density.scores.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%s\n", i, density.scores[i], density.valid_mask[i] ? "true" : "false");
        out << buf;
    }
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing density csv", density.video_id);
}

DensityMap read_density_csv(std::istream& in, std::string video_id, std::string action) {
    DensityMap map;
    map.video_id = std::move(video_id);
    map.action = std::move(action);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line != "frame,score,valid") {
        throw Error(ErrorCode::ParseError, "expected header 'frame,score,valid'", map.video_id, 1);
    }
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw Error(ErrorCode::ParseError, "expected 3 fields", map.video_id, line_no);
        const std::string frame = line.substr(0, c1);
        if (frame != std::to_string(map.scores.size())) {
            throw Error(ErrorCode::ParseError, "frames must be consecutive from 0", map.video_id, line_no);
        }
        const std::string score = line.substr(c1 + 1, c2 - c1 - 1);
        char* end = nullptr;
        const double v = std::strtod(score.c_str(), &end);
        if (score.empty() || end != score.c_str() + score.size() || !(v >= 0.0 && v <= 1.0)) {
            throw Error(ErrorCode::ParseError, "bad score '" + score + "'", map.video_id, line_no);
        }
        const std::string valid = line.substr(c2 + 1);
        if (valid != "true" && valid != "false") {
            throw Error(ErrorCode::ParseError, "valid must be true or false", map.video_id, line_no);
        }
        map.scores.push_back(v);
        map.valid_mask.push_back(valid == "true");
    }
    return map;
}

}  // namespace repcount
