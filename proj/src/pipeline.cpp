#include "repcount/pipeline.hpp"

#include <algorithm>
#include <memory>

#include "repcount/errors.hpp"

namespace repcount {

FrameScorer geometric_scorer(GeometricRule rule, GeometryConfig geometry) {
    if (rule.pose_one_deg == rule.pose_two_deg) {
        throw Error(ErrorCode::BadRule, "calibration angles must differ", std::string(to_string(rule.joint)));
    }
    return [rule, geometry](const LandmarkFrame& frame) -> std::optional<double> {
        if (!frame_is_valid(frame, geometry)) return std::nullopt;
        try {
            const AngleSet avg = average_angles(five_joint_angles(frame, Side::Left, geometry),
                                                five_joint_angles(frame, Side::Right, geometry));
            return geometric_score(avg, rule);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateSegment) return std::nullopt;
            throw;
        }
    };
}

FrameScorer model_scorer(const ScorerModel& model, std::string action, GeometryConfig geometry) {
    model.validate();
    model.action_index(action);
    auto shared = std::make_shared<const ScorerModel>(model);
    return [shared, action = std::move(action), geometry](const LandmarkFrame& frame) -> std::optional<double> {
        if (!frame_is_valid(frame, geometry)) return std::nullopt;
        try {
            return score_frame(*shared, assemble_features(frame, shared->mode, geometry), action);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateSegment) return std::nullopt;
            throw;
        }
    };
}

DensityMap build_density_map(std::span<const LandmarkFrame> frames, const FrameScorer& scorer, std::string video_id,
                             std::string action) {
    DensityMap map;
    map.video_id = std::move(video_id);
    map.action = std::move(action);
    map.scores.reserve(frames.size());
    map.valid_mask.reserve(frames.size());
    double last = 0.5;
    for (const LandmarkFrame& frame : frames) {
        const std::optional<double> s = scorer(frame);
        if (s) last = std::clamp(*s, 0.0, 1.0);
        map.scores.push_back(last);
        map.valid_mask.push_back(s.has_value());
    }
    return map;
}

std::vector<LabeledPose> labeled_poses(std::span<const LandmarkFrame> frames, const VideoAnnotation& annotation,
                                       FeatureMode mode, const GeometryConfig& geometry) {
    std::vector<LabeledPose> out;
    auto emit = [&](const std::vector<long>& indices, double label) {
        for (long index : indices) {
            const auto it = std::lower_bound(frames.begin(), frames.end(), index,
                                             [](const LandmarkFrame& f, long i) { return f.frame_index < i; });
            if (it == frames.end() || it->frame_index != index) continue;
            if (!frame_is_valid(*it, geometry)) continue;
            try {
                out.push_back({assemble_features(*it, mode, geometry), annotation.action, label});
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateSegment) throw;
            }
        }
    };
    emit(annotation.salient_I_frames, 1.0);
    emit(annotation.salient_II_frames, 0.0);
    return out;
}

}  // namespace repcount
