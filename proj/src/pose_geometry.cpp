#include "repcount/pose_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "repcount/errors.hpp"

namespace repcount {

double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

std::string_view to_string(Joint joint) {
    switch (joint) {
        case Joint::Elbow: return "elbow";
        case Joint::Shoulder: return "shoulder";
        case Joint::Hip: return "hip";
        case Joint::Knee: return "knee";
        case Joint::Ankle: return "ankle";
    }
    return "?";
}

std::string_view to_string(Side side) {
    switch (side) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Average: return "average";
    }
    return "?";
}

double AngleSet::get(Joint joint) const {
    switch (joint) {
        case Joint::Elbow: return elbow_deg;
        case Joint::Shoulder: return shoulder_deg;
        case Joint::Hip: return hip_deg;
        case Joint::Knee: return knee_deg;
        case Joint::Ankle: return ankle_deg;
    }
    return 0.0;
}

void AngleSet::set(Joint joint, double degrees) {
    switch (joint) {
        case Joint::Elbow: elbow_deg = degrees; break;
        case Joint::Shoulder: shoulder_deg = degrees; break;
        case Joint::Hip: hip_deg = degrees; break;
        case Joint::Knee: knee_deg = degrees; break;
        case Joint::Ankle: ankle_deg = degrees; break;
    }
}

std::array<double, 5> AngleSet::values() const { return {elbow_deg, shoulder_deg, hip_deg, knee_deg, ankle_deg}; }

std::size_t feature_dim(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::LandmarksOnly: return kCoordDim;
        case FeatureMode::LandmarksLeft5: return kCoordDim + 5;
        case FeatureMode::LandmarksLR10: return kCoordDim + 10;
        case FeatureMode::LandmarksAvg5: return kCoordDim + 5;
    }
    return 0;
}

std::string_view to_string(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::LandmarksOnly: return "landmarks";
        case FeatureMode::LandmarksLeft5: return "left5";
        case FeatureMode::LandmarksLR10: return "lr10";
        case FeatureMode::LandmarksAvg5: return "avg5";
    }
    return "?";
}

FeatureMode parse_feature_mode(std::string_view name) {
    for (FeatureMode mode : kFeatureModes) {
        if (to_string(mode) == name) return mode;
    }
    throw Error(ErrorCode::BadConfig, "unknown feature mode '" + std::string(name) + "'");
}

const Triplet& JointTriplets::get(Joint joint) const {
    switch (joint) {
        case Joint::Elbow: return elbow;
        case Joint::Shoulder: return shoulder;
        case Joint::Hip: return hip;
        case Joint::Knee: return knee;
        case Joint::Ankle: return ankle;
    }
    return elbow;
}

Triplet JointTriplets::for_side(Joint joint, Side side) const {
    Triplet t = get(joint);
    if (side == Side::Right) {
        t.proximal += 1;
        t.vertex += 1;
        t.distal += 1;
    }
    return t;
}

void GeometryConfig::use_heel_for_ankle(bool heel) {
    triplets.ankle.distal = heel ? lm::kLeftHeel : lm::kLeftFootIndex;
}

double compute_joint_angle(Vec3 a, Vec3 b, Vec3 c) {
    const Vec3 u = a - b;
    const Vec3 v = c - b;
    const double nu = norm(u);
    const double nv = norm(v);
    if (!(nu >= kMinSegmentLength) || !(nv >= kMinSegmentLength)) {
        throw Error(ErrorCode::DegenerateSegment, "segment shorter than 1e-9");
    }
    const double cosine = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
    return std::acos(cosine) * (180.0 / std::numbers::pi);
}

namespace {

Vec3 point(const LandmarkFrame& frame, int index, bool use_z) {
    const Landmark& l = frame.landmarks[static_cast<std::size_t>(index)];
    return {l.x, l.y, use_z ? l.z : 0.0};
}

}  // namespace

AngleSet five_joint_angles(const LandmarkFrame& frame, Side side, const GeometryConfig& config) {
    if (side == Side::Average) {
        throw Error(ErrorCode::SideMismatch, "five_joint_angles takes LEFT or RIGHT");
    }
    AngleSet out;
    out.side = side;
    for (Joint joint : kJoints) {
        const Triplet t = config.triplets.for_side(joint, side);
        try {
            out.set(joint, compute_joint_angle(point(frame, t.proximal, config.use_z),
                                               point(frame, t.vertex, config.use_z),
                                               point(frame, t.distal, config.use_z)));
        } catch (const Error&) {
            throw Error(ErrorCode::DegenerateSegment, "frame " + std::to_string(frame.frame_index),
                        std::string(to_string(side)) + " " + std::string(to_string(joint)));
        }
    }
    return out;
}

AngleSet average_angles(const AngleSet& left, const AngleSet& right) {
    if (left.side != Side::Left || right.side != Side::Right) {
        throw Error(ErrorCode::SideMismatch, "expected (LEFT, RIGHT), got (" + std::string(to_string(left.side)) +
                                                 ", " + std::string(to_string(right.side)) + ")");
    }
    AngleSet out;
    out.side = Side::Average;
    for (Joint joint : kJoints) {
        out.set(joint, (left.get(joint) + right.get(joint)) / 2.0);
    }
    return out;
}

std::vector<int> required_landmarks(const GeometryConfig& config) {
    std::vector<int> out;
    for (Side side : {Side::Left, Side::Right}) {
        for (Joint joint : kJoints) {
            const Triplet t = config.triplets.for_side(joint, side);
            out.insert(out.end(), {t.proximal, t.vertex, t.distal});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool frame_is_valid(const LandmarkFrame& frame, const GeometryConfig& config) {
    for (int index : required_landmarks(config)) {
        if (frame.landmarks[static_cast<std::size_t>(index)].visibility < config.visibility_threshold) return false;
    }
    return true;
}

FeatureVector assemble_features(const LandmarkFrame& frame, FeatureMode mode, const GeometryConfig& config) {
    FeatureVector fv;
    fv.mode = mode;
    fv.values.reserve(feature_dim(mode));
    for (const Landmark& l : frame.landmarks) {
        fv.values.push_back(l.x);
        fv.values.push_back(l.y);
        fv.values.push_back(config.use_z ? l.z : 0.0);
    }
    auto append = [&fv](const AngleSet& angles) {
        for (double deg : angles.values()) fv.values.push_back(deg / 180.0);
    };
    switch (mode) {
        case FeatureMode::LandmarksOnly:
            break;
        case FeatureMode::LandmarksLeft5:
            append(five_joint_angles(frame, Side::Left, config));
            break;
        case FeatureMode::LandmarksLR10:
            append(five_joint_angles(frame, Side::Left, config));
            append(five_joint_angles(frame, Side::Right, config));
            break;
        case FeatureMode::LandmarksAvg5:
            append(average_angles(five_joint_angles(frame, Side::Left, config),
                                  five_joint_angles(frame, Side::Right, config)));
            break;
    }
    if (fv.values.size() != feature_dim(mode)) {
        throw Error(ErrorCode::BadConfig, "feature dimension contract violated for mode " +
                                              std::string(to_string(mode)));
    }
    return fv;
}

}  // namespace repcount
