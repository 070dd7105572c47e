#include "repcount/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "repcount/errors.hpp"

namespace repcount {

std::string_view to_string(ActionTemplate t) {
    switch (t) {
        case ActionTemplate::Squat: return "squat";
        case ActionTemplate::JumpJack: return "jump_jack";
        case ActionTemplate::PullUp: return "pull_up";
    }
    return "?";
}

ActionTemplate parse_action_template(std::string_view name) {
    for (ActionTemplate t : kActionTemplates) {
        if (to_string(t) == name) return t;
    }
    throw Error(ErrorCode::BadSpec, "unknown action template '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
    if (n_reps < 0 || n_reps > 100000) throw Error(ErrorCode::BadSpec, "n_reps must be in [0, 100000]", video_id);
    if (period_frames < 4) throw Error(ErrorCode::BadSpec, "period must be >= 4 frames", video_id);
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw Error(ErrorCode::BadSpec, "noise_std must be finite and >= 0", video_id);
    }
    for (std::size_t i = 0; i < camera_yaw_schedule.size(); ++i) {
        const YawChange& y = camera_yaw_schedule[i];
        if (y.start_frame < 0 || !std::isfinite(y.yaw_deg)) {
            throw Error(ErrorCode::BadSpec, "yaw entries need start_frame >= 0 and finite yaw", video_id);
        }
        if (i > 0 && y.start_frame <= camera_yaw_schedule[i - 1].start_frame) {
            throw Error(ErrorCode::BadSpec, "yaw schedule must be strictly increasing in start_frame", video_id);
        }
    }
    if (incomplete_rep_at) {
        if (incomplete_rep_at->rep_index < 0 || incomplete_rep_at->rep_index >= n_reps) {
            throw Error(ErrorCode::BadSpec, "incomplete rep index outside [0, n_reps)", video_id);
        }
        if (!(incomplete_rep_at->completion > 0.0 && incomplete_rep_at->completion < 1.0)) {
            throw Error(ErrorCode::BadSpec, "completion fraction must be strictly inside (0,1)", video_id);
        }
    }
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Stick-figure dimensions in torso units (hip to shoulder = 1).
constexpr double kHalfWidth = 0.15;
constexpr double kUpperArm = 0.55;
constexpr double kForearm = 0.5;
constexpr double kThigh = 0.85;
constexpr double kShank = 0.85;
constexpr double kFoot = 0.25;

// Body frame to normalized image coordinates: a similarity transform
// (scale, y and z flipped), so angles are preserved.
constexpr double kImageScale = 0.18;
constexpr double kImageCx = 0.5;
constexpr double kImageCy = 0.45;

enum class Plane { Sagittal, Frontal };
enum class Anchor { Feet, Hands };

struct Posture {
    AngleSet angles;  // per-side angles; the right side mirrors the left
};

struct TemplateDef {
    Posture pose_two;  // rest pose, score 0
    Posture pose_one;  // score 1
    Posture distractor;
    Plane arms;
    Plane legs;
    Anchor anchor;
    Joint tracked;
    double distractor_lift;  // vertical bounce amplitude during the distractor
};

AngleSet make_angles(double elbow, double shoulder, double hip, double knee, double ankle) {
    AngleSet a;
    a.elbow_deg = elbow;
    a.shoulder_deg = shoulder;
    a.hip_deg = hip;
    a.knee_deg = knee;
    a.ankle_deg = ankle;
    a.side = Side::Left;
    return a;
}

// Salient poses stay clear of 0 and 180 degrees so that arccos is well
// conditioned under rotation.
const TemplateDef& definition(ActionTemplate t) {
    static const TemplateDef squat{
        {make_angles(170, 15, 175, 175, 95)},
        {make_angles(170, 90, 80, 85, 88)},
        // jump with arms overhead; knee held at the ramp midpoint
        {make_angles(120, 150, 150, 130, 120)},
        Plane::Sagittal, Plane::Sagittal, Anchor::Feet, Joint::Knee, 0.45};
    static const TemplateDef jump_jack{
        {make_angles(170, 15, 175, 175, 95)},
        {make_angles(165, 165, 150, 172, 95)},
        // half-squat dip with arms level; shoulder held at the ramp midpoint
        {make_angles(90, 90, 120, 110, 75)},
        Plane::Frontal, Plane::Frontal, Anchor::Feet, Joint::Shoulder, 0.15};
    static const TemplateDef pull_up{
        {make_angles(172, 170, 170, 165, 110)},
        {make_angles(45, 50, 165, 150, 110)},
        // knee raise while hanging; elbow held at the ramp midpoint
        {make_angles(108.5, 140, 90, 80, 120)},
        Plane::Frontal, Plane::Sagittal, Anchor::Hands, Joint::Elbow, 0.0};
    switch (t) {
        case ActionTemplate::Squat: return squat;
        case ActionTemplate::JumpJack: return jump_jack;
        case ActionTemplate::PullUp: return pull_up;
    }
    return squat;
}

AngleSet lerp(const AngleSet& from, const AngleSet& to, double w) {
    AngleSet out = from;
    for (Joint j : kJoints) out.set(j, from.get(j) + w * (to.get(j) - from.get(j)));
    return out;
}

// Unit vector a*down + b*e, where down = (0,-1,0) and e is the in-plane
// direction for the left side.
Vec3 in_plane(double a, double b, Plane plane) {
    const Vec3 e = plane == Plane::Sagittal ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    return Vec3{0, -a, 0} + b * e;
}

struct Planar {
    double a, b;  // coefficients on (down, e)
};

Planar rot_plus(Planar v) { return {-v.b, v.a}; }
Planar rot_minus(Planar v) { return {v.b, -v.a}; }
Planar combine(double s, Planar u, double t, Planar v) { return {s * u.a + t * v.a, s * u.b + t * v.b}; }

using Skeleton = std::array<Vec3, kNumLandmarks>;

Vec3 mirror(Vec3 v) { return {-v.x, v.y, v.z}; }

// Builds all 33 landmarks in the body frame (y up, x to the subject's left,
// z forward, pelvis centre at the origin).
Skeleton build_skeleton(const AngleSet& a, const TemplateDef& def) {
    Skeleton s{};
    const Vec3 shoulder{kHalfWidth, 1.0, 0.0};
    const Vec3 hip{kHalfWidth, 0.0, 0.0};

    // Arm: upper arm at `shoulder_deg` from the downward torso line, forearm
    // bent so the interior elbow angle is `elbow_deg`.
    const Planar u{std::cos(a.shoulder_deg * kDeg), std::sin(a.shoulder_deg * kDeg)};
    const Planar f = combine(-std::cos(a.elbow_deg * kDeg), u, std::sin(a.elbow_deg * kDeg), rot_plus(u));
    const Vec3 elbow = shoulder + kUpperArm * in_plane(u.a, u.b, def.arms);
    const Vec3 fore = in_plane(f.a, f.b, def.arms);
    const Vec3 wrist = elbow + kForearm * fore;
    const Vec3 arm_normal = def.arms == Plane::Sagittal ? Vec3{1, 0, 0} : Vec3{0, 0, 1};

    // Leg: thigh at `hip_deg` from the upward torso line; shank folds back,
    // foot folds forward.
    const Planar t{-std::cos(a.hip_deg * kDeg), std::sin(a.hip_deg * kDeg)};
    const Planar sh = combine(-std::cos(a.knee_deg * kDeg), t, std::sin(a.knee_deg * kDeg), rot_minus(t));
    const Planar ft = combine(-std::cos(a.ankle_deg * kDeg), sh, std::sin(a.ankle_deg * kDeg), rot_plus(sh));
    const Vec3 knee = hip + kThigh * in_plane(t.a, t.b, def.legs);
    const Vec3 shank = in_plane(sh.a, sh.b, def.legs);
    const Vec3 ankle = knee + kShank * shank;
    const Vec3 foot = in_plane(ft.a, ft.b, def.legs);

    s[lm::kLeftShoulder] = shoulder;
    s[lm::kLeftElbow] = elbow;
    s[lm::kLeftWrist] = wrist;
    s[lm::kLeftPinky] = wrist + 0.07 * fore - 0.02 * arm_normal;
    s[lm::kLeftIndex] = wrist + 0.08 * fore + 0.02 * arm_normal;
    s[lm::kLeftThumb] = wrist + 0.04 * fore + 0.04 * arm_normal;
    s[lm::kLeftHip] = hip;
    s[lm::kLeftKnee] = knee;
    s[lm::kLeftAnkle] = ankle;
    s[lm::kLeftHeel] = ankle - 0.06 * foot - 0.03 * shank;
    s[lm::kLeftFootIndex] = ankle + kFoot * foot;

    s[lm::kNose] = {0.0, 1.35, 0.12};
    s[lm::kLeftEyeInner] = {0.03, 1.42, 0.10};
    s[lm::kLeftEye] = {0.05, 1.42, 0.09};
    s[lm::kLeftEyeOuter] = {0.07, 1.42, 0.08};
    s[lm::kLeftEar] = {0.10, 1.38, 0.0};
    s[lm::kMouthLeft] = {0.04, 1.28, 0.10};

    // Right side is the exact mirror image of the left.
    constexpr std::array<std::pair<int, int>, 16> pairs{{{lm::kLeftEyeInner, lm::kRightEyeInner},
                                                         {lm::kLeftEye, lm::kRightEye},
                                                         {lm::kLeftEyeOuter, lm::kRightEyeOuter},
                                                         {lm::kLeftEar, lm::kRightEar},
                                                         {lm::kMouthLeft, lm::kMouthRight},
                                                         {lm::kLeftShoulder, lm::kRightShoulder},
                                                         {lm::kLeftElbow, lm::kRightElbow},
                                                         {lm::kLeftWrist, lm::kRightWrist},
                                                         {lm::kLeftPinky, lm::kRightPinky},
                                                         {lm::kLeftIndex, lm::kRightIndex},
                                                         {lm::kLeftThumb, lm::kRightThumb},
                                                         {lm::kLeftHip, lm::kRightHip},
                                                         {lm::kLeftKnee, lm::kRightKnee},
                                                         {lm::kLeftAnkle, lm::kRightAnkle},
                                                         {lm::kLeftHeel, lm::kRightHeel},
                                                         {lm::kLeftFootIndex, lm::kRightFootIndex}}};
    for (const auto& [l, r] : pairs) s[static_cast<std::size_t>(r)] = mirror(s[static_cast<std::size_t>(l)]);
    return s;
}

double anchor_height(const Skeleton& s, Anchor anchor) {
    return anchor == Anchor::Feet ? s[lm::kLeftAnkle].y : s[lm::kLeftWrist].y;
}

double raised_cosine(double phase) { return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * phase)); }

double yaw_at(const std::vector<YawChange>& schedule, long frame) {
    double yaw = 0.0;
    for (const YawChange& y : schedule) {
        if (frame >= y.start_frame) yaw = y.yaw_deg;
    }
    return yaw;
}

}  // namespace

GeometricRule template_rule(ActionTemplate t) {
    const TemplateDef& def = definition(t);
    return {def.tracked, def.pose_one.angles.get(def.tracked), def.pose_two.angles.get(def.tracked)};
}

AngleSet template_pose_angles(ActionTemplate t, bool pose_one) {
    AngleSet a = pose_one ? definition(t).pose_one.angles : definition(t).pose_two.angles;
    a.side = Side::Average;
    return a;
}

SynthOutput synthesize(const SynthSpec& spec) {
    spec.validate();
    const TemplateDef& def = definition(spec.action_template);
    const int period = spec.period_frames;

    // Per-frame posture and extra vertical lift, before rendering.
    struct Key {
        AngleSet angles;
        double lift = 0.0;
    };
    std::vector<Key> keys;

    SynthOutput out;
    out.annotation.video_id = spec.video_id;
    out.annotation.action = std::string(to_string(spec.action_template));

    if (spec.n_reps == 0) {
        for (int f = 0; f < period; ++f) keys.push_back({def.pose_two.angles});
        out.annotation.salient_II_frames.push_back(0);
    } else {
        for (int rep = 0; rep < spec.n_reps; ++rep) {
            const bool partial = spec.incomplete_rep_at && spec.incomplete_rep_at->rep_index == rep;
            const double amplitude = partial ? spec.incomplete_rep_at->completion : 1.0;
            for (int k = 0; k < period; ++k) {
                const double w = amplitude * raised_cosine(static_cast<double>(k) / period);
                keys.push_back({lerp(def.pose_two.angles, def.pose_one.angles, w)});
            }
            out.annotation.salient_II_frames.push_back(static_cast<long>(rep) * period);
            if (!partial) out.annotation.salient_I_frames.push_back(static_cast<long>(rep) * period + period / 2);
        }
        keys.push_back({def.pose_two.angles});
        out.annotation.salient_II_frames.push_back(static_cast<long>(spec.n_reps) * period);
    }

    if (spec.sub_action_at_end) {
        // Tracked joint goes to the ramp midpoint, the rest of the body to the
        // distractor posture.
        AngleSet target = def.distractor.angles;
        const double mid = 0.5 * (def.pose_one.angles.get(def.tracked) + def.pose_two.angles.get(def.tracked));
        target.set(def.tracked, mid);
        const int ramp = std::max(2, period / 2);
        for (int k = 1; k <= ramp; ++k) {
            const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * k / ramp));
            keys.push_back({lerp(def.pose_two.angles, target, w)});
        }
        for (int k = 0; k < period; ++k) {
            const double bounce = std::sin(std::numbers::pi * 2.0 * k / period);
            keys.push_back({target, def.distractor_lift * bounce * bounce});
        }
        for (int k = 1; k <= ramp; ++k) {
            const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * k / ramp));
            keys.push_back({lerp(target, def.pose_two.angles, w)});
        }
    }

    out.true_count = spec.n_reps - (spec.incomplete_rep_at ? 1 : 0);
    out.annotation.ground_truth_count = out.true_count;

    const double rest_anchor = anchor_height(build_skeleton(def.pose_two.angles, def), def.anchor);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_std > 0.0 ? spec.noise_std : 1.0);

    out.frames.reserve(keys.size());
    for (std::size_t f = 0; f < keys.size(); ++f) {
        Skeleton s = build_skeleton(keys[f].angles, def);
        const double dy = rest_anchor - anchor_height(s, def.anchor) + keys[f].lift;
        const double yaw = yaw_at(spec.camera_yaw_schedule, static_cast<long>(f)) * kDeg;
        const double c = std::cos(yaw), sn = std::sin(yaw);

        LandmarkFrame frame;
        frame.frame_index = static_cast<long>(f);
        frame.timestamp_ms = static_cast<double>(f) * 1000.0 / 30.0;
        for (std::size_t i = 0; i < kNumLandmarks; ++i) {
            const Vec3 p = s[i];
            const double x = c * p.x + sn * p.z;
            const double z = -sn * p.x + c * p.z;
            const double y = p.y + dy;
            Landmark& l = frame.landmarks[i];
            l.x = kImageCx + kImageScale * x;
            l.y = kImageCy - kImageScale * y;
            l.z = -kImageScale * z;
            l.visibility = 1.0;
            if (spec.noise_std > 0.0) {
                l.x += noise(rng);
                l.y += noise(rng);
                l.z += noise(rng);
            }
        }
        out.frames.push_back(frame);
    }
    return out;
}

}  // namespace repcount
