#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repcount/metrics_eval.hpp"
#include "repcount/pose_geometry.hpp"
#include "repcount/saliency_scorer.hpp"

namespace repcount {

enum class ActionTemplate { Squat, JumpJack, PullUp };

inline constexpr ActionTemplate kActionTemplates[] = {ActionTemplate::Squat, ActionTemplate::JumpJack,
                                                      ActionTemplate::PullUp};

std::string_view to_string(ActionTemplate t);  // squat | jump_jack | pull_up
ActionTemplate parse_action_template(std::string_view name);

// Camera yaw (degrees, about the body's vertical axis) from `start_frame` on.
struct YawChange {
    long start_frame = 0;
    double yaw_deg = 0.0;
};

struct IncompleteRep {
    int rep_index = 0;
    double completion = 0.5;  // fraction of the full excursion, in (0,1)
};

struct SynthSpec {
    ActionTemplate action_template = ActionTemplate::Squat;
    int n_reps = 3;
    int period_frames = 30;
    double noise_std = 0.0;
    std::vector<YawChange> camera_yaw_schedule;
    std::optional<IncompleteRep> incomplete_rep_at;
    bool sub_action_at_end = false;
    std::uint64_t seed = 0;
    std::string video_id = "synth";

    void validate() const;  // BadSpec
};

struct SynthOutput {
    std::vector<LandmarkFrame> frames;
    int true_count = 0;
    VideoAnnotation annotation;
};

// Every repetition runs pose II -> pose I -> pose II over one period with a
// raised-cosine blend of the joint angles; the body is rebuilt from those
// angles by forward kinematics, so every angle is exact by construction. A
// clip with n reps has n*period + 1 frames (period frames of pose II when n
// is 0), followed by 2*period frames of distractor when requested.
SynthOutput synthesize(const SynthSpec& spec);

// Joint ramp that scores the template: 1 at pose I, 0 at pose II.
GeometricRule template_rule(ActionTemplate t);

// Average (left/right) angles of the template's salient poses.
AngleSet template_pose_angles(ActionTemplate t, bool pose_one);

}  // namespace repcount
