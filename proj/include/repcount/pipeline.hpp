#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repcount/action_trigger.hpp"
#include "repcount/metrics_eval.hpp"
#include "repcount/pose_geometry.hpp"
#include "repcount/saliency_scorer.hpp"

namespace repcount {

// Returns the saliency score of one frame, or nullopt when the frame cannot
// be scored (low visibility, collapsed landmarks).
using FrameScorer = std::function<std::optional<double>(const LandmarkFrame&)>;

FrameScorer geometric_scorer(GeometricRule rule, GeometryConfig geometry = {});
FrameScorer model_scorer(const ScorerModel& model, std::string action, GeometryConfig geometry = {});

// Unscorable frames are masked out and carry the last valid score forward
// (0.5 before the first valid frame).
DensityMap build_density_map(std::span<const LandmarkFrame> frames, const FrameScorer& scorer, std::string video_id,
                             std::string action);

// Labeled poses for every annotated salient frame found in `frames`.
// Frames that fail the visibility gate are skipped.
std::vector<LabeledPose> labeled_poses(std::span<const LandmarkFrame> frames, const VideoAnnotation& annotation,
                                       FeatureMode mode, const GeometryConfig& geometry = {});

}  // namespace repcount
