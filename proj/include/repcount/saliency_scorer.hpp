#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repcount/pose_geometry.hpp"

namespace repcount {

// Feedforward scorer: ReLU hidden layers, one logistic output per action.
//
// `weights` is the concatenation, layer by layer, of a row-major
// (out x in) weight matrix followed by its `out` biases.
struct ScorerModel {
    FeatureMode mode = FeatureMode::LandmarksOnly;
    std::vector<std::size_t> layer_sizes;
    std::vector<double> weights;
    std::vector<std::string> action_names;
    std::uint64_t seed = 0;

    std::size_t num_weights() const;
    std::size_t action_index(std::string_view action) const;  // throws UnknownAction
    void validate() const;

    friend bool operator==(const ScorerModel&, const ScorerModel&) = default;
};

std::size_t weight_count(std::span<const std::size_t> layer_sizes);

// Layer sizes are input dim, `hidden...`, number of actions. Weights and
// biases are drawn from U(-r, r) with r = 1/sqrt(fan_in).
ScorerModel make_model(FeatureMode mode, std::span<const std::size_t> hidden, std::vector<std::string> action_names,
                       std::uint64_t seed);

struct LabeledPose {
    FeatureVector features;
    std::string action;
    double saliency_label = 0.0;  // 1 = salient pose I, 0 = salient pose II
};

struct TrainConfig {
    int epochs = 20;
    double learning_rate = 0.05;
    std::size_t batch_size = 0;  // 0 means full batch
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden = {64, 32};
};

double score_frame(const ScorerModel& model, const FeatureVector& features, std::string_view action);

// Mean binary cross-entropy of each example's own action output.
double mean_loss(const ScorerModel& model, std::span<const LabeledPose> batch);

// Analytic gradient of mean_loss with respect to every weight.
std::vector<double> loss_gradient(const ScorerModel& model, std::span<const LabeledPose> batch);

// Plain SGD with a fixed step. `loss_history`, when given, receives the
// full-dataset loss after every epoch.
ScorerModel train(std::span<const LabeledPose> data, const TrainConfig& config,
                  std::vector<double>* loss_history = nullptr);

// Largest per-weight discrepancy between loss_gradient and central finite
// differences. Relative error, except where both gradients are below 1e-7
// in magnitude; there the absolute difference is reported.
double gradient_check(const ScorerModel& model, std::span<const LabeledPose> batch, double epsilon);

// Linear ramp on one joint angle: 1 at `pose_one_deg`, 0 at `pose_two_deg`.
struct GeometricRule {
    Joint joint = Joint::Knee;
    double pose_one_deg = 180.0;
    double pose_two_deg = 90.0;
};

double geometric_score(const AngleSet& angles, const GeometricRule& rule);

// Text checkpoint: a header line, then one weight per line as %.17e.
void write_model(std::ostream& out, const ScorerModel& model);
ScorerModel read_model(std::istream& in);

}  // namespace repcount
