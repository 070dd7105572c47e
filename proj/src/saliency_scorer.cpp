#include "repcount/saliency_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "repcount/errors.hpp"

namespace repcount {

std::size_t weight_count(std::span<const std::size_t> layer_sizes) {
    std::size_t n = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) n += layer_sizes[l] * (layer_sizes[l - 1] + 1);
    return n;
}

std::size_t ScorerModel::num_weights() const { return weight_count(layer_sizes); }

std::size_t ScorerModel::action_index(std::string_view action) const {
    for (std::size_t i = 0; i < action_names.size(); ++i) {
        if (action_names[i] == action) return i;
    }
    throw Error(ErrorCode::UnknownAction, "model does not score this action", std::string(action));
}

void ScorerModel::validate() const {
    if (layer_sizes.size() < 2) throw Error(ErrorCode::BadConfig, "model needs an input and an output layer");
    if (layer_sizes.front() != feature_dim(mode)) {
        throw Error(ErrorCode::ModeMismatch, "input layer " + std::to_string(layer_sizes.front()) +
                                                 " does not match mode " + std::string(to_string(mode)));
    }
    if (layer_sizes.back() != action_names.size() || action_names.empty()) {
        throw Error(ErrorCode::BadConfig, "output width must equal the number of actions");
    }
    for (std::size_t width : layer_sizes) {
        if (width == 0) throw Error(ErrorCode::BadConfig, "zero-width layer");
    }
    if (weights.size() != num_weights()) {
        throw Error(ErrorCode::BadConfig, "expected " + std::to_string(num_weights()) + " weights, got " +
                                              std::to_string(weights.size()));
    }
    for (double w : weights) {
        if (!std::isfinite(w)) throw Error(ErrorCode::NonFiniteLoss, "non-finite weight in model");
    }
}

ScorerModel make_model(FeatureMode mode, std::span<const std::size_t> hidden, std::vector<std::string> action_names,
                       std::uint64_t seed) {
    ScorerModel model;
    model.mode = mode;
    model.seed = seed;
    model.layer_sizes.push_back(feature_dim(mode));
    model.layer_sizes.insert(model.layer_sizes.end(), hidden.begin(), hidden.end());
    model.layer_sizes.push_back(action_names.size());
    model.action_names = std::move(action_names);
    model.weights.reserve(model.num_weights());

    std::mt19937_64 rng(seed);
    for (std::size_t l = 1; l < model.layer_sizes.size(); ++l) {
        const std::size_t fan_in = model.layer_sizes[l - 1];
        const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-r, r);
        const std::size_t count = model.layer_sizes[l] * (fan_in + 1);
        for (std::size_t i = 0; i < count; ++i) model.weights.push_back(dist(rng));
    }
    model.validate();
    return model;
}

namespace {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// BCE written on the logit so it stays finite for saturated outputs.
double bce_from_logit(double z, double y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

struct Workspace {
    std::vector<std::vector<double>> activations;  // per layer, post-nonlinearity (input at 0)
    std::vector<std::vector<double>> deltas;
};

// Returns the logit of output `out_index`. Hidden activations are kept in `ws`.
double forward(const ScorerModel& model, std::span<const double> input, std::size_t out_index, Workspace& ws) {
    const auto& sizes = model.layer_sizes;
    const std::size_t layers = sizes.size();
    ws.activations.resize(layers);
    ws.activations[0].assign(input.begin(), input.end());
    std::size_t offset = 0;
    for (std::size_t l = 1; l < layers; ++l) {
        const std::size_t n_in = sizes[l - 1];
        const std::size_t n_out = sizes[l];
        const double* w = model.weights.data() + offset;
        const double* b = w + n_out * n_in;
        const auto& prev = ws.activations[l - 1];
        auto& cur = ws.activations[l];
        cur.assign(n_out, 0.0);
        const bool output_layer = l + 1 == layers;
        for (std::size_t j = 0; j < n_out; ++j) {
            if (output_layer && j != out_index) continue;
            double z = b[j];
            const double* row = w + j * n_in;
            for (std::size_t k = 0; k < n_in; ++k) z += row[k] * prev[k];
            cur[j] = output_layer ? z : std::max(0.0, z);
        }
        offset += n_out * (n_in + 1);
    }
    return ws.activations.back()[out_index];
}

void check_features(const ScorerModel& model, const FeatureVector& features) {
    if (features.mode != model.mode) {
        throw Error(ErrorCode::ModeMismatch, "features are " + std::string(to_string(features.mode)) +
                                                 ", model expects " + std::string(to_string(model.mode)));
    }
    if (features.values.size() != model.layer_sizes.front()) {
        throw Error(ErrorCode::ModeMismatch, "feature dimension does not match the model input layer");
    }
}

// Adds d(loss_i)/dw * scale into `grad` for one example.
void backward(const ScorerModel& model, std::size_t out_index, double dlogit, Workspace& ws,
              std::vector<double>& grad) {
    const auto& sizes = model.layer_sizes;
    const std::size_t layers = sizes.size();
    ws.deltas.resize(layers);
    ws.deltas[layers - 1].assign(sizes[layers - 1], 0.0);
    ws.deltas[layers - 1][out_index] = dlogit;

    // Offsets of each layer's block in the flat weight array.
    std::vector<std::size_t> offsets(layers, 0);
    for (std::size_t l = 1; l + 1 < layers; ++l) offsets[l + 1] = offsets[l] + sizes[l] * (sizes[l - 1] + 1);

    for (std::size_t l = layers - 1; l >= 1; --l) {
        const std::size_t n_in = sizes[l - 1];
        const std::size_t n_out = sizes[l];
        const double* w = model.weights.data() + offsets[l];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + n_out * n_in;
        const auto& prev = ws.activations[l - 1];
        const auto& delta = ws.deltas[l];
        auto& prev_delta = ws.deltas[l - 1];
        prev_delta.assign(n_in, 0.0);
        for (std::size_t j = 0; j < n_out; ++j) {
            const double d = delta[j];
            if (d == 0.0) continue;
            gb[j] += d;
            double* grow = gw + j * n_in;
            const double* wrow = w + j * n_in;
            for (std::size_t k = 0; k < n_in; ++k) {
                grow[k] += d * prev[k];
                prev_delta[k] += d * wrow[k];
            }
        }
        if (l >= 2) {
            // ReLU derivative of the layer below (taken as 0 at exactly 0).
            for (std::size_t k = 0; k < n_in; ++k) {
                if (prev[k] <= 0.0) prev_delta[k] = 0.0;
            }
        }
    }
}

template <typename IndexRange>
double accumulate_gradient(const ScorerModel& model, std::span<const LabeledPose> data, const IndexRange& indices,
                           std::size_t count, std::vector<double>& grad) {
    Workspace ws;
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t i : indices) {
        const LabeledPose& ex = data[i];
        const std::size_t out = model.action_index(ex.action);
        const double z = forward(model, ex.features.values, out, ws);
        loss += bce_from_logit(z, ex.saliency_label);
        backward(model, out, (logistic(z) - ex.saliency_label) * inv, ws, grad);
    }
    return loss * inv;
}

void check_batch(const ScorerModel& model, std::span<const LabeledPose> batch) {
    for (const LabeledPose& ex : batch) check_features(model, ex.features);
}

}  // namespace

double score_frame(const ScorerModel& model, const FeatureVector& features, std::string_view action) {
    check_features(model, features);
    const std::size_t out = model.action_index(action);
    Workspace ws;
    return logistic(forward(model, features.values, out, ws));
}

double mean_loss(const ScorerModel& model, std::span<const LabeledPose> batch) {
    if (batch.empty()) return 0.0;
    check_batch(model, batch);
    Workspace ws;
    double loss = 0.0;
    for (const LabeledPose& ex : batch) {
        loss += bce_from_logit(forward(model, ex.features.values, model.action_index(ex.action), ws),
                               ex.saliency_label);
    }
    return loss / static_cast<double>(batch.size());
}

std::vector<double> loss_gradient(const ScorerModel& model, std::span<const LabeledPose> batch) {
    std::vector<double> grad(model.num_weights(), 0.0);
    if (batch.empty()) return grad;
    check_batch(model, batch);
    std::vector<std::size_t> all(batch.size());
    std::iota(all.begin(), all.end(), 0);
    accumulate_gradient(model, batch, all, all.size(), grad);
    return grad;
}

ScorerModel train(std::span<const LabeledPose> data, const TrainConfig& config, std::vector<double>* loss_history) {
    if (config.epochs < 1) throw Error(ErrorCode::BadConfig, "epochs must be >= 1");
    if (!(config.learning_rate > 0.0)) throw Error(ErrorCode::BadConfig, "learning rate must be > 0");
    if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no labeled poses");

    const FeatureMode mode = data.front().features.mode;
    std::map<std::string, std::pair<int, int>> label_counts;  // action -> (#pose II, #pose I)
    for (const LabeledPose& ex : data) {
        if (ex.features.mode != mode) throw Error(ErrorCode::MixedModes, "training set mixes feature modes");
        if (ex.features.values.size() != feature_dim(mode)) {
            throw Error(ErrorCode::ModeMismatch, "feature vector dimension does not match its mode");
        }
        if (ex.saliency_label == 1.0) {
            ++label_counts[ex.action].second;
        } else if (ex.saliency_label == 0.0) {
            ++label_counts[ex.action].first;
        } else {
            throw Error(ErrorCode::BadLabel, "saliency label must be exactly 0 or 1", ex.action);
        }
    }
    std::vector<std::string> actions;
    for (const auto& [action, counts] : label_counts) {
        if (counts.first == 0 || counts.second == 0) {
            throw Error(ErrorCode::EmptyDataset, "need at least one example of each salient pose", action);
        }
        actions.push_back(action);
    }

    ScorerModel model = make_model(mode, config.hidden, std::move(actions), config.seed);
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    const std::size_t n = data.size();
    const std::size_t batch = (config.batch_size == 0 || config.batch_size >= n) ? n : config.batch_size;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(model.num_weights());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < n) std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            accumulate_gradient(model, data, idx, idx.size(), grad);
            for (std::size_t i = 0; i < grad.size(); ++i) model.weights[i] -= config.learning_rate * grad[i];
        }
        const double loss = mean_loss(model, data);
        if (!std::isfinite(loss)) {
            throw Error(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch + 1));
        }
        if (loss_history) loss_history->push_back(loss);
    }
    model.validate();
    return model;
}

double gradient_check(const ScorerModel& model, std::span<const LabeledPose> batch, double epsilon) {
    const std::vector<double> analytic = loss_gradient(model, batch);
    ScorerModel probe = model;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.weights.size(); ++i) {
        const double original = probe.weights[i];
        probe.weights[i] = original + epsilon;
        const double up = mean_loss(probe, batch);
        probe.weights[i] = original - epsilon;
        const double down = mean_loss(probe, batch);
        probe.weights[i] = original;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double diff = std::abs(analytic[i] - numeric);
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
        worst = std::max(worst, scale < 1e-7 ? diff : diff / scale);
    }
    return worst;
}

double geometric_score(const AngleSet& angles, const GeometricRule& rule) {
    if (rule.pose_one_deg == rule.pose_two_deg) {
        throw Error(ErrorCode::BadRule, "calibration angles must differ", std::string(to_string(rule.joint)));
    }
    const double t = (angles.get(rule.joint) - rule.pose_two_deg) / (rule.pose_one_deg - rule.pose_two_deg);
    return std::clamp(t, 0.0, 1.0);
}

namespace {

constexpr std::string_view kCheckpointMagic = "repcount-scorer";
constexpr int kCheckpointVersion = 1;

bool is_plain_token(std::string_view s) {
    if (s.empty()) return false;
    return std::none_of(s.begin(), s.end(), [](char c) {
        return c == ',' || c == '=' || c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
}

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

}  // namespace

void write_model(std::ostream& out, const ScorerModel& model) {
    model.validate();
    for (const std::string& name : model.action_names) {
        if (!is_plain_token(name)) {
            throw Error(ErrorCode::BadConfig, "action names may not contain whitespace, ',' or '='", name);
        }
    }
    out << kCheckpointMagic << " v" << kCheckpointVersion << " mode=" << to_string(model.mode) << " layers=";
    for (std::size_t i = 0; i < model.layer_sizes.size(); ++i) out << (i ? "," : "") << model.layer_sizes[i];
    out << " actions=";
    for (std::size_t i = 0; i < model.action_names.size(); ++i) out << (i ? "," : "") << model.action_names[i];
    out << " seed=" << model.seed << '\n';
    char buf[64];
    for (double w : model.weights) {
        std::snprintf(buf, sizeof buf, "%.17e\n", w);
        out << buf;
    }
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing checkpoint");
}

ScorerModel read_model(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw Error(ErrorCode::ParseError, "empty checkpoint", {}, 1);
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != kCheckpointMagic) throw Error(ErrorCode::ParseError, "not a scorer checkpoint", {}, 1);
    if (version != "v" + std::to_string(kCheckpointVersion)) {
        throw Error(ErrorCode::ParseError, "unsupported checkpoint version " + version, {}, 1);
    }
    ScorerModel model;
    bool have_mode = false, have_layers = false, have_actions = false, have_seed = false;
    std::string field;
    while (hs >> field) {
        const std::size_t eq = field.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "bad header field '" + field + "'", {}, 1);
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        try {
            if (key == "mode") {
                model.mode = parse_feature_mode(value);
                have_mode = true;
            } else if (key == "layers") {
                for (const std::string& part : split(value, ',')) {
                    std::size_t used = 0;
                    const unsigned long v = std::stoul(part, &used);
                    if (used != part.size()) throw std::invalid_argument(part);
                    model.layer_sizes.push_back(v);
                }
                have_layers = true;
            } else if (key == "actions") {
                model.action_names = split(value, ',');
                have_actions = true;
            } else if (key == "seed") {
                std::size_t used = 0;
                model.seed = std::stoull(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                have_seed = true;
            } else {
                throw Error(ErrorCode::ParseError, "unknown header key '" + key + "'", {}, 1);
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "bad value for '" + key + "'", {}, 1);
        }
    }
    if (!(have_mode && have_layers && have_actions && have_seed)) {
        throw Error(ErrorCode::ParseError, "header needs mode, layers, actions and seed", {}, 1);
    }

    const std::size_t expected = model.num_weights();
    model.weights.reserve(expected);
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) throw Error(ErrorCode::ParseError, "blank line", {}, line_no);
        char* end = nullptr;
        const double w = std::strtod(line.c_str(), &end);
        if (end != line.c_str() + line.size()) throw Error(ErrorCode::ParseError, "bad weight", {}, line_no);
        model.weights.push_back(w);
    }
    if (model.weights.size() != expected) {
        throw Error(ErrorCode::ParseError,
                    "expected " + std::to_string(expected) + " weights, found " + std::to_string(model.weights.size()),
                    {}, line_no);
    }
    try {
        model.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what(), {}, 1);
    }
    return model;
}

}  // namespace repcount
