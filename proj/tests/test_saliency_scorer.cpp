#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "repcount/errors.hpp"
#include "repcount/saliency_scorer.hpp"

using namespace repcount;

namespace {

FeatureVector vec(FeatureMode mode, std::vector<double> values) { return {mode, std::move(values)}; }

FeatureVector constant(FeatureMode mode, double v) { return vec(mode, std::vector<double>(feature_dim(mode), v)); }

// Two tight clusters in the 99-d coordinate space around distinct centroids.
struct Clusters {
    std::vector<double> pose_one, pose_two;
    std::vector<LabeledPose> data;
};

Clusters toy_clusters(std::uint64_t seed, int per_class) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.2, 0.8);
    std::uniform_real_distribution<double> jitter(-0.03, 0.03);
    Clusters c;
    for (std::size_t i = 0; i < kCoordDim; ++i) {
        c.pose_one.push_back(u(rng));
        c.pose_two.push_back(u(rng));
    }
    for (int k = 0; k < per_class; ++k) {
        for (int label = 0; label < 2; ++label) {
            std::vector<double> x = label ? c.pose_one : c.pose_two;
            for (double& v : x) v += jitter(rng);
            c.data.push_back({vec(FeatureMode::LandmarksOnly, x), "squat", static_cast<double>(label)});
        }
    }
    return c;
}

// Perceptron: a linear separator with zero training errors exists iff it
// terminates (bounded here by an epoch cap).
bool linearly_separable(const std::vector<LabeledPose>& data, int max_epochs) {
    const std::size_t d = data.front().features.values.size();
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        int mistakes = 0;
        for (const LabeledPose& ex : data) {
            const double y = ex.saliency_label > 0.5 ? 1.0 : -1.0;
            double z = b;
            for (std::size_t i = 0; i < d; ++i) z += w[i] * ex.features.values[i];
            if (y * z <= 0.0) {
                for (std::size_t i = 0; i < d; ++i) w[i] += y * ex.features.values[i];
                b += y;
                ++mistakes;
            }
        }
        if (mistakes == 0) return true;
    }
    return false;
}

ScorerModel zero_model(FeatureMode mode, std::vector<std::size_t> hidden, std::vector<std::string> actions) {
    ScorerModel m = make_model(mode, hidden, std::move(actions), 0);
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    return m;
}

}  // namespace

TEST_CASE("make_model shapes and initialisation range") {
    const std::vector<std::size_t> hidden{64, 32};
    const ScorerModel m = make_model(FeatureMode::LandmarksAvg5, hidden, {"squat", "pull_up"}, 9);
    CHECK(m.layer_sizes == std::vector<std::size_t>{104, 64, 32, 2});
    CHECK(m.num_weights() == 64 * 105 + 32 * 65 + 2 * 33);
    CHECK(m.weights.size() == m.num_weights());
    // First block is fan-in 104.
    const double r0 = 1.0 / std::sqrt(104.0);
    for (std::size_t i = 0; i < 64 * 105; ++i) CHECK(std::abs(m.weights[i]) <= r0);
    CHECK(m == make_model(FeatureMode::LandmarksAvg5, hidden, {"squat", "pull_up"}, 9));
    CHECK(m != make_model(FeatureMode::LandmarksAvg5, hidden, {"squat", "pull_up"}, 10));
}

TEST_CASE("score_frame with all-zero weights is exactly one half") {
    const ScorerModel m = zero_model(FeatureMode::LandmarksLR10, {8, 4}, {"squat"});
    CHECK(score_frame(m, constant(FeatureMode::LandmarksLR10, 0.37), "squat") == 0.5);
    CHECK(score_frame(m, constant(FeatureMode::LandmarksLR10, -12.0), "squat") == 0.5);
}

TEST_CASE("score_frame rejects mismatched modes and unknown actions") {
    const ScorerModel m = make_model(FeatureMode::LandmarksAvg5, std::vector<std::size_t>{4}, {"squat"}, 1);
    try {
        score_frame(m, constant(FeatureMode::LandmarksLeft5, 0.5), "squat");  // same dim, wrong mode
        FAIL("expected ModeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ModeMismatch);
    }
    try {
        score_frame(m, constant(FeatureMode::LandmarksAvg5, 0.5), "bench_press");
        FAIL("expected UnknownAction");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownAction);
        CHECK(e.subject() == "bench_press");
    }
}

TEST_CASE("score_frame stays in [0,1] for extreme inputs") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> wide(-1e6, 1e6);
    const ScorerModel m = make_model(FeatureMode::LandmarksOnly, std::vector<std::size_t>{6, 3}, {"a", "b"}, 2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(99);
        for (double& v : x) v = wide(rng);
        const double s = score_frame(m, vec(FeatureMode::LandmarksOnly, x), trial % 2 ? "a" : "b");
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("trained scorer separates a linearly separable toy set") {
    const Clusters c = toy_clusters(21, 20);
    REQUIRE(linearly_separable(c.data, 1000));

    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 8;
    cfg.seed = 4;
    const ScorerModel m = train(c.data, cfg);
    CHECK(score_frame(m, vec(FeatureMode::LandmarksOnly, c.pose_one), "squat") >= 0.99);
    CHECK(score_frame(m, vec(FeatureMode::LandmarksOnly, c.pose_two), "squat") <= 0.01);
}

TEST_CASE("two-point dataset is fitted below 0.05 loss in 500 full-batch epochs") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(104), b(104);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    // Closed-form separator for two distinct points: w = a - b, midpoint bias.
    double wa = 0.0, wb = 0.0, bias = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        wa += (a[i] - b[i]) * a[i];
        wb += (a[i] - b[i]) * b[i];
        bias -= 0.5 * (a[i] * a[i] - b[i] * b[i]);
    }
    REQUIRE(wa + bias > 0.0);
    REQUIRE(wb + bias < 0.0);

    const std::vector<LabeledPose> data{{vec(FeatureMode::LandmarksAvg5, a), "squat", 1.0},
                                        {vec(FeatureMode::LandmarksAvg5, b), "squat", 0.0}};
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.learning_rate = 0.05;
    cfg.seed = 8;
    std::vector<double> history;
    const ScorerModel m = train(data, cfg, &history);
    REQUIRE(history.size() == 500);
    CHECK(history.back() < 0.05);
    CHECK(mean_loss(m, data) == history.back());
}

TEST_CASE("identical features with opposite labels converge to ln 2") {
    const FeatureVector x = constant(FeatureMode::LandmarksLeft5, 0.4);
    const std::vector<LabeledPose> data{{x, "jump_jack", 1.0}, {x, "jump_jack", 0.0}};
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.learning_rate = 0.05;
    std::vector<double> history;
    const ScorerModel m = train(data, cfg, &history);
    CHECK(std::abs(history.back() - std::log(2.0)) < 0.01);
    CHECK(std::abs(score_frame(m, x, "jump_jack") - 0.5) < 0.05);
}

TEST_CASE("training is reproducible bit for bit from the seed") {
    const Clusters c = toy_clusters(3, 10);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.batch_size = 4;
    cfg.seed = 77;
    const ScorerModel a = train(c.data, cfg);
    const ScorerModel b = train(c.data, cfg);
    CHECK(a.weights == b.weights);
    cfg.seed = 78;
    CHECK(train(c.data, cfg).weights != a.weights);
}

TEST_CASE("full-batch loss never increases with a small step") {
    const Clusters c = toy_clusters(9, 15);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 0;
    cfg.hidden = {16, 8};
    std::vector<double> history;
    train(c.data, cfg, &history);
    for (std::size_t e = 1; e < history.size(); ++e) CHECK(history[e] <= history[e - 1] + 1e-6);
}

TEST_CASE("train input validation") {
    TrainConfig cfg;
    CHECK_THROWS_AS(train({}, cfg), Error);
    try {
        train({}, cfg);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyDataset);
    }

    std::vector<LabeledPose> mixed{{constant(FeatureMode::LandmarksAvg5, 0.1), "squat", 1.0},
                                   {constant(FeatureMode::LandmarksLeft5, 0.2), "squat", 0.0}};
    try {
        train(mixed, cfg);
        FAIL("expected MixedModes");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MixedModes);
    }

    std::vector<LabeledPose> one_sided{{constant(FeatureMode::LandmarksAvg5, 0.1), "squat", 1.0},
                                       {constant(FeatureMode::LandmarksAvg5, 0.2), "squat", 0.0},
                                       {constant(FeatureMode::LandmarksAvg5, 0.3), "pull_up", 1.0}};
    try {
        train(one_sided, cfg);
        FAIL("expected EmptyDataset");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyDataset);
        CHECK(e.subject() == "pull_up");
    }

    std::vector<LabeledPose> soft{{constant(FeatureMode::LandmarksAvg5, 0.1), "squat", 0.7}};
    try {
        train(soft, cfg);
        FAIL("expected BadLabel");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadLabel);
    }

    TrainConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train(mixed, bad), Error);
    bad = cfg;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train(mixed, bad), Error);
}

TEST_CASE("a runaway learning rate surfaces as NonFiniteLoss") {
    const std::vector<LabeledPose> data{{constant(FeatureMode::LandmarksOnly, 1e150), "squat", 1.0},
                                        {constant(FeatureMode::LandmarksOnly, -1e150), "squat", 0.0}};
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 1e300;
    try {
        train(data, cfg);
        FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteLoss);
    }
}

TEST_CASE("gradient_check on a random small model") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ScorerModel m = make_model(FeatureMode::LandmarksOnly, std::vector<std::size_t>{1}, {"a", "b"}, 12);
    REQUIRE(m.num_weights() <= 200);
    std::vector<LabeledPose> batch;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> x(99);
        for (double& v : x) v = u(rng);
        batch.push_back({vec(FeatureMode::LandmarksOnly, x), i % 2 ? "a" : "b", static_cast<double>(i / 2 % 2)});
    }
    CHECK(gradient_check(m, batch, 1e-5) < 1e-4);
}

TEST_CASE("gradient_check at a zero-gradient point") {
    const ScorerModel m = zero_model(FeatureMode::LandmarksAvg5, {3}, {"squat"});
    const FeatureVector x = constant(FeatureMode::LandmarksAvg5, 0.6);
    const std::vector<LabeledPose> batch{{x, "squat", 1.0}, {x, "squat", 0.0}};
    for (double g : loss_gradient(m, batch)) CHECK(std::abs(g) < 1e-12);
    CHECK(gradient_check(m, batch, 1e-5) < 1e-8);
}

TEST_CASE("single-weight logistic gradient matches the hand formula") {
    ScorerModel m = zero_model(FeatureMode::LandmarksOnly, {}, {"squat"});
    REQUIRE(m.num_weights() == 100);
    const double w = 0.7, x = 1.3, y = 1.0;
    m.weights[0] = w;
    std::vector<double> features(99, 0.0);
    features[0] = x;
    const std::vector<LabeledPose> batch{{vec(FeatureMode::LandmarksOnly, features), "squat", y}};
    const std::vector<double> g = loss_gradient(m, batch);
    const double sigma = 1.0 / (1.0 + std::exp(-w * x));
    CHECK(std::abs(g[0] - (sigma - y) * x) < 1e-9);
    CHECK(std::abs(g[99] - (sigma - y)) < 1e-9);  // bias
    for (std::size_t i = 1; i < 99; ++i) CHECK(g[i] == 0.0);
    CHECK(gradient_check(m, batch, 1e-6) < 1e-6);
}

TEST_CASE("geometric_score linear ramp") {
    AngleSet a;
    const GeometricRule rule{Joint::Knee, 180.0, 90.0};
    a.knee_deg = 180.0;
    CHECK(geometric_score(a, rule) == 1.0);
    a.knee_deg = 90.0;
    CHECK(geometric_score(a, rule) == 0.0);
    a.knee_deg = 135.0;
    CHECK(geometric_score(a, rule) == 0.5);
    a.knee_deg = 60.0;
    CHECK(geometric_score(a, rule) == 0.0);  // clamped
    const GeometricRule inverted{Joint::Elbow, 45.0, 172.0};
    a.elbow_deg = 45.0;
    CHECK(geometric_score(a, inverted) == 1.0);
    try {
        geometric_score(a, GeometricRule{Joint::Hip, 100.0, 100.0});
        FAIL("expected BadRule");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadRule);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    const ScorerModel m = make_model(FeatureMode::LandmarksLR10, std::vector<std::size_t>{5, 3}, {"squat", "pull_up"},
                                     0xfeedULL);
    std::ostringstream first;
    write_model(first, m);
    std::istringstream in(first.str());
    const ScorerModel back = read_model(in);
    CHECK(back == m);
    std::ostringstream second;
    write_model(second, back);
    CHECK(second.str() == first.str());
    CHECK(first.str().rfind("repcount-scorer v1 mode=lr10 layers=109,5,3,2 actions=squat,pull_up seed=65261\n", 0) ==
          0);
}

TEST_CASE("checkpoint parse errors carry line numbers") {
    const ScorerModel m = make_model(FeatureMode::LandmarksAvg5, std::vector<std::size_t>{2}, {"squat"}, 1);
    std::ostringstream out;
    write_model(out, m);
    std::string text = out.str();

    {
        std::istringstream in("not-a-checkpoint\n");
        CHECK_THROWS_AS(read_model(in), Error);
    }
    {
        std::string broken = text;
        const std::size_t third = broken.find('\n', broken.find('\n') + 1);
        broken.replace(third + 1, 3, "abc");
        std::istringstream in(broken);
        try {
            read_model(in);
            FAIL("expected ParseError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ParseError);
            CHECK(e.line() == 3);
        }
    }
    {
        std::string truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
        std::istringstream in(truncated);
        CHECK_THROWS_AS(read_model(in), Error);
    }
    ScorerModel bad = m;
    bad.action_names = {"two words"};
    std::ostringstream sink;
    CHECK_THROWS_AS(write_model(sink, bad), Error);
}
