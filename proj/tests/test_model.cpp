#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "leukex/error.hpp"
#include "leukex/reference_net.hpp"
#include "test_util.hpp"

namespace leukex {
namespace {

using namespace model;
using imagestore::CellImage;
using testing::bright_dark;

ReferenceNetConfig small_config(int epochs) {
    ReferenceNetConfig cfg;
    cfg.input_side = 8;
    cfg.hidden_units = 8;
    cfg.epochs = epochs;
    cfg.batch_size = 16;
    cfg.seed = 5;
    return cfg;
}

TEST(WeightedBce, Examples) {
    const std::vector<double> half{0.5};
    const std::vector<int> pos{1};
    EXPECT_NEAR(weighted_bce(half, pos, sampling::ClassWeights::uniform(2)), std::log(2.0), 1e-15);
    const sampling::ClassWeights w{{1.5728828562997934, 0.7330170517051705}};
    EXPECT_NEAR(weighted_bce(half, pos, w), 0.7330170517051705 * std::log(2.0), 1e-15);
    EXPECT_NEAR(weighted_bce(half, pos, w), 0.50809, 1e-5);
    const std::vector<double> perfect{1.0, 0.0};
    const std::vector<int> y{1, 0};
    EXPECT_LT(weighted_bce(perfect, y, w), 1e-13);
}

TEST(WeightedBce, UnitWeightsReduceToLogLoss) {
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    std::vector<double> p(50);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = u(gen);
        y[i] = static_cast<int>(gen() % 2);
    }
    EXPECT_NEAR(weighted_bce(p, y, sampling::ClassWeights::uniform(2)),
                metrics::log_loss(y, metrics::ProbabilityMatrix::from_positive(p)), 1e-14);
}

TEST(ReferenceNet, ZeroEpochsReturnsInitialization) {
    const auto data = bright_dark(8, 8, 1);
    const auto cfg = small_config(0);
    const auto r = train_reference(data, data, cfg, sampling::ClassWeights::uniform(2));
    EXPECT_EQ(r.parameters, initialize_parameters(cfg));
    EXPECT_TRUE(r.history.empty());
}

TEST(ReferenceNet, InitializationBounds) {
    const auto cfg = small_config(1);
    const auto p = initialize_parameters(cfg);
    const double b1 = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim()));
    for (double v : p.w1) {
        ASSERT_LE(std::abs(v), b1);
    }
    const double b2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_units));
    for (double v : p.w2) {
        ASSERT_LE(std::abs(v), b2);
    }
}

TEST(ReferenceNet, SameSeedSameParameters) {
    const auto data = bright_dark(20, 8, 2);
    auto cfg = small_config(3);
    cfg.augmentation = augment::AugmentConfig{};
    const auto a = train_reference(data, data, cfg, sampling::ClassWeights::uniform(2));
    cfg.workers = 4;
    const auto b = train_reference(data, data, cfg, sampling::ClassWeights::uniform(2));
    EXPECT_EQ(a.parameters, b.parameters);
    EXPECT_EQ(a.history, b.history);
}

TEST(ReferenceNet, LearnsBrightVersusDark) {
    const auto data = bright_dark(60, 8, 3);
    // Oracle: a threshold on the image mean separates the classes.
    for (const auto& c : data) {
        ASSERT_EQ(c.pixels.mean() > 0.5, c.label == 1);
    }
    const auto r = train_reference(data, data, small_config(200), sampling::ClassWeights::uniform(2));
    ASSERT_EQ(r.history.size(), 200u);
    EXPECT_GE(r.history.epochs().back().accuracy, 0.99);

    // Five-epoch window averages of the training loss never rise.
    const auto& e = r.history.epochs();
    double prev = INFINITY;
    for (std::size_t s = 0; s + 5 <= e.size(); s += 5) {
        double avg = 0.0;
        for (std::size_t i = s; i < s + 5; ++i) {
            avg += e[i].loss / 5.0;
        }
        EXPECT_LE(avg, prev + 1e-12) << "window at epoch " << s + 1;
        prev = avg;
    }
}

FeatureBatch random_batch(std::size_t n, std::size_t dim, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureBatch b;
    b.dim = dim;
    for (std::size_t i = 0; i < n * dim; ++i) {
        b.x.push_back(u(gen));
    }
    for (std::size_t i = 0; i < n; ++i) {
        b.y.push_back(static_cast<int>(i % 2));
    }
    return b;
}

TEST(GradCheck, AnalyticGradientAgreesWithFiniteDifferences) {
    const auto cfg = small_config(1);
    const auto params = initialize_parameters(cfg);
    const auto batch = random_batch(12, cfg.input_dim(), 4);
    const sampling::ClassWeights w{{1.3, 0.8}};
    EXPECT_LT(grad_check(params, batch, w, 200, 1), 1e-4);
}

TEST(GradCheck, ScaledGradientIsCaught) {
    const auto cfg = small_config(1);
    const auto params = initialize_parameters(cfg);
    const auto batch = random_batch(12, cfg.input_dim(), 4);
    const sampling::ClassWeights w{{1.3, 0.8}};
    const GradientFn doubled = [](const Parameters& p, const FeatureBatch& b, const sampling::ClassWeights& cw) {
        auto lg = loss_and_gradient(p, b, cw);
        for (std::size_t i = 0; i < lg.gradient.count(); ++i) {
            lg.gradient.coord(i) *= 2.0;
        }
        return lg;
    };
    EXPECT_GT(grad_check(params, batch, w, 200, 1, doubled), 0.5);
}

TEST(GradCheck, ZeroNetworkOnZeroInput) {
    const Parameters params(12, 4);
    FeatureBatch b;
    b.dim = 12;
    b.x.assign(24, 0.0);
    b.y = {0, 1};
    const auto lg = loss_and_gradient(params, b, sampling::ClassWeights::uniform(2));
    EXPECT_NEAR(lg.loss, std::log(2.0), 1e-15);
    EXPECT_TRUE(lg.gradient.all_finite());
    EXPECT_LT(grad_check(params, b, sampling::ClassWeights::uniform(2), 40, 0), 1e-4);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    const auto cfg = small_config(1);
    auto params = initialize_parameters(cfg);
    const auto before = params;
    AdamState state(params);
    const Parameters zero(params.input_dim, params.hidden);
    for (int i = 0; i < 3; ++i) {
        adam_step(params, zero, state, cfg);
    }
    EXPECT_EQ(params, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    auto cfg = small_config(1);
    Parameters params(2, 1);
    AdamState state(params);
    Parameters g(2, 1);
    g.w1 = {0.3, -2.0};
    adam_step(params, g, state, cfg);
    // m_hat = g, v_hat = g^2 on the first step.
    EXPECT_NEAR(params.w1[0], -cfg.learning_rate * 0.3 / (0.3 + cfg.adam_eps), 1e-15);
    EXPECT_NEAR(params.w1[1], cfg.learning_rate * 2.0 / (2.0 + cfg.adam_eps), 1e-15);
    EXPECT_EQ(params.b2, 0.0);
}

TEST(ReferenceNet, PredictProbaRowsAreStochastic) {
    const auto cfg = small_config(1);
    const ReferenceNet net(initialize_parameters(cfg), cfg);
    std::vector<ImageTensor> batch{testing::noise_tensor(kModelSide, kModelSide, 1),
                                   testing::constant_tensor(kModelSide, kModelSide, 1, 1, 1)};
    const auto p = net.predict_proba(batch);
    ASSERT_EQ(p.rows(), 2u);
    for (std::size_t r = 0; r < 2; ++r) {
        EXPECT_NEAR(p(r, 0) + p(r, 1), 1.0, 1e-6);
    }
    EXPECT_EQ(net.class_names(), (std::vector<std::string>{"Normal", "ALL"}));
}

TEST(ReferenceNet, SaveLoadRoundTrip) {
    testing::TempDir dir("refnet");
    const auto cfg = small_config(1);
    const ReferenceNet net(initialize_parameters(cfg), cfg);
    net.save(dir / "m.json", {{"seed", 5}});
    const auto back = ReferenceNet::load(dir / "m.json");
    EXPECT_EQ(back.parameters(), net.parameters());
    EXPECT_EQ(back.config().input_side, cfg.input_side);
    EXPECT_THROW(ReferenceNet::load(dir / "missing.json"), ModelError);
    imagestore::write_text_file(dir / "bad.json", "{\"format\": \"other\"}");
    EXPECT_THROW(ReferenceNet::load(dir / "bad.json"), ModelError);
}

TEST(ReferenceNet, NonFiniteLossNamesEpoch) {
    auto data = bright_dark(4, 8, 1);
    data[0].pixels.data()[0] = std::numeric_limits<float>::quiet_NaN();
    try {
        train_reference(data, data, small_config(2), sampling::ClassWeights::uniform(2));
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
    }
}

}  // namespace
}  // namespace leukex
