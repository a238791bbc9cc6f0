#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leukex/augment.hpp"
#include "leukex/imagestore.hpp"
#include "leukex/metrics.hpp"
#include "leukex/model.hpp"
#include "leukex/sampling.hpp"

namespace leukex::model {

struct ReferenceNetConfig {
    /// Images are box-downsampled to input_side x input_side before the
    /// dense layers; kModelSide disables downsampling.
    int input_side = 32;
    int hidden_units = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 35;
    int batch_size = 32;
    std::uint64_t seed = 0;
    /// Re-augment every training image each epoch when set.
    std::optional<augment::AugmentConfig> augmentation;
    /// Threads used to assemble (augment + downsample) batches. Results do not
    /// depend on this value.
    unsigned workers = 1;

    std::size_t input_dim() const noexcept {
        return static_cast<std::size_t>(input_side) * static_cast<std::size_t>(input_side) * kChannels;
    }
    void validate() const;
};

void to_json(nlohmann::json& j, const ReferenceNetConfig& cfg);
void from_json(const nlohmann::json& j, ReferenceNetConfig& cfg);

/// Weights of flatten -> dense(hidden, ReLU) -> dense(1, sigmoid).
/// Also used as the container for gradients.
struct Parameters {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // hidden x input_dim, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;

    Parameters() = default;
    Parameters(std::size_t input_dim, std::size_t hidden);

    /// Flat coordinate view over w1, b1, w2, b2 (in that order).
    std::size_t count() const noexcept { return w1.size() + b1.size() + w2.size() + 1; }
    double& coord(std::size_t i);
    double coord(std::size_t i) const { return const_cast<Parameters&>(*this).coord(i); }

    bool all_finite() const;

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for each layer's weights and
/// biases, drawn in the order w1, b1, w2, b2.
Parameters initialize_parameters(const ReferenceNetConfig& cfg);

/// Flattened, downsampled inputs with binary labels.
struct FeatureBatch {
    std::size_t dim = 0;
    std::vector<double> x;  // n x dim, row-major
    std::vector<int> y;

    std::size_t size() const noexcept { return y.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(x).subspan(i * dim, dim);
    }
};

std::vector<double> image_features(const ImageTensor& image, int input_side);
FeatureBatch make_features(std::span<const imagestore::CellImage> images, int input_side, unsigned workers = 1);

/// Positive-class probability per row.
std::vector<double> forward(const Parameters& params, const FeatureBatch& batch);

struct LossAndGradient {
    double loss = 0.0;
    Parameters gradient;
};

/// weighted_bce over the batch and its exact gradient.
LossAndGradient loss_and_gradient(const Parameters& params, const FeatureBatch& batch,
                                  const sampling::ClassWeights& w);

using GradientFn = std::function<LossAndGradient(const Parameters&, const FeatureBatch&, const sampling::ClassWeights&)>;

/// Compares gradient_fn against central finite differences (step 1e-5) on
/// `samples` coordinates drawn from a stream seeded with `seed`. Each
/// coordinate's error is |analytic - numeric| / max(|numeric|, 1e-6); the
/// maximum is returned.
double grad_check(const Parameters& params, const FeatureBatch& batch, const sampling::ClassWeights& w,
                  std::size_t samples = 100, std::uint64_t seed = 0,
                  const GradientFn& gradient_fn = loss_and_gradient);

struct AdamState {
    Parameters m;
    Parameters v;
    std::uint64_t step = 0;

    explicit AdamState(const Parameters& like);
};

void adam_step(Parameters& params, const Parameters& gradient, AdamState& state, const ReferenceNetConfig& cfg);

struct TrainResult {
    Parameters parameters;
    metrics::TrainingHistory history;
};

/// Mini-batch Adam on weighted_bce. After each epoch the training split is
/// re-scored unaugmented (weighted loss, accuracy, F1) and the validation split
/// with unweighted log loss, accuracy and F1. Throws NumericError naming the
/// epoch and batch if a batch loss becomes non-finite.
TrainResult train_reference(std::span<const imagestore::CellImage> train,
                            std::span<const imagestore::CellImage> val, const ReferenceNetConfig& cfg,
                            const sampling::ClassWeights& w);

/// Classifier wrapper around trained parameters.
class ReferenceNet final : public Classifier {
public:
    ReferenceNet(Parameters params, ReferenceNetConfig cfg);

    metrics::ProbabilityMatrix predict_proba(std::span<const ImageTensor> batch) const override;
    std::vector<std::string> class_names() const override { return default_class_names(); }

    const Parameters& parameters() const noexcept { return params_; }
    const ReferenceNetConfig& config() const noexcept { return cfg_; }

    /// Self-describing JSON: format tag, config echo (including seed) and
    /// weights. `meta` is stored verbatim under "meta".
    nlohmann::json to_json(const nlohmann::json& meta = nlohmann::json::object()) const;
    static ReferenceNet from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& path, const nlohmann::json& meta = nlohmann::json::object()) const;
    static ReferenceNet load(const std::filesystem::path& path);

private:
    Parameters params_;
    ReferenceNetConfig cfg_;
};

}  // namespace leukex::model
