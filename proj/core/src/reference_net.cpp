#include "leukex/reference_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "leukex/error.hpp"
#include "leukex/parallel.hpp"
#include "leukex/random_stream.hpp"

namespace leukex::model {

namespace {

constexpr std::uint64_t kAugmentStreamBase = 1ULL << 48;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kGradCheckFloor = 1e-6;
constexpr const char* kFormatTag = "leukex.reference_net";
constexpr int kFormatVersion = 1;

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

metrics::ConfusionCounts tally(std::span<const double> p, std::span<const int> y) {
    return metrics::confusion(y, metrics::ProbabilityMatrix::from_positive(p));
}

FeatureBatch gather(const FeatureBatch& all, std::span<const std::size_t> rows) {
    FeatureBatch b;
    b.dim = all.dim;
    b.x.reserve(rows.size() * all.dim);
    b.y.reserve(rows.size());
    for (std::size_t r : rows) {
        const auto src = all.row(r);
        b.x.insert(b.x.end(), src.begin(), src.end());
        b.y.push_back(all.y[r]);
    }
    return b;
}

}  // namespace

void ReferenceNetConfig::validate() const {
    if (input_side < 1 || input_side > kModelSide) {
        throw ArgumentError("input_side must lie in 1..299");
    }
    if (hidden_units < 1) {
        throw ArgumentError("hidden_units must be positive");
    }
    if (!(learning_rate > 0.0) || !(adam_eps > 0.0)) {
        throw ArgumentError("learning_rate and adam_eps must be positive");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ArgumentError("Adam betas must lie in [0, 1)");
    }
    if (epochs < 0) {
        throw ArgumentError("epochs must be non-negative");
    }
    if (batch_size < 1) {
        throw ArgumentError("batch_size must be at least 1");
    }
    if (augmentation) {
        augmentation->validate();
    }
}

void to_json(nlohmann::json& j, const ReferenceNetConfig& cfg) {
    j = nlohmann::json{
        {"input_side", cfg.input_side},
        {"hidden_units", cfg.hidden_units},
        {"learning_rate", cfg.learning_rate},
        {"adam_beta1", cfg.adam_beta1},
        {"adam_beta2", cfg.adam_beta2},
        {"adam_eps", cfg.adam_eps},
        {"epochs", cfg.epochs},
        {"batch_size", cfg.batch_size},
        {"seed", cfg.seed},
        {"augmentation", cfg.augmentation ? nlohmann::json(*cfg.augmentation) : nlohmann::json(nullptr)},
    };
}

void from_json(const nlohmann::json& j, ReferenceNetConfig& cfg) {
    cfg.input_side = j.value("input_side", cfg.input_side);
    cfg.hidden_units = j.value("hidden_units", cfg.hidden_units);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("augmentation") && !j["augmentation"].is_null()) {
        cfg.augmentation = j["augmentation"].get<augment::AugmentConfig>();
    } else {
        cfg.augmentation.reset();
    }
}

Parameters::Parameters(std::size_t in, std::size_t h)
    : input_dim(in), hidden(h), w1(in * h, 0.0), b1(h, 0.0), w2(h, 0.0), b2(0.0) {}

double& Parameters::coord(std::size_t i) {
    if (i < w1.size()) {
        return w1[i];
    }
    i -= w1.size();
    if (i < b1.size()) {
        return b1[i];
    }
    i -= b1.size();
    if (i < w2.size()) {
        return w2[i];
    }
    if (i == w2.size()) {
        return b2;
    }
    throw ArgumentError("parameter coordinate out of range");
}

bool Parameters::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return finite(w1) && finite(b1) && finite(w2) && std::isfinite(b2);
}

Parameters initialize_parameters(const ReferenceNetConfig& cfg) {
    cfg.validate();
    Parameters p(cfg.input_dim(), static_cast<std::size_t>(cfg.hidden_units));
    RandomStream rng = RandomStream::substream(cfg.seed, 0);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(p.input_dim));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(p.hidden));
    for (double& v : p.w1) {
        v = rng.uniform(-bound1, bound1);
    }
    for (double& v : p.b1) {
        v = rng.uniform(-bound1, bound1);
    }
    for (double& v : p.w2) {
        v = rng.uniform(-bound2, bound2);
    }
    p.b2 = rng.uniform(-bound2, bound2);
    return p;
}

std::vector<double> image_features(const ImageTensor& image, int input_side) {
    if (image.height() < input_side || image.width() < input_side) {
        throw ModelError("image " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                         " is smaller than the network input side " + std::to_string(input_side));
    }
    const bool native = image.height() == input_side && image.width() == input_side;
    const ImageTensor small = native ? image : downsample_area(image, input_side);
    const auto d = small.data();
    return std::vector<double>(d.begin(), d.end());
}

FeatureBatch make_features(std::span<const imagestore::CellImage> images, int input_side, unsigned workers) {
    FeatureBatch b;
    b.dim = static_cast<std::size_t>(input_side) * static_cast<std::size_t>(input_side) * kChannels;
    b.x.assign(images.size() * b.dim, 0.0);
    b.y.resize(images.size());
    parallel_for(images.size(), workers, [&](std::size_t i) {
        const auto f = image_features(images[i].pixels, input_side);
        std::copy(f.begin(), f.end(), b.x.begin() + static_cast<std::ptrdiff_t>(i * b.dim));
        b.y[i] = images[i].label;
    });
    return b;
}

std::vector<double> forward(const Parameters& params, const FeatureBatch& batch) {
    if (batch.dim != params.input_dim) {
        throw ModelError("feature dimension " + std::to_string(batch.dim) + " does not match network input " +
                         std::to_string(params.input_dim));
    }
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double* x = batch.x.data() + i * batch.dim;
        double z = params.b2;
        for (std::size_t h = 0; h < params.hidden; ++h) {
            const double* row = params.w1.data() + h * params.input_dim;
            double a = params.b1[h];
            for (std::size_t k = 0; k < params.input_dim; ++k) {
                a += row[k] * x[k];
            }
            if (a > 0.0) {
                z += params.w2[h] * a;
            }
        }
        out[i] = sigmoid(z);
    }
    return out;
}

LossAndGradient loss_and_gradient(const Parameters& params, const FeatureBatch& batch,
                                  const sampling::ClassWeights& w) {
    if (batch.dim != params.input_dim) {
        throw ModelError("feature dimension does not match network input");
    }
    if (batch.size() == 0) {
        throw ArgumentError("gradient of an empty batch is undefined");
    }
    LossAndGradient out{0.0, Parameters(params.input_dim, params.hidden)};
    Parameters& g = out.gradient;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> pre(params.hidden);
    std::vector<double> probs(batch.size());

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double* x = batch.x.data() + i * batch.dim;
        double z = params.b2;
        for (std::size_t h = 0; h < params.hidden; ++h) {
            const double* row = params.w1.data() + h * params.input_dim;
            double a = params.b1[h];
            for (std::size_t k = 0; k < params.input_dim; ++k) {
                a += row[k] * x[k];
            }
            pre[h] = a;
            if (a > 0.0) {
                z += params.w2[h] * a;
            }
        }
        const double p = sigmoid(z);
        probs[i] = p;
        const int y = batch.y[i];
        // d/dz of -w (y log p + (1-y) log(1-p)); zero where the loss clip is active.
        const bool clipped = p < metrics::kLogLossEpsilon || p > 1.0 - metrics::kLogLossEpsilon;
        const double dz = clipped ? 0.0 : w[y] * (p - static_cast<double>(y)) * inv_n;
        g.b2 += dz;
        for (std::size_t h = 0; h < params.hidden; ++h) {
            if (pre[h] <= 0.0) {
                continue;
            }
            g.w2[h] += dz * pre[h];
            const double dh = dz * params.w2[h];
            g.b1[h] += dh;
            double* grow = g.w1.data() + h * params.input_dim;
            for (std::size_t k = 0; k < params.input_dim; ++k) {
                grow[k] += dh * x[k];
            }
        }
    }
    out.loss = weighted_bce(probs, batch.y, w);
    return out;
}

double grad_check(const Parameters& params, const FeatureBatch& batch, const sampling::ClassWeights& w,
                  std::size_t samples, std::uint64_t seed, const GradientFn& gradient_fn) {
    if (batch.size() == 0) {
        throw ArgumentError("grad_check needs a non-empty batch");
    }
    const Parameters analytic = gradient_fn(params, batch, w).gradient;
    Parameters probe = params;
    RandomStream rng(seed);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto idx = static_cast<std::size_t>(rng.below(params.count()));
        const double original = probe.coord(idx);
        probe.coord(idx) = original + kFiniteDifferenceStep;
        const double up = weighted_bce(forward(probe, batch), batch.y, w);
        probe.coord(idx) = original - kFiniteDifferenceStep;
        const double down = weighted_bce(forward(probe, batch), batch.y, w);
        probe.coord(idx) = original;
        const double numeric = (up - down) / (2.0 * kFiniteDifferenceStep);
        const double a = analytic.coord(idx);
        const double err = std::abs(a - numeric) / std::max(std::abs(numeric), kGradCheckFloor);
        if (!std::isfinite(a) || !std::isfinite(numeric)) {
            return std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, err);
    }
    return worst;
}

AdamState::AdamState(const Parameters& like) : m(like.input_dim, like.hidden), v(like.input_dim, like.hidden) {}

void adam_step(Parameters& params, const Parameters& gradient, AdamState& state, const ReferenceNetConfig& cfg) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
    auto update = [&](double& p, double g, double& m, double& v) {
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
        const double m_hat = m / c1;
        const double v_hat = v / c2;
        p -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    };
    auto sweep = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                     std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            update(p[i], g[i], m[i], v[i]);
        }
    };
    sweep(params.w1, gradient.w1, state.m.w1, state.v.w1);
    sweep(params.b1, gradient.b1, state.m.b1, state.v.b1);
    sweep(params.w2, gradient.w2, state.m.w2, state.v.w2);
    update(params.b2, gradient.b2, state.m.b2, state.v.b2);
}

TrainResult train_reference(std::span<const imagestore::CellImage> train,
                            std::span<const imagestore::CellImage> val, const ReferenceNetConfig& cfg,
                            const sampling::ClassWeights& w) {
    cfg.validate();
    if (train.empty() || val.empty()) {
        throw ArgumentError("train_reference needs non-empty training and validation splits");
    }
    for (const auto& img : train) {
        if (img.label != 0 && img.label != 1) {
            throw ArgumentError("train_reference: labels must be binary");
        }
    }
    if (w.size() != 2) {
        throw ArgumentError("train_reference: expected two class weights");
    }

    TrainResult result{initialize_parameters(cfg), {}};
    if (cfg.epochs == 0) {
        return result;
    }
    Parameters& params = result.parameters;

    const FeatureBatch base = make_features(train, cfg.input_side, cfg.workers);
    const FeatureBatch val_features = make_features(val, cfg.input_side, cfg.workers);
    AdamState state(params);
    const std::size_t n = train.size();
    std::vector<std::size_t> order(n);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        FeatureBatch augmented;
        const FeatureBatch* source = &base;
        if (cfg.augmentation) {
            augmented.dim = base.dim;
            augmented.y = base.y;
            augmented.x.assign(base.x.size(), 0.0);
            parallel_for(n, cfg.workers, [&](std::size_t i) {
                RandomStream rng = RandomStream::substream(
                    cfg.augmentation->seed, kAugmentStreamBase + static_cast<std::uint64_t>(epoch - 1) * n + i);
                const auto f = image_features(augment::augment_sample(train[i].pixels, rng, *cfg.augmentation),
                                              cfg.input_side);
                std::copy(f.begin(), f.end(), augmented.x.begin() + static_cast<std::ptrdiff_t>(i * base.dim));
            });
            source = &augmented;
        }

        std::iota(order.begin(), order.end(), std::size_t{0});
        RandomStream shuffle_rng = RandomStream::substream(cfg.seed, static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(std::span<std::size_t>(order));

        const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t start = 0, b = 1; start < n; start += batch_size, ++b) {
            const std::size_t end = std::min(n, start + batch_size);
            const FeatureBatch batch = gather(*source, std::span<const std::size_t>(order).subspan(start, end - start));
            const LossAndGradient lg = loss_and_gradient(params, batch, w);
            if (!std::isfinite(lg.loss) || !lg.gradient.all_finite()) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            adam_step(params, lg.gradient, state, cfg);
        }

        const auto p_train = forward(params, base);
        const auto p_val = forward(params, val_features);
        metrics::EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = weighted_bce(p_train, base.y, w);
        const auto train_counts = tally(p_train, base.y);
        rec.accuracy = metrics::accuracy(train_counts);
        rec.f1 = metrics::f1(train_counts);
        const auto val_matrix = metrics::ProbabilityMatrix::from_positive(p_val);
        rec.val_loss = metrics::log_loss(val_features.y, val_matrix);
        const auto val_counts = metrics::confusion(val_features.y, val_matrix);
        rec.val_accuracy = metrics::accuracy(val_counts);
        rec.val_f1 = metrics::f1(val_counts);
        if (!std::isfinite(rec.loss) || !std::isfinite(rec.val_loss)) {
            throw NumericError("non-finite epoch loss at epoch " + std::to_string(epoch));
        }
        result.history.append(rec);
    }
    return result;
}

ReferenceNet::ReferenceNet(Parameters params, ReferenceNetConfig cfg) : params_(std::move(params)), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (params_.input_dim != cfg_.input_dim() || params_.hidden != static_cast<std::size_t>(cfg_.hidden_units) ||
        params_.w1.size() != params_.input_dim * params_.hidden || params_.b1.size() != params_.hidden ||
        params_.w2.size() != params_.hidden) {
        throw ModelError("reference network parameters do not match their configuration");
    }
}

metrics::ProbabilityMatrix ReferenceNet::predict_proba(std::span<const ImageTensor> batch) const {
    FeatureBatch f;
    f.dim = cfg_.input_dim();
    f.x.reserve(batch.size() * f.dim);
    f.y.assign(batch.size(), 0);
    for (const auto& img : batch) {
        const auto v = image_features(img, cfg_.input_side);
        f.x.insert(f.x.end(), v.begin(), v.end());
    }
    return metrics::ProbabilityMatrix::from_positive(forward(params_, f));
}

nlohmann::json ReferenceNet::to_json(const nlohmann::json& meta) const {
    nlohmann::json j;
    j["format"] = kFormatTag;
    j["version"] = kFormatVersion;
    j["class_names"] = class_names();
    j["config"] = cfg_;
    j["input_dim"] = params_.input_dim;
    j["hidden"] = params_.hidden;
    j["w1"] = params_.w1;
    j["b1"] = params_.b1;
    j["w2"] = params_.w2;
    j["b2"] = params_.b2;
    j["meta"] = meta;
    return j;
}

ReferenceNet ReferenceNet::from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != kFormatTag) {
            throw ModelError("not a reference network file (format tag missing)");
        }
        if (j.value("version", 0) != kFormatVersion) {
            throw ModelError("unsupported reference network version");
        }
        ReferenceNetConfig cfg = j.at("config").get<ReferenceNetConfig>();
        Parameters p;
        p.input_dim = j.at("input_dim").get<std::size_t>();
        p.hidden = j.at("hidden").get<std::size_t>();
        p.w1 = j.at("w1").get<std::vector<double>>();
        p.b1 = j.at("b1").get<std::vector<double>>();
        p.w2 = j.at("w2").get<std::vector<double>>();
        p.b2 = j.at("b2").get<double>();
        if (!p.all_finite()) {
            throw ModelError("reference network file contains non-finite weights");
        }
        return ReferenceNet(std::move(p), std::move(cfg));
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed reference network file: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ModelError(std::string("invalid reference network configuration: ") + e.what());
    }
}

void ReferenceNet::save(const std::filesystem::path& path, const nlohmann::json& meta) const {
    imagestore::write_text_file(path, to_json(meta).dump() + "\n");
}

ReferenceNet ReferenceNet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ModelError("cannot open model file " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

}  // namespace leukex::model
