#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "leukex/augment.hpp"
#include "leukex/explain.hpp"
#include "leukex/reference_net.hpp"
#include "leukex/sampling.hpp"
#include "leukex/slic.hpp"
#include "leukex/surrogate.hpp"

namespace {

using namespace leukex;

ImageTensor noise(int h, int w, std::uint32_t seed) {
    ImageTensor t(h, w);
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : t.data()) {
        v = u(gen);
    }
    return t;
}

// Smooth blobs give SLIC realistic work; pure noise converges trivially.
ImageTensor blobs(int side) {
    ImageTensor t(side, side);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            t.at(r, c, 0) = 0.5f + 0.4f * std::sin(r * 0.05f) * std::cos(c * 0.07f);
            t.at(r, c, 1) = 0.5f + 0.3f * std::cos(r * 0.03f + c * 0.02f);
            t.at(r, c, 2) = 0.5f + 0.2f * std::sin((r + c) * 0.04f);
        }
    }
    return t;
}

class MeanRedClassifier final : public model::Classifier {
public:
    metrics::ProbabilityMatrix predict_proba(std::span<const ImageTensor> batch) const override {
        std::vector<double> p;
        for (const auto& img : batch) {
            double s = 0.0;
            const auto d = img.data();
            for (std::size_t i = 0; i < d.size(); i += 3) {
                s += d[i];
            }
            p.push_back(s / static_cast<double>(d.size() / 3));
        }
        return metrics::ProbabilityMatrix::from_positive(p);
    }
    std::vector<std::string> class_names() const override { return model::default_class_names(); }
};

void BM_ResizeBilinear(benchmark::State& state) {
    const auto src = noise(450, 450, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(resize_bilinear(src, kModelSide, kModelSide));
    }
}
BENCHMARK(BM_ResizeBilinear)->Unit(benchmark::kMillisecond);

void BM_AugmentSample(benchmark::State& state) {
    const auto img = noise(kModelSide, kModelSide, 2);
    RandomStream rng(3);
    const augment::AugmentConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(augment::augment_sample(img, rng, cfg));
    }
}
BENCHMARK(BM_AugmentSample)->Unit(benchmark::kMillisecond);

void BM_StratifiedKFold(benchmark::State& state) {
    std::vector<int> labels(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = i % 3 == 0 ? 0 : 1;
    }
    const sampling::LabelVector lv(labels, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sampling::stratified_kfold(lv, 3, 7));
    }
}
BENCHMARK(BM_StratifiedKFold)->Arg(15114)->Unit(benchmark::kMicrosecond);

void BM_Slic(benchmark::State& state) {
    const auto img = blobs(kModelSide);
    explain::SlicParams p;
    p.n_segments = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(explain::slic_segment(img, p));
    }
}
BENCHMARK(BM_Slic)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_FitSurrogate(benchmark::State& state) {
    RandomStream rng(4);
    const auto segments = static_cast<std::size_t>(state.range(0));
    const auto masks = explain::sample_masks(segments, 1000, rng);
    std::vector<double> y(masks.rows);
    for (std::size_t r = 0; r < masks.rows; ++r) {
        y[r] = 0.1 * masks(r, 0) + 0.01 * static_cast<double>(r % 7);
    }
    const auto w = explain::kernel_weights(masks);
    for (auto _ : state) {
        benchmark::DoNotOptimize(explain::fit_surrogate(masks, y, w));
    }
}
BENCHMARK(BM_FitSurrogate)->Arg(12)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_Explain(benchmark::State& state) {
    const auto img = blobs(kModelSide);
    const MeanRedClassifier clf;
    explain::ExplainParams p;
    p.workers = static_cast<unsigned>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(explain::explain(img, clf, p));
    }
}
BENCHMARK(BM_Explain)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ReferenceEpoch(benchmark::State& state) {
    std::vector<imagestore::CellImage> data;
    for (int i = 0; i < 64; ++i) {
        imagestore::CellImage c;
        c.pixels = noise(kModelSide, kModelSide, static_cast<std::uint32_t>(i));
        c.label = i % 2;
        data.push_back(std::move(c));
    }
    model::ReferenceNetConfig cfg;
    cfg.epochs = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model::train_reference(data, data, cfg, sampling::ClassWeights::uniform(2)));
    }
}
BENCHMARK(BM_ReferenceEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
