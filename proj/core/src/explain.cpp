#include "leukex/explain.hpp"

#include <algorithm>

#include "leukex/error.hpp"
#include "leukex/parallel.hpp"

namespace leukex::explain {

namespace {

constexpr std::uint64_t kMaskStream = 0;

}  // namespace

std::vector<float> segment_means(const ImageTensor& image, const SegmentMap& seg) {
    if (seg.height != image.height() || seg.width != image.width()) {
        throw ArgumentError("segment map and image dimensions differ");
    }
    const auto s = static_cast<std::size_t>(seg.n_segments);
    std::vector<double> sums(s * 3, 0.0);
    std::vector<std::size_t> counts(s, 0);
    const auto px = image.data();
    for (std::size_t p = 0; p < seg.seg_of.size(); ++p) {
        const auto id = static_cast<std::size_t>(seg.seg_of[p]);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            sums[id * 3 + ch] += px[p * 3 + ch];
        }
        ++counts[id];
    }
    std::vector<float> means(s * 3, 0.0f);
    for (std::size_t id = 0; id < s; ++id) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            means[id * 3 + ch] = counts[id] ? static_cast<float>(sums[id * 3 + ch] / static_cast<double>(counts[id])) : 0.0f;
        }
    }
    return means;
}

void perturb_into(const ImageTensor& image, const SegmentMap& seg, std::span<const std::uint8_t> mask,
                  std::span<const float> means, ImageTensor& out) {
    if (mask.size() != static_cast<std::size_t>(seg.n_segments)) {
        throw ArgumentError("mask length " + std::to_string(mask.size()) + " does not match " +
                            std::to_string(seg.n_segments) + " segments");
    }
    if (seg.height != image.height() || seg.width != image.width()) {
        throw ArgumentError("segment map and image dimensions differ");
    }
    if (out.height() != image.height() || out.width() != image.width()) {
        out = ImageTensor(image.height(), image.width());
    }
    const auto src = image.data();
    auto dst = out.data();
    for (std::size_t p = 0; p < seg.seg_of.size(); ++p) {
        const auto id = static_cast<std::size_t>(seg.seg_of[p]);
        const float* from = mask[id] ? &src[p * 3] : &means[id * 3];
        dst[p * 3] = from[0];
        dst[p * 3 + 1] = from[1];
        dst[p * 3 + 2] = from[2];
    }
}

ImageTensor perturb(const ImageTensor& image, const SegmentMap& seg, std::span<const std::uint8_t> mask,
                    std::span<const float> means) {
    ImageTensor out;
    perturb_into(image, seg, mask, means, out);
    return out;
}

ImageTensor perturb(const ImageTensor& image, const SegmentMap& seg, std::span<const std::uint8_t> mask) {
    return perturb(image, seg, mask, segment_means(image, seg));
}

void ExplainParams::validate() const {
    slic.validate();
    if (n_samples < 2) {
        throw ArgumentError("n_samples must be at least 2");
    }
    if (!(kernel_width > 0.0)) {
        throw ArgumentError("kernel width must be positive");
    }
    if (!(alpha >= 0.0)) {
        throw ArgumentError("alpha must be non-negative");
    }
    if (batch_size < 1) {
        throw ArgumentError("batch_size must be positive");
    }
}

void to_json(nlohmann::json& j, const ExplainParams& p) {
    j = nlohmann::json{
        {"segmentation", "slic"},
        {"n_segments", p.slic.n_segments},
        {"compactness", p.slic.compactness},
        {"slic_iterations", p.slic.iterations},
        {"n_samples", p.n_samples},
        {"kernel", "exponential-cosine"},
        {"kernel_width", p.kernel_width},
        {"alpha", p.alpha},
        {"fudge", "segment-mean"},
        {"seed", p.seed},
        {"batch_size", p.batch_size},
    };
}

double Explanation::weight_of(int segment) const {
    for (const auto& sw : segment_weights) {
        if (sw.segment == segment) {
            return sw.weight;
        }
    }
    throw ArgumentError("no weight for segment " + std::to_string(segment));
}

void to_json(nlohmann::json& j, const Explanation& e) {
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& sw : e.segment_weights) {
        weights.push_back({{"segment", sw.segment}, {"weight", sw.weight}});
    }
    j = nlohmann::json{
        {"target_label", e.target_label},
        {"target_name", e.target_name},
        {"confidence", e.confidence},
        {"probabilities", e.probabilities},
        {"segment_weights", weights},
        {"intercept", e.intercept},
        {"r2", e.r2},
        {"n_segments", e.n_segments},
        {"seed", e.params.seed},
        {"params", e.params},
    };
}

std::vector<SegmentWeight> rank_segments(std::span<const double> coefficients) {
    std::vector<SegmentWeight> out;
    out.reserve(coefficients.size());
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        out.push_back({static_cast<int>(i), coefficients[i]});
    }
    std::sort(out.begin(), out.end(), [](const SegmentWeight& a, const SegmentWeight& b) {
        return a.weight != b.weight ? a.weight > b.weight : a.segment < b.segment;
    });
    return out;
}

ExplainResult explain(const ImageTensor& image, const model::Classifier& classifier, const ExplainParams& params) {
    params.validate();
    ExplainResult result;
    result.segments = slic_segment(image, params.slic);
    const SegmentMap& seg = result.segments;
    const auto segments = static_cast<std::size_t>(seg.n_segments);

    RandomStream rng = RandomStream::substream(params.seed, kMaskStream);
    const MaskMatrix masks = sample_masks(segments, params.n_samples, rng);
    const auto means = segment_means(image, seg);

    const std::size_t n_classes = classifier.n_classes();
    if (n_classes < 2) {
        throw ModelError("classifier must expose at least two classes");
    }
    std::vector<double> responses(params.n_samples * n_classes, 0.0);
    const std::size_t n_batches = (params.n_samples + params.batch_size - 1) / params.batch_size;
    // Each worker owns a strided set of batches and one reusable image buffer.
    const std::size_t n_workers = std::min<std::size_t>(resolve_workers(params.workers), n_batches);
    parallel_for(n_workers, static_cast<unsigned>(n_workers), [&](std::size_t w) {
        std::vector<ImageTensor> batch(params.batch_size);
        for (std::size_t b = w; b < n_batches; b += n_workers) {
            const std::size_t start = b * params.batch_size;
            const std::size_t end = std::min(params.n_samples, start + params.batch_size);
            batch.resize(end - start);
            for (std::size_t i = start; i < end; ++i) {
                perturb_into(image, seg, masks.row(i), means, batch[i - start]);
            }
            const auto probs = classifier.predict_proba(batch);
            if (probs.rows() != batch.size() || probs.cols() != n_classes) {
                throw ModelError("classifier returned a " + std::to_string(probs.rows()) + "x" +
                                 std::to_string(probs.cols()) + " matrix for a batch of " +
                                 std::to_string(batch.size()));
            }
            std::copy(probs.values().begin(), probs.values().end(),
                      responses.begin() + static_cast<std::ptrdiff_t>(start * n_classes));
        }
    });

    const std::span<const double> row0(responses.data(), n_classes);
    const auto target = static_cast<std::size_t>(std::max_element(row0.begin(), row0.end()) - row0.begin());
    std::vector<double> y(params.n_samples);
    for (std::size_t i = 0; i < params.n_samples; ++i) {
        y[i] = responses[i * n_classes + target];
    }
    const auto weights = kernel_weights(masks, params.kernel_width);
    result.fit = fit_surrogate(masks, y, weights, params.alpha);

    Explanation& e = result.explanation;
    e.target_label = static_cast<int>(target);
    const auto names = classifier.class_names();
    e.target_name = target < names.size() ? names[target] : std::to_string(target);
    e.confidence = row0[target];
    e.probabilities.assign(row0.begin(), row0.end());
    e.segment_weights = rank_segments(result.fit.coefficients);
    e.intercept = result.fit.intercept;
    e.r2 = result.fit.r2;
    e.n_segments = seg.n_segments;
    e.params = params;
    return result;
}

}  // namespace leukex::explain
