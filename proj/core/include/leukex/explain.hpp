#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "leukex/image_tensor.hpp"
#include "leukex/model.hpp"
#include "leukex/slic.hpp"
#include "leukex/surrogate.hpp"

namespace leukex::explain {

/// Per-segment mean colour, S x 3.
std::vector<float> segment_means(const ImageTensor& image, const SegmentMap& seg);

/// Copies pixels of segments whose mask bit is 1 and paints the others with
/// that segment's mean colour.
ImageTensor perturb(const ImageTensor& image, const SegmentMap& seg, std::span<const std::uint8_t> mask);
ImageTensor perturb(const ImageTensor& image, const SegmentMap& seg, std::span<const std::uint8_t> mask,
                    std::span<const float> means);
/// Same, writing into `out` (resized if its dimensions differ) so callers can
/// reuse one buffer across many perturbations.
void perturb_into(const ImageTensor& image, const SegmentMap& seg, std::span<const std::uint8_t> mask,
                  std::span<const float> means, ImageTensor& out);

struct ExplainParams {
    SlicParams slic;
    std::size_t n_samples = 1000;
    double kernel_width = kDefaultKernelWidth;
    double alpha = kDefaultRidgeAlpha;
    std::uint64_t seed = 0;
    /// Perturbed images per predict_proba call.
    std::size_t batch_size = 32;
    /// Threads issuing prediction batches; results do not depend on it.
    unsigned workers = 1;

    void validate() const;
};

void to_json(nlohmann::json& j, const ExplainParams& p);

struct SegmentWeight {
    int segment = 0;
    double weight = 0.0;

    friend bool operator==(const SegmentWeight&, const SegmentWeight&) = default;
};

struct Explanation {
    int target_label = 0;
    std::string target_name;
    double confidence = 0.0;
    std::vector<double> probabilities;  // classifier output for the unperturbed image
    std::vector<SegmentWeight> segment_weights;  // descending weight, ascending id on ties
    double intercept = 0.0;
    double r2 = 0.0;
    int n_segments = 0;
    ExplainParams params;

    double weight_of(int segment) const;
};

void to_json(nlohmann::json& j, const Explanation& e);

/// Sorts (segment, coefficient) pairs by descending coefficient, ties by id.
std::vector<SegmentWeight> rank_segments(std::span<const double> coefficients);

struct ExplainResult {
    Explanation explanation;
    SegmentMap segments;
    SurrogateFit fit;
};

/// segment -> sample masks -> perturb -> predict in batches -> kernel-weight ->
/// ridge fit on the argmax class of the unperturbed prediction.
ExplainResult explain(const ImageTensor& image, const model::Classifier& classifier, const ExplainParams& params);

}  // namespace leukex::explain
