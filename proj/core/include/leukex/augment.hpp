#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "leukex/image_tensor.hpp"
#include "leukex/random_stream.hpp"

namespace leukex::augment {

/// Draws above this value trigger a transpose (strict inequality).
inline constexpr double kTransposeThreshold = 0.75;

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct AugmentConfig {
    double p_flip_v = 0.5;
    double p_flip_h = 0.5;
    /// When false the transpose draw is still consumed but never applied.
    bool transpose = true;
    double transpose_threshold = kTransposeThreshold;
    Range brightness_delta{-0.1, 0.1};
    Range saturation_factor{0.8, 1.2};
    Range contrast_factor{0.8, 1.2};
    Range crop_fraction{0.8, 1.0};
    std::uint64_t seed = 0;

    /// Throws ArgumentError when an invariant is violated.
    void validate() const;

    /// Zero-width identity ranges, zero probabilities, no transpose.
    static AugmentConfig neutral();
};

/// Record of what augment_sample drew and applied.
struct AugmentTrace {
    bool flipped_v = false;
    bool flipped_h = false;
    double transpose_draw = 0.0;
    bool transposed = false;
    double brightness = 0.0;
    double saturation = 1.0;
    double contrast = 1.0;
    double crop_size = 1.0;
    double crop_top = 0.0;
    double crop_left = 0.0;
};

ImageTensor flip_vertical(const ImageTensor& t);
ImageTensor flip_horizontal(const ImageTensor& t);

/// Swaps the H and W axes when u > threshold; returns t unchanged otherwise.
ImageTensor transpose_gate(const ImageTensor& t, double u, double threshold = kTransposeThreshold);

/// Brightness (x + delta), then saturation around Rec.601 luma, then contrast
/// around the per-channel image mean, then clamp to [0, 1]. A stage whose
/// parameter is neutral is skipped so neutral parameters are exact identity.
ImageTensor photometric(const ImageTensor& t, double brightness_delta, double saturation, double contrast);

/// Extracts the window (fractions of H and W) and resizes it back to 299 x 299.
/// Throws ArgumentError if the window leaves the image.
ImageTensor crop_resize(const ImageTensor& t, double top, double left, double size);

/// Draws every parameter of one augmentation, in the order used by
/// augment_sample, without touching pixels.
AugmentTrace draw_trace(RandomStream& rng, const AugmentConfig& cfg);

/// Applies a drawn trace: flip_v, flip_h, transpose, photometric, crop_resize.
ImageTensor apply_trace(const ImageTensor& t, const AugmentTrace& trace);

/// Fixed-order composition: flip_v, flip_h, transpose gate, photometric,
/// crop_resize. Draw order from `rng`: flip_v, flip_h, transpose u,
/// brightness, saturation, contrast, crop size, crop top, crop left.
ImageTensor augment_sample(const ImageTensor& t, RandomStream& rng, const AugmentConfig& cfg,
                           AugmentTrace* trace = nullptr);

void to_json(nlohmann::json& j, const AugmentConfig& cfg);
void from_json(const nlohmann::json& j, AugmentConfig& cfg);

}  // namespace leukex::augment
