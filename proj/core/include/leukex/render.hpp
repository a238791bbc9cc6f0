#pragma once

#include <array>
#include <cstdint>

#include "leukex/explain.hpp"
#include "leukex/image_tensor.hpp"
#include "leukex/slic.hpp"

namespace leukex::explain {

inline constexpr double kSegmentTintOpacity = 0.4;
inline constexpr double kHeatmapMaxOpacity = 0.6;
inline constexpr int kDefaultTopK = 5;

/// Deterministic colour for a segment id.
std::array<std::uint8_t, 3> segment_color(int id);

/// Each region tinted by its id colour at 40% opacity.
Rgb8Image render_segments(const ImageTensor& image, const SegmentMap& seg);

/// Pixels with a 4-neighbour in another segment painted yellow.
Rgb8Image render_boundaries(const ImageTensor& image, const SegmentMap& seg);

/// Top-k positive segments tinted red, top-k negative green, opacity
/// 0.6 * |c| / max|c| over the tinted set. With positive_only the green tint is
/// dropped and every pixel outside the positive top-k is converted to gray.
Rgb8Image render_heatmap(const ImageTensor& image, const SegmentMap& seg, const Explanation& expl,
                         bool positive_only, int top_k = kDefaultTopK);

}  // namespace leukex::explain
