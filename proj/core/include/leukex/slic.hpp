#pragma once

#include <string>
#include <vector>

#include "leukex/image_tensor.hpp"

namespace leukex::explain {

/// Per-pixel superpixel labels. Ids are exactly 0..n_segments-1, each
/// non-empty and 4-connected.
struct SegmentMap {
    int height = 0;
    int width = 0;
    int n_segments = 0;
    std::vector<int> seg_of;  // row-major

    int at(int row, int col) const { return seg_of[static_cast<std::size_t>(row) * width + col]; }
    std::vector<std::size_t> sizes() const;

    /// Description of the first violated invariant, or empty when valid.
    std::string check() const;
};

struct SlicParams {
    int n_segments = 50;
    double compactness = 10.0;
    int iterations = 10;

    void validate() const;
};

/// sRGB in [0,1] to CIELAB (D65 white), one triple per pixel.
std::vector<double> rgb_to_lab(const ImageTensor& image);

/// SLIC superpixels. Centers start on a regular nx x ny grid
/// (nx = ceil(sqrt(n * W / H)), ny = round(n / nx)), each nudged to the
/// lowest-gradient pixel of its 3x3 neighbourhood. Each iteration assigns
/// pixels within one grid step of a center by
///   D = |lab - lab_k| + (compactness / grid_step) * |xy - xy_k|
/// and moves centers to their members' mean. Afterwards each label keeps
/// its largest 4-connected component and every other component is absorbed
/// into the largest adjacent segment. Fully deterministic.
SegmentMap slic_segment(const ImageTensor& image, const SlicParams& params);

/// Labels each pixel with the index of its 4-connected component of equal
/// seg_of values; returns the component count.
int connected_components(const SegmentMap& seg, std::vector<int>& component_of);

}  // namespace leukex::explain
