#include "leukex/render.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "leukex/error.hpp"
#include "leukex/random_stream.hpp"

namespace leukex::explain {

namespace {

constexpr std::array<double, 3> kYellow{1.0, 1.0, 0.0};
constexpr std::array<double, 3> kRed{1.0, 0.0, 0.0};
constexpr std::array<double, 3> kGreen{0.0, 1.0, 0.0};

void check_dims(const ImageTensor& image, const SegmentMap& seg) {
    if (seg.height != image.height() || seg.width != image.width() ||
        seg.seg_of.size() != static_cast<std::size_t>(image.height()) * image.width()) {
        throw ArgumentError("segment map " + std::to_string(seg.height) + "x" + std::to_string(seg.width) +
                            " does not match image " + std::to_string(image.height()) + "x" +
                            std::to_string(image.width()));
    }
}

std::uint8_t quantize(double v) {
    const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(q);
}

void put(Rgb8Image& out, std::size_t p, const std::array<double, 3>& rgb) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
        out.data[p * 3 + ch] = quantize(rgb[ch]);
    }
}

std::array<double, 3> source(const ImageTensor& image, std::size_t p) {
    const auto px = image.data();
    return {px[p * 3], px[p * 3 + 1], px[p * 3 + 2]};
}

std::array<double, 3> blend(const std::array<double, 3>& base, const std::array<double, 3>& tint, double alpha) {
    return {base[0] + alpha * (tint[0] - base[0]), base[1] + alpha * (tint[1] - base[1]),
            base[2] + alpha * (tint[2] - base[2])};
}

std::array<double, 3> gray(const std::array<double, 3>& c) {
    const double y = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
    return {y, y, y};
}

}  // namespace

std::array<std::uint8_t, 3> segment_color(int id) {
    const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(id) + 0x5eedULL);
    // Keep colours away from black so tints stay visible.
    return {static_cast<std::uint8_t>(64 + (h & 0xbf)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0xbf)),
            static_cast<std::uint8_t>(64 + ((h >> 16) & 0xbf))};
}

Rgb8Image render_segments(const ImageTensor& image, const SegmentMap& seg) {
    check_dims(image, seg);
    std::vector<std::array<double, 3>> colors(static_cast<std::size_t>(seg.n_segments));
    for (int id = 0; id < seg.n_segments; ++id) {
        const auto c = segment_color(id);
        colors[static_cast<std::size_t>(id)] = {c[0] / 255.0, c[1] / 255.0, c[2] / 255.0};
    }
    Rgb8Image out(image.height(), image.width());
    for (std::size_t p = 0; p < seg.seg_of.size(); ++p) {
        put(out, p, blend(source(image, p), colors[static_cast<std::size_t>(seg.seg_of[p])], kSegmentTintOpacity));
    }
    return out;
}

Rgb8Image render_boundaries(const ImageTensor& image, const SegmentMap& seg) {
    check_dims(image, seg);
    Rgb8Image out(image.height(), image.width());
    const int h = seg.height;
    const int w = seg.width;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int id = seg.at(r, c);
            const bool edge = (r > 0 && seg.at(r - 1, c) != id) || (r + 1 < h && seg.at(r + 1, c) != id) ||
                              (c > 0 && seg.at(r, c - 1) != id) || (c + 1 < w && seg.at(r, c + 1) != id);
            const auto p = static_cast<std::size_t>(r) * w + c;
            put(out, p, edge ? kYellow : source(image, p));
        }
    }
    return out;
}

Rgb8Image render_heatmap(const ImageTensor& image, const SegmentMap& seg, const Explanation& expl,
                         bool positive_only, int top_k) {
    check_dims(image, seg);
    if (top_k < 0) {
        throw ArgumentError("top_k must be non-negative");
    }
    const auto s = static_cast<std::size_t>(seg.n_segments);
    std::vector<double> coef(s, 0.0);
    for (const auto& sw : expl.segment_weights) {
        if (sw.segment >= 0 && static_cast<std::size_t>(sw.segment) < s) {
            coef[static_cast<std::size_t>(sw.segment)] = sw.weight;
        }
    }
    const auto ranked = rank_segments(coef);

    // 0 = untinted, 1 = positive, -1 = negative
    std::vector<int> role(s, 0);
    int taken = 0;
    for (auto it = ranked.begin(); it != ranked.end() && taken < top_k && it->weight > 0.0; ++it, ++taken) {
        role[static_cast<std::size_t>(it->segment)] = 1;
    }
    if (!positive_only) {
        taken = 0;
        for (auto it = ranked.rbegin(); it != ranked.rend() && taken < top_k && it->weight < 0.0; ++it, ++taken) {
            role[static_cast<std::size_t>(it->segment)] = -1;
        }
    }
    double max_abs = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        if (role[i] != 0) {
            max_abs = std::max(max_abs, std::abs(coef[i]));
        }
    }

    Rgb8Image out(image.height(), image.width());
    for (std::size_t p = 0; p < seg.seg_of.size(); ++p) {
        const auto id = static_cast<std::size_t>(seg.seg_of[p]);
        auto base = source(image, p);
        if (role[id] == 0) {
            put(out, p, positive_only ? gray(base) : base);
            continue;
        }
        const double alpha = kHeatmapMaxOpacity * std::abs(coef[id]) / max_abs;
        put(out, p, blend(base, role[id] > 0 ? kRed : kGreen, alpha));
    }
    return out;
}

}  // namespace leukex::explain
