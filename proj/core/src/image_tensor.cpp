#include "leukex/image_tensor.hpp"

#include <algorithm>
#include <cmath>

#include "leukex/error.hpp"

namespace leukex {

ImageTensor::ImageTensor(int height, int width, float fill)
    : height_(height), width_(width),
      data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * kChannels, fill) {
    if (height < 1 || width < 1) {
        throw ArgumentError("image dimensions must be positive");
    }
}

ImageTensor::ImageTensor(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height < 1 || width < 1) {
        throw ArgumentError("image dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * kChannels) {
        throw ArgumentError("image data length does not match height*width*3");
    }
}

std::vector<double> ImageTensor::channel_means() const {
    std::vector<double> sums(kChannels, 0.0);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        sums[i % kChannels] += data_[i];
    }
    const double pixels = static_cast<double>(data_.size() / kChannels);
    for (auto& s : sums) {
        s /= pixels;
    }
    return sums;
}

double ImageTensor::mean() const {
    double sum = 0.0;
    for (float v : data_) {
        sum += v;
    }
    return data_.empty() ? 0.0 : sum / static_cast<double>(data_.size());
}

bool ImageTensor::all_within_unit() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> make_taps(double origin, double extent, int src_len, int out_len) {
    std::vector<Tap> taps(static_cast<std::size_t>(out_len));
    const double scale = extent / static_cast<double>(out_len);
    for (int i = 0; i < out_len; ++i) {
        double pos = origin + (static_cast<double>(i) + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(src_len - 1));
        const int lo = static_cast<int>(std::floor(pos));
        const int hi = std::min(lo + 1, src_len - 1);
        taps[static_cast<std::size_t>(i)] = {lo, hi, pos - lo};
    }
    return taps;
}

}  // namespace

ImageTensor resample_window(const ImageTensor& src, double top, double left,
                            double window_height, double window_width,
                            int out_height, int out_width) {
    if (src.empty()) {
        throw ArgumentError("cannot resample an empty image");
    }
    if (out_height < 1 || out_width < 1 || window_height <= 0.0 || window_width <= 0.0) {
        throw ArgumentError("resample window and output must be non-empty");
    }
    const auto rows = make_taps(top, window_height, src.height(), out_height);
    const auto cols = make_taps(left, window_width, src.width(), out_width);

    ImageTensor out(out_height, out_width);
    for (int r = 0; r < out_height; ++r) {
        const Tap& ty = rows[static_cast<std::size_t>(r)];
        for (int c = 0; c < out_width; ++c) {
            const Tap& tx = cols[static_cast<std::size_t>(c)];
            for (int ch = 0; ch < kChannels; ++ch) {
                const double a = src.at(ty.lo, tx.lo, ch);
                const double b = src.at(ty.lo, tx.hi, ch);
                const double cc = src.at(ty.hi, tx.lo, ch);
                const double d = src.at(ty.hi, tx.hi, ch);
                const double top_row = a + tx.frac * (b - a);
                const double bottom_row = cc + tx.frac * (d - cc);
                out.at(r, c, ch) = static_cast<float>(top_row + ty.frac * (bottom_row - top_row));
            }
        }
    }
    return out;
}

ImageTensor resize_bilinear(const ImageTensor& src, int out_height, int out_width) {
    return resample_window(src, 0.0, 0.0, src.height(), src.width(), out_height, out_width);
}

ImageTensor downsample_area(const ImageTensor& src, int side) {
    if (side < 1) {
        throw ArgumentError("downsample side must be positive");
    }
    if (side > src.height() || side > src.width()) {
        throw ArgumentError("downsample side exceeds source dimensions");
    }
    ImageTensor out(side, side);
    for (int i = 0; i < side; ++i) {
        const int r0 = i * src.height() / side;
        const int r1 = (i + 1) * src.height() / side;
        for (int j = 0; j < side; ++j) {
            const int c0 = j * src.width() / side;
            const int c1 = (j + 1) * src.width() / side;
            double sums[kChannels] = {0.0, 0.0, 0.0};
            for (int r = r0; r < r1; ++r) {
                for (int c = c0; c < c1; ++c) {
                    for (int ch = 0; ch < kChannels; ++ch) {
                        sums[ch] += src.at(r, c, ch);
                    }
                }
            }
            const double n = static_cast<double>((r1 - r0) * (c1 - c0));
            for (int ch = 0; ch < kChannels; ++ch) {
                out.at(i, j, ch) = static_cast<float>(sums[ch] / n);
            }
        }
    }
    return out;
}

Rgb8Image to_rgb8(const ImageTensor& t) {
    Rgb8Image out(t.height(), t.width());
    const auto src = t.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
        out.data[i] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
    }
    return out;
}

}  // namespace leukex
