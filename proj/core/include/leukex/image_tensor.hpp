#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace leukex {

/// Side length every classifier input is normalized to.
inline constexpr int kModelSide = 299;
inline constexpr int kChannels = 3;

/// Row-major H x W x 3 image of reals, nominally in [0, 1], RGB order.
class ImageTensor {
public:
    ImageTensor() = default;
    ImageTensor(int height, int width, float fill = 0.0f);
    ImageTensor(int height, int width, std::vector<float> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return kChannels; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float& at(int row, int col, int ch) noexcept {
        return data_[index(row, col, ch)];
    }
    float at(int row, int col, int ch) const noexcept {
        return data_[index(row, col, ch)];
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    /// Per-channel mean over all pixels.
    std::vector<double> channel_means() const;
    double mean() const;

    bool all_within_unit() const;

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t index(int row, int col, int ch) const noexcept {
        return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(col)) * kChannels + static_cast<std::size_t>(ch);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

/// 8-bit RGB pixel grid used for decoded files and rendered overlays.
struct Rgb8Image {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // row-major, RGB

    Rgb8Image() = default;
    Rgb8Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {}

    std::uint8_t* pixel(int row, int col) noexcept {
        return data.data() + (static_cast<std::size_t>(row) * width + col) * 3;
    }
    const std::uint8_t* pixel(int row, int col) const noexcept {
        return data.data() + (static_cast<std::size_t>(row) * width + col) * 3;
    }

    friend bool operator==(const Rgb8Image&, const Rgb8Image&) = default;
};

/// Bilinear resampling with half-pixel centers. Interpolation is done in
/// double precision so constant regions survive exactly.
ImageTensor resize_bilinear(const ImageTensor& src, int out_height, int out_width);

/// Bilinear resampling of the window [top, top+height) x [left, left+width)
/// (source pixel units, fractional allowed) onto an out_height x out_width grid.
ImageTensor resample_window(const ImageTensor& src, double top, double left,
                            double window_height, double window_width,
                            int out_height, int out_width);

/// Box-filter downsampling onto a side x side grid; bins are the integer
/// partitions floor(i*H/side) .. floor((i+1)*H/side).
ImageTensor downsample_area(const ImageTensor& src, int side);

/// Quantizes [0,1] reals to 8-bit (round half up, clamped).
Rgb8Image to_rgb8(const ImageTensor& t);

}  // namespace leukex
