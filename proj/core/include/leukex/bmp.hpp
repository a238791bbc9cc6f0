#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leukex/image_tensor.hpp"

namespace leukex::imagestore {

/// Decoded 8-bit RGB pixel grid, top-left origin.
using RawImage = Rgb8Image;

/// Decodes an uncompressed 24- or 32-bit BMP (BI_RGB, or BI_BITFIELDS with
/// byte-aligned masks). Both bottom-up and top-down row orders are accepted.
/// Throws DecodeError naming the offending field and byte offset.
RawImage decode_bmp(std::span<const std::uint8_t> bytes);

/// Encodes a 24-bit bottom-up BI_RGB BMP with a BITMAPINFOHEADER.
std::vector<std::uint8_t> encode_bmp(const RawImage& image);

}  // namespace leukex::imagestore
