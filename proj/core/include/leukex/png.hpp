#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leukex/image_tensor.hpp"

namespace leukex {

/// 8-bit RGB PNG. Output bytes depend only on the pixels.
std::vector<std::uint8_t> encode_png(const Rgb8Image& image);

/// Decodes any PNG to 8-bit RGB; throws DecodeError on malformed input.
Rgb8Image decode_png(std::span<const std::uint8_t> bytes);

}  // namespace leukex
