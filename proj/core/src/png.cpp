#include "leukex/png.hpp"

#include <cstring>
#include <string>

#include <png.h>

#include "leukex/error.hpp"

namespace leukex {

std::vector<std::uint8_t> encode_png(const Rgb8Image& image) {
    if (image.width <= 0 || image.height <= 0 ||
        image.data.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
        throw ArgumentError("cannot encode an empty or inconsistent image");
    }
    png_image desc;
    std::memset(&desc, 0, sizeof desc);
    desc.version = PNG_IMAGE_VERSION;
    desc.width = static_cast<png_uint_32>(image.width);
    desc.height = static_cast<png_uint_32>(image.height);
    desc.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(desc, size, 0, image.data.data(), 0, nullptr)) {
        const std::string msg = desc.message;
        png_image_free(&desc);
        throw IoError("png encode failed: " + msg);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&desc, out.data(), &size, 0, image.data.data(), 0, nullptr)) {
        const std::string msg = desc.message;
        png_image_free(&desc);
        throw IoError("png encode failed: " + msg);
    }
    out.resize(size);
    return out;
}

Rgb8Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image desc;
    std::memset(&desc, 0, sizeof desc);
    desc.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
        const std::string msg = desc.message;
        png_image_free(&desc);
        throw DecodeError("png decode failed: " + msg);
    }
    desc.format = PNG_FORMAT_RGB;
    Rgb8Image out(static_cast<int>(desc.height), static_cast<int>(desc.width));
    if (!png_image_finish_read(&desc, nullptr, out.data.data(), 0, nullptr)) {
        const std::string msg = desc.message;
        png_image_free(&desc);
        throw DecodeError("png decode failed: " + msg);
    }
    return out;
}

}  // namespace leukex
