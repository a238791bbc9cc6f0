#include "leukex/bmp.hpp"

#include <bit>
#include <cstdlib>
#include <string>

#include "leukex/error.hpp"

namespace leukex::imagestore {

namespace {

constexpr std::size_t kFileHeaderSize = 14;
constexpr std::int64_t kMaxDimension = 1 << 15;

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32(std::size_t offset, const char* field) const {
        need(offset, 4, field);
        return static_cast<std::uint32_t>(bytes_[offset]) |
               static_cast<std::uint32_t>(bytes_[offset + 1]) << 8 |
               static_cast<std::uint32_t>(bytes_[offset + 2]) << 16 |
               static_cast<std::uint32_t>(bytes_[offset + 3]) << 24;
    }
    std::int32_t i32(std::size_t offset, const char* field) const {
        return static_cast<std::int32_t>(u32(offset, field));
    }
    std::uint16_t u16(std::size_t offset, const char* field) const {
        need(offset, 2, field);
        return static_cast<std::uint16_t>(bytes_[offset] | bytes_[offset + 1] << 8);
    }
    std::int16_t i16(std::size_t offset, const char* field) const {
        return static_cast<std::int16_t>(u16(offset, field));
    }

    void need(std::size_t offset, std::size_t count, const char* field) const {
        if (offset > bytes_.size() || bytes_.size() - offset < count) {
            throw DecodeError("BMP: truncated " + std::string(field) + ": need " + std::to_string(count) +
                              " bytes at offset " + std::to_string(offset) + ", stream has " +
                              std::to_string(bytes_.size()));
        }
    }

private:
    std::span<const std::uint8_t> bytes_;
};

struct Channel {
    std::uint32_t mask = 0;
    int shift = 0;
};

Channel make_channel(std::uint32_t mask, const char* field, std::size_t offset) {
    if (mask == 0) {
        throw DecodeError("BMP: empty " + std::string(field) + " at offset " + std::to_string(offset));
    }
    const int shift = std::countr_zero(mask);
    if ((mask >> shift) != 0xFFu) {
        throw DecodeError("BMP: unsupported " + std::string(field) + " (not an 8-bit field) at offset " +
                          std::to_string(offset));
    }
    return {mask, shift};
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

}  // namespace

RawImage decode_bmp(std::span<const std::uint8_t> bytes) {
    const Reader rd(bytes);
    rd.need(0, kFileHeaderSize, "file header");
    if (bytes[0] != 'B' || bytes[1] != 'M') {
        throw DecodeError("BMP: bad signature at offset 0 (expected 'BM')");
    }
    const std::uint32_t pixel_offset = rd.u32(10, "pixel data offset");
    const std::uint32_t dib_size = rd.u32(14, "DIB header size");

    std::int64_t width = 0;
    std::int64_t height = 0;
    std::uint16_t bpp = 0;
    std::uint32_t compression = 0;
    std::size_t mask_offset = 0;

    if (dib_size == 12) {
        width = rd.i16(18, "width");
        height = rd.i16(20, "height");
        bpp = rd.u16(24, "bits per pixel");
    } else if (dib_size == 40 || dib_size == 52 || dib_size == 56 || dib_size == 108 || dib_size == 124) {
        width = rd.i32(18, "width");
        height = rd.i32(22, "height");
        if (rd.u16(26, "planes") != 1) {
            throw DecodeError("BMP: planes field at offset 26 must be 1");
        }
        bpp = rd.u16(28, "bits per pixel");
        compression = rd.u32(30, "compression");
        // V2+ headers carry the masks inline; a 40-byte header puts them right after.
        mask_offset = kFileHeaderSize + 40;
    } else {
        throw DecodeError("BMP: unsupported DIB header size " + std::to_string(dib_size) + " at offset 14");
    }

    if (bpp != 24 && bpp != 32) {
        throw DecodeError("BMP: unsupported bit depth " + std::to_string(bpp) + " at offset 28");
    }
    if (compression != 0 && !(compression == 3 && bpp == 32)) {
        throw DecodeError("BMP: unsupported compression " + std::to_string(compression) + " at offset 30");
    }
    if (width <= 0 || width > kMaxDimension) {
        throw DecodeError("BMP: invalid width " + std::to_string(width) + " at offset 18");
    }
    const bool top_down = height < 0;
    height = std::llabs(height);
    if (height == 0 || height > kMaxDimension) {
        throw DecodeError("BMP: invalid height at offset 22");
    }

    Channel red{0x00FF0000u, 16};
    Channel green{0x0000FF00u, 8};
    Channel blue{0x000000FFu, 0};
    if (compression == 3) {
        red = make_channel(rd.u32(mask_offset, "red mask"), "red mask", mask_offset);
        green = make_channel(rd.u32(mask_offset + 4, "green mask"), "green mask", mask_offset + 4);
        blue = make_channel(rd.u32(mask_offset + 8, "blue mask"), "blue mask", mask_offset + 8);
    }

    const std::size_t stride = ((static_cast<std::size_t>(bpp) * static_cast<std::size_t>(width) + 31) / 32) * 4;
    const std::size_t pixel_bytes = stride * static_cast<std::size_t>(height);
    if (pixel_offset < kFileHeaderSize + (dib_size == 12 ? 12 : 40)) {
        throw DecodeError("BMP: pixel data offset " + std::to_string(pixel_offset) +
                          " at offset 10 overlaps the headers");
    }
    rd.need(pixel_offset, pixel_bytes, "pixel array");

    RawImage img(static_cast<int>(height), static_cast<int>(width));
    const std::size_t step = bpp / 8;
    for (std::int64_t r = 0; r < height; ++r) {
        const std::int64_t file_row = top_down ? r : height - 1 - r;
        const std::uint8_t* row = bytes.data() + pixel_offset + static_cast<std::size_t>(file_row) * stride;
        for (std::int64_t c = 0; c < width; ++c) {
            const std::uint8_t* px = row + static_cast<std::size_t>(c) * step;
            std::uint8_t* dst = img.pixel(static_cast<int>(r), static_cast<int>(c));
            if (bpp == 24) {
                dst[0] = px[2];
                dst[1] = px[1];
                dst[2] = px[0];
            } else {
                const std::uint32_t v = static_cast<std::uint32_t>(px[0]) | static_cast<std::uint32_t>(px[1]) << 8 |
                                        static_cast<std::uint32_t>(px[2]) << 16 |
                                        static_cast<std::uint32_t>(px[3]) << 24;
                dst[0] = static_cast<std::uint8_t>((v & red.mask) >> red.shift);
                dst[1] = static_cast<std::uint8_t>((v & green.mask) >> green.shift);
                dst[2] = static_cast<std::uint8_t>((v & blue.mask) >> blue.shift);
            }
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_bmp(const RawImage& image) {
    if (image.height < 1 || image.width < 1 ||
        image.data.size() != static_cast<std::size_t>(image.height) * image.width * 3) {
        throw ArgumentError("encode_bmp: invalid image");
    }
    const std::size_t stride = ((24 * static_cast<std::size_t>(image.width) + 31) / 32) * 4;
    const std::size_t pixel_bytes = stride * static_cast<std::size_t>(image.height);
    const std::uint32_t offset = 14 + 40;

    std::vector<std::uint8_t> out;
    out.reserve(offset + pixel_bytes);
    out.push_back('B');
    out.push_back('M');
    put_u32(out, static_cast<std::uint32_t>(offset + pixel_bytes));
    put_u32(out, 0);
    put_u32(out, offset);
    put_u32(out, 40);
    put_u32(out, static_cast<std::uint32_t>(image.width));
    put_u32(out, static_cast<std::uint32_t>(image.height));
    put_u16(out, 1);
    put_u16(out, 24);
    put_u32(out, 0);
    put_u32(out, static_cast<std::uint32_t>(pixel_bytes));
    put_u32(out, 2835);  // 72 dpi
    put_u32(out, 2835);
    put_u32(out, 0);
    put_u32(out, 0);

    for (int r = image.height - 1; r >= 0; --r) {
        const std::size_t row_start = out.size();
        for (int c = 0; c < image.width; ++c) {
            const std::uint8_t* px = image.pixel(r, c);
            out.push_back(px[2]);
            out.push_back(px[1]);
            out.push_back(px[0]);
        }
        out.resize(row_start + stride, 0);
    }
    return out;
}

}  // namespace leukex::imagestore
