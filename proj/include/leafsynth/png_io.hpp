#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "leafsynth/error.hpp"
#include "leafsynth/image.hpp"

namespace leafsynth {

namespace detail {

struct PngWriteBuffer {
    std::vector<std::uint8_t> bytes;
};

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
    buf->bytes.insert(buf->bytes.end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

// Encodes rows of `channels` samples of `bit_depth` bits. 16-bit samples
// are expected big-endian in `pixels`.
inline std::vector<std::uint8_t> encode_png(const std::uint8_t* pixels, int width, int height,
                                            int channels, int bit_depth) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    PngWriteBuffer buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encoding failed");
    }
    png_set_write_fn(png, &buffer, png_write_to_vector, png_flush_noop);
    const int color_type = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::move(buffer.bytes);
}

struct PngReadCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t offset;
};

inline void png_read_from_buffer(png_structp png, png_bytep out, png_size_t length) {
    auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + length > cur->size) png_error(png, "truncated png");
    std::memcpy(out, cur->data + cur->offset, length);
    cur->offset += length;
}

struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0; // 1 or 3 after normalization
    std::vector<std::uint8_t> pixels;
};

// Decodes any PNG into 8-bit gray or RGB (alpha dropped, palettes expanded).
inline DecodedPng decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ProtocolError("not a png stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    PngReadCursor cursor{bytes.data(), bytes.size(), 0};
    DecodedPng out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ProtocolError("png decoding failed");
    }
    png_set_read_fn(png, &cursor, png_read_from_buffer);
    png_read_info(png, info);
    const auto color_type = png_get_color_type(png, info);
    const auto bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    out.pixels.resize(stride * out.height);
    std::vector<png_bytep> rows(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

inline std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    return detail::encode_png(reinterpret_cast<const std::uint8_t*>(img.data().data()), img.width(),
                              img.height(), 3, 8);
}

// Masks are stored as 8-bit grayscale with values {0, 255}.
inline std::vector<std::uint8_t> encode_png(const BinaryMask& mask) {
    std::vector<std::uint8_t> px(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
    return detail::encode_png(px.data(), mask.width(), mask.height(), 1, 8);
}

// Float field in [0, 1] as 16-bit grayscale.
inline std::vector<std::uint8_t> encode_png16(const FloatImage& field) {
    std::vector<std::uint8_t> px(field.size() * 2);
    for (std::size_t i = 0; i < field.size(); ++i) {
        const auto v = static_cast<std::uint16_t>(std::lround(std::clamp<double>(field[i], 0.0, 1.0) * 65535.0));
        px[2 * i] = static_cast<std::uint8_t>(v >> 8);
        px[2 * i + 1] = static_cast<std::uint8_t>(v & 0xFF);
    }
    return detail::encode_png(px.data(), field.width(), field.height(), 1, 16);
}

inline RasterImage decode_rgb(const std::vector<std::uint8_t>& bytes) {
    const auto d = detail::decode_png(bytes);
    RasterImage img(d.width, d.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (d.channels == 3)
            img[i] = {d.pixels[3 * i], d.pixels[3 * i + 1], d.pixels[3 * i + 2]};
        else
            img[i] = {d.pixels[i], d.pixels[i], d.pixels[i]};
    }
    return img;
}

// Any channel value >= 128 is foreground.
inline BinaryMask decode_mask(const std::vector<std::uint8_t>& bytes) {
    const auto d = detail::decode_png(bytes);
    BinaryMask m(d.width, d.height);
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = d.pixels[i * d.channels] >= 128 ? 1 : 0;
    return m;
}

// Writes through a temporary file and renames, so readers never observe a
// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

inline void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    write_file_atomic(path, bytes.data(), bytes.size());
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

inline void write_png(const std::filesystem::path& path, const RasterImage& img) {
    write_file_atomic(path, encode_png(img));
}
inline void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
    write_file_atomic(path, encode_png(mask));
}
inline void write_png16(const std::filesystem::path& path, const FloatImage& field) {
    write_file_atomic(path, encode_png16(field));
}

inline RasterImage read_png_rgb(const std::filesystem::path& path) {
    return decode_rgb(detail::read_file(path));
}
inline BinaryMask read_png_mask(const std::filesystem::path& path) {
    return decode_mask(detail::read_file(path));
}

} // namespace leafsynth
