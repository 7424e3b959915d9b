/*
 * Copyright 2026 The polarsep Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "error.hpp"
#include "image.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace polarsep {

namespace detail {

struct FileCloser
{
    void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(std::filesystem::path const &path, char const *mode)
{
    FilePtr f{std::fopen(path.string().c_str(), mode)};
    if (!f)
        throw DataError(path.string() + ": cannot open: " + std::strerror(errno));
    return f;
}

struct PngMessage
{
    char text[256] = {};
};

inline void png_error_sink(png_structp png, png_const_charp msg)
{
    auto *m = static_cast<PngMessage *>(png_get_error_ptr(png));
    std::snprintf(m->text, sizeof m->text, "%s", msg);
    png_longjmp(png, 1);
}

inline void png_warning_sink(png_structp, png_const_charp) {}

struct PngRaw
{
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int channels = 0;
    int depth = 0;
    std::vector<unsigned char> bytes;
};

// Everything that must survive a longjmp lives in `raw`, which is owned by the caller.
inline bool png_read_raw(std::FILE *f, PngRaw &raw, PngMessage &msg)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &msg, png_error_sink, png_warning_sink);
    if (!png) {
        std::snprintf(msg.text, sizeof msg.text, "out of memory");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, f);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_alpha(png);
    if (png_get_bit_depth(png, info) == 16)
        png_set_swap(png);
    png_read_update_info(png, info);

    raw.width = png_get_image_width(png, info);
    raw.height = png_get_image_height(png, info);
    raw.channels = png_get_channels(png, info);
    raw.depth = png_get_bit_depth(png, info);
    std::size_t const stride = png_get_rowbytes(png, info);
    raw.bytes.resize(stride * raw.height);
    std::vector<png_bytep> rows(raw.height);
    for (std::uint32_t r = 0; r < raw.height; ++r)
        rows[r] = raw.bytes.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline bool png_write_raw(std::FILE *f, PngRaw const &raw, PngMessage &msg)
{
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &msg, png_error_sink, png_warning_sink);
    if (!png) {
        std::snprintf(msg.text, sizeof msg.text, "out of memory");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, raw.width, raw.height, raw.depth, raw.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (raw.depth == 16)
        png_set_swap(png);
    std::size_t const stride = static_cast<std::size_t>(raw.width) * raw.channels * (raw.depth / 8);
    for (std::uint32_t r = 0; r < raw.height; ++r)
        png_write_row(png, const_cast<png_bytep>(raw.bytes.data() + r * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

inline float swap_bytes(float v)
{
    auto u = std::bit_cast<std::uint32_t>(v);
    u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
    return std::bit_cast<float>(u);
}

} // namespace detail

/// Reads an 8 or 16 bit PNG as values in [0, 1]. Grey images give one channel, colour images three;
/// alpha is dropped and palettes are expanded.
inline Image read_png(std::filesystem::path const &path)
{
    auto f = detail::open_file(path, "rb");
    detail::PngRaw raw;
    detail::PngMessage msg;
    if (!detail::png_read_raw(f.get(), raw, msg))
        throw DataError(path.string() + ": invalid PNG: " + msg.text);

    Index const h = raw.height, w = raw.width, ch = raw.channels;
    Image img(h, w, ch);
    bool const wide = raw.depth == 16;
    double const scale = wide ? 65535.0 : 255.0;
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c)
            for (Index k = 0; k < ch; ++k) {
                std::size_t const i = static_cast<std::size_t>((r * w + c) * ch + k);
                unsigned v = 0;
                if (wide)
                    v = raw.bytes[2 * i] | (static_cast<unsigned>(raw.bytes[2 * i + 1]) << 8);
                else
                    v = raw.bytes[i];
                img(k, r, c) = v / scale;
            }
    return img;
}

/// Writes a one or three channel image, clamping to [0, 1]. `bit_depth` is 8 or 16.
inline void write_png(std::filesystem::path const &path, Image const &img, int bit_depth = 8)
{
    if (bit_depth != 8 && bit_depth != 16)
        throw UsageError("write_png: bit depth must be 8 or 16");
    if (img.channels() != 1 && img.channels() != 3)
        throw UsageError("write_png: image must have 1 or 3 channels");
    if (img.empty())
        throw UsageError("write_png: empty image");

    detail::PngRaw raw;
    raw.width = static_cast<std::uint32_t>(img.width());
    raw.height = static_cast<std::uint32_t>(img.height());
    raw.channels = static_cast<int>(img.channels());
    raw.depth = bit_depth;
    bool const wide = bit_depth == 16;
    double const scale = wide ? 65535.0 : 255.0;
    raw.bytes.resize(static_cast<std::size_t>(img.pixels() * img.channels()) * (wide ? 2 : 1));
    for (Index r = 0; r < img.height(); ++r)
        for (Index c = 0; c < img.width(); ++c)
            for (Index k = 0; k < img.channels(); ++k) {
                double const x = img(k, r, c);
                double const clamped = std::isfinite(x) ? std::clamp(x, 0.0, 1.0) : 0.0;
                auto const v = static_cast<unsigned>(std::lround(clamped * scale));
                std::size_t const i = static_cast<std::size_t>((r * img.width() + c) * img.channels() + k);
                if (wide) {
                    raw.bytes[2 * i] = static_cast<unsigned char>(v & 0xff);
                    raw.bytes[2 * i + 1] = static_cast<unsigned char>(v >> 8);
                } else {
                    raw.bytes[i] = static_cast<unsigned char>(v);
                }
            }

    auto f = detail::open_file(path, "wb");
    detail::PngMessage msg;
    if (!detail::png_write_raw(f.get(), raw, msg))
        throw DataError(path.string() + ": cannot write PNG: " + msg.text);
    if (std::fflush(f.get()) != 0)
        throw DataError(path.string() + ": write failed");
}

/// Portable float map, little endian, rows stored bottom to top.
inline void write_pfm(std::filesystem::path const &path, Image const &img)
{
    if (img.channels() != 1 && img.channels() != 3)
        throw UsageError("write_pfm: image must have 1 or 3 channels");
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw DataError(path.string() + ": cannot open for writing");
    os << (img.channels() == 3 ? "PF" : "Pf") << '\n' << img.width() << ' ' << img.height() << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(img.width() * img.channels()));
    for (Index r = img.height() - 1; r >= 0; --r) {
        for (Index c = 0; c < img.width(); ++c)
            for (Index k = 0; k < img.channels(); ++k)
                row[static_cast<std::size_t>(c * img.channels() + k)] = static_cast<float>(img(k, r, c));
        if constexpr (std::endian::native == std::endian::big)
            for (auto &v : row)
                v = detail::swap_bytes(v);
        os.write(reinterpret_cast<char const *>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!os)
        throw DataError(path.string() + ": write failed");
}

inline Image read_pfm(std::filesystem::path const &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError(path.string() + ": cannot open");
    std::string magic;
    long long w = 0, h = 0;
    double scale = 0.0;
    is >> magic >> w >> h >> scale;
    if (!is || (magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0.0)
        throw DataError(path.string() + ": invalid PFM header");
    is.get();
    Index const ch = magic == "PF" ? 3 : 1;
    bool const little = scale < 0.0;
    bool const swap = little != (std::endian::native == std::endian::little);

    Image img(h, w, ch);
    std::vector<float> row(static_cast<std::size_t>(w * ch));
    for (Index r = h - 1; r >= 0; --r) {
        is.read(reinterpret_cast<char *>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!is)
            throw DataError(path.string() + ": truncated PFM data");
        for (Index c = 0; c < w; ++c)
            for (Index k = 0; k < ch; ++k) {
                float v = row[static_cast<std::size_t>(c * ch + k)];
                if (swap)
                    v = detail::swap_bytes(v);
                img(k, r, c) = v;
            }
    }
    return img;
}

/// Dispatches on the extension: .pfm as float, anything else as PNG.
inline Image read_image(std::filesystem::path const &path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pfm" ? read_pfm(path) : read_png(path);
}

/// Grey images are replicated into three channels; three channel images pass through.
inline Image to_rgb(Image const &img)
{
    if (img.channels() == 3)
        return img;
    if (img.channels() != 1)
        throw DataError("expected a grey or RGB image, got " + std::to_string(img.channels()) + " channels");
    Image out(img.height(), img.width(), 3);
    for (Index k = 0; k < 3; ++k)
        std::copy(img.plane(0).begin(), img.plane(0).end(), out.plane(k).begin());
    return out;
}

} // namespace polarsep
