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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace polarsep {

using Index = std::ptrdiff_t;

/// Planar floating point raster: channel-major, then row-major.
class Image
{
  public:
    Image() = default;
    Image(Index height, Index width, Index channels, double fill = 0.0)
      : height_{height}
      , width_{width}
      , channels_{channels}
      , data_(checkedSize(height, width, channels), fill)
    {
    }

    Index height() const { return height_; }
    Index width() const { return width_; }
    Index channels() const { return channels_; }
    Index pixels() const { return height_ * width_; }
    bool empty() const { return data_.empty(); }

    double &operator()(Index ch, Index r, Index c) { return data_[offset(ch, r, c)]; }
    double operator()(Index ch, Index r, Index c) const { return data_[offset(ch, r, c)]; }

    std::span<double> plane(Index ch)
    {
        return {data_.data() + ch * pixels(), static_cast<std::size_t>(pixels())};
    }
    std::span<double const> plane(Index ch) const
    {
        return {data_.data() + ch * pixels(), static_cast<std::size_t>(pixels())};
    }

    std::vector<double> &data() { return data_; }
    std::vector<double> const &data() const { return data_; }

    bool sameShape(Image const &o) const
    {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }

    bool allFinite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    void clamp(double lo, double hi)
    {
        for (auto &v : data_)
            v = std::clamp(v, lo, hi);
    }

    bool operator==(Image const &) const = default;

  private:
    static std::size_t checkedSize(Index height, Index width, Index channels)
    {
        if (height < 0 || width < 0 || channels < 1)
            throw UsageError("Image: invalid dimensions");
        return static_cast<std::size_t>(height * width * channels);
    }

    std::size_t offset(Index ch, Index r, Index c) const
    {
        return static_cast<std::size_t>((ch * height_ + r) * width_ + c);
    }

    Index height_ = 0;
    Index width_ = 0;
    Index channels_ = 0;
    std::vector<double> data_;
};

inline constexpr int kAngles = 4;

/// Polarizer angles of the four captures, in radians: 0, 45, 90, 135 degrees.
inline constexpr std::array<double, kAngles> kPolarizerAngles{0.0, std::numbers::pi / 4,
                                                              std::numbers::pi / 2,
                                                              3 * std::numbers::pi / 4};

/// Four co-registered RGB images at polarizer angles 0/45/90/135 degrees.
struct PolarStack
{
    std::array<Image, kAngles> images;

    PolarStack() = default;
    PolarStack(Index height, Index width, double fill = 0.0)
    {
        for (auto &im : images)
            im = Image(height, width, 3, fill);
    }
    explicit PolarStack(std::array<Image, kAngles> ims)
      : images(std::move(ims))
    {
        validate();
    }

    Index height() const { return images[0].height(); }
    Index width() const { return images[0].width(); }
    Image &operator[](int a) { return images[a]; }
    Image const &operator[](int a) const { return images[a]; }

    /// Throws DataError when the angles disagree in shape or hold negative / non-finite values.
    void validate() const
    {
        for (int a = 0; a < kAngles; ++a) {
            auto const &im = images[a];
            if (im.channels() != 3)
                throw DataError("PolarStack: angle " + std::to_string(a) + " is not RGB");
            if (!im.sameShape(images[0]))
                throw DataError("PolarStack: angle " + std::to_string(a) + " dimensions differ from angle 0");
            for (double v : im.data())
                if (!std::isfinite(v) || v < 0.0)
                    throw DataError("PolarStack: angle " + std::to_string(a) +
                                    " contains a negative or non-finite intensity");
        }
    }

    /// Per-pixel mean across the four angles.
    Image mean() const
    {
        Image m(height(), width(), 3);
        auto &md = m.data();
        for (auto const &im : images)
            for (std::size_t i = 0; i < md.size(); ++i)
                md[i] += im.data()[i];
        for (auto &v : md)
            v *= 0.25;
        return m;
    }

    bool operator==(PolarStack const &) const = default;
};

/// Luminance with Rec.601 weights.
inline Image luminance(Image const &rgb)
{
    Image y(rgb.height(), rgb.width(), 1);
    auto const r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    auto out = y.plane(0);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return y;
}

} // namespace polarsep
