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
#include "image_io.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace polarsep {

/// Polarizer angle in degrees at each position of the 2x2 superpixel, row-major.
struct MosaicLayout
{
    std::array<int, 4> degrees{90, 45, 135, 0};

    void validate() const
    {
        auto sorted = degrees;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != std::array<int, 4>{0, 45, 90, 135})
            throw UsageError("mosaic layout must be a permutation of 0, 45, 90, 135");
    }

    /// Stack index (0..3 for 0/45/90/135 degrees) of superpixel position `pos`.
    int angle_index(int pos) const { return degrees[static_cast<std::size_t>(pos)] / 45; }
};

/// Splits a polarization mosaic into four half-resolution images without interpolation.
/// Grey mosaics are replicated into three channels.
inline PolarStack demosaic(Image const &mosaic, MosaicLayout const &layout = {})
{
    layout.validate();
    if (mosaic.height() % 2 != 0 || mosaic.width() % 2 != 0)
        throw DataError("demosaic: mosaic dimensions " + std::to_string(mosaic.height()) + "x" +
                        std::to_string(mosaic.width()) + " are not even");
    Image const rgb = to_rgb(mosaic);
    Index const h = rgb.height() / 2, w = rgb.width() / 2;
    std::array<Image, kAngles> ims;
    for (int pos = 0; pos < 4; ++pos) {
        Image &im = ims[static_cast<std::size_t>(layout.angle_index(pos))];
        im = Image(h, w, 3);
        Index const dr = pos / 2, dc = pos % 2;
        for (Index k = 0; k < 3; ++k)
            for (Index r = 0; r < h; ++r)
                for (Index c = 0; c < w; ++c)
                    im(k, r, c) = rgb(k, 2 * r + dr, 2 * c + dc);
    }
    return PolarStack(std::move(ims));
}

/// Interleaves a stack into a mosaic; the inverse of demosaic.
inline Image pack_mosaic(PolarStack const &stack, MosaicLayout const &layout = {})
{
    layout.validate();
    Index const h = stack.height(), w = stack.width();
    Image out(2 * h, 2 * w, 3);
    for (int pos = 0; pos < 4; ++pos) {
        Image const &im = stack[layout.angle_index(pos)];
        Index const dr = pos / 2, dc = pos % 2;
        for (Index k = 0; k < 3; ++k)
            for (Index r = 0; r < h; ++r)
                for (Index c = 0; c < w; ++c)
                    out(k, 2 * r + dr, 2 * c + dc) = im(k, r, c);
    }
    return out;
}

} // namespace polarsep
