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
#include "polar_model.hpp"
#include "rng.hpp"
#include "tensor3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace polarsep {

/// For every pixel, the linear indices of the n4 pixels used as its representations.
struct CandidateMap
{
    Index height = 0;
    Index width = 0;
    Index n4 = 0;
    Index block_size = 0;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::int32_t> indices; ///< pixel-major: indices[p * n4 + i]

    std::int32_t operator()(Index p, Index i) const { return indices[static_cast<std::size_t>(p * n4 + i)]; }
};

inline double chroma_distance(Image const &chro, Index p, Index q)
{
    double d2 = 0.0;
    for (Index k = 0; k < chro.channels(); ++k) {
        double const d = chro.plane(k)[p] - chro.plane(k)[q];
        d2 += d * d;
    }
    return std::sqrt(d2);
}

/// Picks n4 representations per pixel from its (tiled) block. Candidate 0 is the pixel itself; the
/// others are drawn without replacement among block pixels whose chromaticity lies within `threshold`.
/// When fewer qualify, the pixel itself is repeated.
inline CandidateMap select_candidates(Image const &chro, Index block_size, Index n4, double threshold,
                                      std::uint64_t seed)
{
    if (block_size < 1 || n4 < 1 || !(threshold > 0.0))
        throw UsageError("select_candidates: need block_size >= 1, n4 >= 1, threshold > 0");
    Index const h = chro.height(), w = chro.width();
    CandidateMap map{h, w, n4, block_size, threshold, seed, {}};
    map.indices.assign(static_cast<std::size_t>(h * w * n4), 0);

    Index const bw = (w + block_size - 1) / block_size;
    std::vector<std::int32_t> pool;
    for (Index by = 0; by * block_size < h; ++by) {
        for (Index bx = 0; bx < bw; ++bx) {
            Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(by * bw + bx));
            Index const r0 = by * block_size, r1 = std::min(h, r0 + block_size);
            Index const c0 = bx * block_size, c1 = std::min(w, c0 + block_size);
            for (Index r = r0; r < r1; ++r) {
                for (Index c = c0; c < c1; ++c) {
                    Index const p = r * w + c;
                    pool.clear();
                    for (Index qr = r0; qr < r1; ++qr)
                        for (Index qc = c0; qc < c1; ++qc) {
                            Index const q = qr * w + qc;
                            if (q != p && chroma_distance(chro, p, q) < threshold)
                                pool.push_back(static_cast<std::int32_t>(q));
                        }
                    std::int32_t *out = &map.indices[static_cast<std::size_t>(p * n4)];
                    out[0] = static_cast<std::int32_t>(p);
                    Index const take = std::min<Index>(n4 - 1, static_cast<Index>(pool.size()));
                    // Partial Fisher-Yates over the qualifying pool.
                    for (Index i = 0; i < take; ++i) {
                        auto const j = i + static_cast<Index>(rng.below(pool.size() - static_cast<std::size_t>(i)));
                        std::swap(pool[i], pool[j]);
                        out[1 + i] = pool[i];
                    }
                    for (Index i = 1 + take; i < n4; ++i)
                        out[i] = static_cast<std::int32_t>(p);
                }
            }
        }
    }
    return map;
}

struct InitializerParams
{
    Index window_radius = 1;
    double guard_threshold = 0.05;  ///< chromaticity distance admitting a neighbour to propagation
    double change_tolerance = 0.03; ///< stop once no pixel's max chromaticity moves by more than this
    int max_iterations = 10;
    double saturation_level = 1.0 - 1e-6; ///< pixels with a channel at or above this are left untouched

    void validate() const
    {
        if (window_radius < 0)
            throw UsageError("initializer: window_radius must be >= 0");
        if (!(guard_threshold >= 0.0) || !(change_tolerance >= 0.0))
            throw UsageError("initializer: thresholds must be non-negative");
        if (max_iterations < 0)
            throw UsageError("initializer: max_iterations must be >= 0");
        if (!(saturation_level > 0.0))
            throw UsageError("initializer: saturation_level must be positive");
    }
};

/// Specular-free initial diffuse estimate, applied independently to every polarization angle.
///
/// The observed maximum chromaticity max(I)/sum(I) is pulled toward 1/3 by a white specular term.
/// The true diffuse value is recovered by propagating the largest maximum chromaticity among
/// neighbours of similar polarization chromaticity, then removing the achromatic offset
///     s = (max(I) - lambda * sum(I)) / (1 - 3 * lambda)
/// that reconciles the pixel with that chromaticity. Output is clamped to [0, input].
inline PolarStack initialize_diffuse(PolarStack const &stack, ChromaticityImage const &chro,
                                     InitializerParams const &prm = {})
{
    prm.validate();
    Index const h = stack.height(), w = stack.width(), n = h * w;
    PolarStack out = stack;
    std::vector<double> lam(static_cast<std::size_t>(n)), next(static_cast<std::size_t>(n));
    std::vector<char> saturated(static_cast<std::size_t>(n));

    for (int a = 0; a < kAngles; ++a) {
        Image const &im = stack[a];
        for (Index p = 0; p < n; ++p) {
            double const r = im.plane(0)[p], g = im.plane(1)[p], b = im.plane(2)[p];
            double const sum = r + g + b;
            lam[p] = sum > 1e-12 ? std::max({r, g, b}) / sum : 1.0 / 3.0;
            saturated[p] = std::max({r, g, b}) >= prm.saturation_level;
        }

        for (int it = 0; it < prm.max_iterations; ++it) {
            double change = 0.0;
            for (Index y = 0; y < h; ++y)
                for (Index x = 0; x < w; ++x) {
                    Index const p = y * w + x;
                    double best = lam[p];
                    for (Index dy = -prm.window_radius; dy <= prm.window_radius; ++dy)
                        for (Index dx = -prm.window_radius; dx <= prm.window_radius; ++dx) {
                            Index const yy = y + dy, xx = x + dx;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w)
                                continue;
                            Index const q = yy * w + xx;
                            if (saturated[q] || lam[q] <= best)
                                continue;
                            if (chroma_distance(chro.chro, p, q) < prm.guard_threshold)
                                best = lam[q];
                        }
                    next[p] = best;
                    change = std::max(change, best - lam[p]);
                }
            std::swap(lam, next);
            if (change < prm.change_tolerance)
                break;
        }

        Image &o = out[a];
        for (Index p = 0; p < n; ++p) {
            if (saturated[p] || lam[p] <= 1.0 / 3.0 + 1e-6)
                continue;
            double const r = im.plane(0)[p], g = im.plane(1)[p], b = im.plane(2)[p];
            double const s = (std::max({r, g, b}) - lam[p] * (r + g + b)) / (1.0 - 3.0 * lam[p]);
            if (s <= 0.0)
                continue;
            for (int k = 0; k < 3; ++k) {
                double const v = im.plane(k)[p];
                o.plane(k)[p] = std::clamp(v - s, 0.0, v);
            }
        }
    }
    return out;
}

/// The n4 representation stacks: representation i of pixel p is the value at candidate (p, i).
inline std::vector<PolarStack> gather_representations(PolarStack const &stack, CandidateMap const &cands)
{
    if (stack.height() != cands.height || stack.width() != cands.width)
        throw DataError("gather_representations: candidate map does not match the image size");
    Index const n = stack.height() * stack.width();
    std::vector<PolarStack> reps(static_cast<std::size_t>(cands.n4), PolarStack(stack.height(), stack.width()));
    for (Index i = 0; i < cands.n4; ++i)
        for (int a = 0; a < kAngles; ++a)
            for (int k = 0; k < 3; ++k) {
                auto const src = stack[a].plane(k);
                auto dst = reps[i][a].plane(k);
                for (Index p = 0; p < n; ++p)
                    dst[p] = src[cands(p, i)];
            }
    return reps;
}

/// Row blocks hold the four angles, column blocks the R, G, B channels:
/// pixel (r, c) of angle a, channel g, representation i sits at (a * n1 + r, g * n2 + c, i).
struct TensorLayout
{
    Index n1 = 0; ///< image rows
    Index n2 = 0; ///< image columns
    Index n4 = 0; ///< representations
    static constexpr std::array<int, kAngles> angle_order{0, 1, 2, 3};
    static constexpr std::array<int, 3> channel_order{0, 1, 2};

    Index rows() const { return kAngles * n1; }
    Index cols() const { return 3 * n2; }
    Index row(int angle, Index r) const { return angle * n1 + r; }
    Index col(int channel, Index c) const { return channel * n2 + c; }
};

struct RepresentationTensor
{
    Tensor3 d;
    TensorLayout layout;
};

/// Pure rearrangement of n4 representation stacks into the (4 n1) x (3 n2) x n4 tensor.
inline RepresentationTensor fold(std::vector<PolarStack> const &reps)
{
    if (reps.empty())
        throw DataError("fold: no representations");
    Index const n1 = reps[0].height(), n2 = reps[0].width();
    TensorLayout const lay{n1, n2, static_cast<Index>(reps.size())};
    Tensor3 d(lay.rows(), lay.cols(), lay.n4);
    for (Index i = 0; i < lay.n4; ++i) {
        for (int a = 0; a < kAngles; ++a) {
            Image const &im = reps[i][a];
            if (im.height() != n1 || im.width() != n2 || im.channels() != 3)
                throw DataError("fold: representation " + std::to_string(i) + " angle " + std::to_string(a) +
                                " has mismatched dimensions");
            for (int g = 0; g < 3; ++g)
                for (Index r = 0; r < n1; ++r)
                    for (Index c = 0; c < n2; ++c)
                        d(lay.row(a, r), lay.col(g, c), i) = im(g, r, c);
        }
    }
    return {std::move(d), lay};
}

inline std::vector<PolarStack> unfold(Tensor3 const &d, TensorLayout const &lay)
{
    if (d.rows() != lay.rows() || d.cols() != lay.cols() || d.tubes() != lay.n4)
        throw DataError("unfold: tensor shape does not match layout");
    std::vector<PolarStack> reps(static_cast<std::size_t>(lay.n4), PolarStack(lay.n1, lay.n2));
    for (Index i = 0; i < lay.n4; ++i)
        for (int a = 0; a < kAngles; ++a)
            for (int g = 0; g < 3; ++g)
                for (Index r = 0; r < lay.n1; ++r)
                    for (Index c = 0; c < lay.n2; ++c)
                        reps[i][a](g, r, c) = d(lay.row(a, r), lay.col(g, c), i);
    return reps;
}

/// Mean over the four angle blocks of representation slice 0, clamped to [0, 1].
inline Image extract_diffuse(Tensor3 const &l, TensorLayout const &lay)
{
    if (l.rows() != lay.rows() || l.cols() != lay.cols() || l.tubes() < 1)
        throw DataError("extract_diffuse: tensor shape does not match layout");
    Image out(lay.n1, lay.n2, 3);
    for (int g = 0; g < 3; ++g)
        for (Index r = 0; r < lay.n1; ++r)
            for (Index c = 0; c < lay.n2; ++c) {
                double acc = 0.0;
                for (int a = 0; a < kAngles; ++a)
                    acc += l(lay.row(a, r), lay.col(g, c), 0);
                out(g, r, c) = std::clamp(0.25 * acc, 0.0, 1.0);
            }
    return out;
}

} // namespace polarsep
