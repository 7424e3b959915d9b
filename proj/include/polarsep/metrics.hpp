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

#include <cmath>
#include <optional>
#include <vector>

namespace polarsep {

inline constexpr double kPsnrCap = 99.0;

namespace detail {

inline void requireSameShape(Image const &a, Image const &b, char const *what)
{
    if (!a.sameShape(b))
        throw DataError(std::string(what) + ": image dimensions differ");
}

} // namespace detail

/// 10 log10(peak^2 / MSE) over all channels. Identical images give kPsnrCap.
inline double psnr(Image const &a, Image const &b, double peak = 1.0, Image const *mask = nullptr)
{
    detail::requireSameShape(a, b, "psnr");
    if (!(peak > 0.0))
        throw UsageError("psnr: peak must be positive");
    if (mask && (mask->height() != a.height() || mask->width() != a.width()))
        throw DataError("psnr: mask dimensions differ");
    double se = 0.0;
    double count = 0.0;
    for (Index k = 0; k < a.channels(); ++k) {
        auto const pa = a.plane(k), pb = b.plane(k);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            if (mask && mask->plane(0)[i] == 0.0)
                continue;
            double const d = pa[i] - pb[i];
            se += d * d;
            count += 1.0;
        }
    }
    if (count == 0.0 || se == 0.0)
        return kPsnrCap;
    double const mse = se / count;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

enum class SsimColor
{
    luminance,    ///< Rec.601 luma of RGB inputs
    channel_mean, ///< mean of per-channel scores
};

struct SsimOptions
{
    int radius = 5; ///< 11 x 11 window
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
    SsimColor color = SsimColor::luminance;
};

struct SsimResult
{
    double score = 1.0;
    Image map; ///< one channel, same size as the inputs
};

namespace detail {

/// Separable Gaussian filter; windows truncated at the border are renormalized.
inline std::vector<double> gaussian_filter(std::span<double const> x, Index h, Index w, std::vector<double> const &k)
{
    int const rad = static_cast<int>(k.size() / 2);
    std::vector<double> tmp(x.size()), out(x.size());
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            double acc = 0.0, wsum = 0.0;
            for (int d = -rad; d <= rad; ++d) {
                Index const cc = c + d;
                if (cc < 0 || cc >= w)
                    continue;
                acc += k[d + rad] * x[r * w + cc];
                wsum += k[d + rad];
            }
            tmp[r * w + c] = acc / wsum;
        }
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            double acc = 0.0, wsum = 0.0;
            for (int d = -rad; d <= rad; ++d) {
                Index const rr = r + d;
                if (rr < 0 || rr >= h)
                    continue;
                acc += k[d + rad] * tmp[rr * w + c];
                wsum += k[d + rad];
            }
            out[r * w + c] = acc / wsum;
        }
    return out;
}

inline Image ssim_plane(std::span<double const> a, std::span<double const> b, Index h, Index w, SsimOptions const &o)
{
    std::vector<double> k(static_cast<std::size_t>(2 * o.radius + 1));
    for (int i = -o.radius; i <= o.radius; ++i)
        k[i + o.radius] = std::exp(-(i * i) / (2.0 * o.sigma * o.sigma));

    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    auto const mu_a = gaussian_filter(a, h, w, k);
    auto const mu_b = gaussian_filter(b, h, w, k);
    auto const e_aa = gaussian_filter(aa, h, w, k);
    auto const e_bb = gaussian_filter(bb, h, w, k);
    auto const e_ab = gaussian_filter(ab, h, w, k);

    double const c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
    double const c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
    Image map(h, w, 1);
    auto m = map.plane(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        double const va = e_aa[i] - mu_a[i] * mu_a[i];
        double const vb = e_bb[i] - mu_b[i] * mu_b[i];
        double const cov = e_ab[i] - mu_a[i] * mu_b[i];
        m[i] = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return map;
}

inline double masked_mean(Image const &map, Image const *mask)
{
    double acc = 0.0, n = 0.0;
    auto const m = map.plane(0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (mask && mask->plane(0)[i] == 0.0)
            continue;
        acc += m[i];
        n += 1.0;
    }
    return n > 0.0 ? acc / n : 1.0;
}

} // namespace detail

/// Gaussian-windowed SSIM. Multi-channel inputs are reduced per `opts.color`.
inline SsimResult ssim(Image const &a, Image const &b, SsimOptions const &opts = {}, Image const *mask = nullptr)
{
    detail::requireSameShape(a, b, "ssim");
    if (mask && (mask->height() != a.height() || mask->width() != a.width()))
        throw DataError("ssim: mask dimensions differ");
    Index const h = a.height(), w = a.width();
    SsimResult res;
    if (a.channels() == 3 && opts.color == SsimColor::luminance) {
        Image const la = luminance(a), lb = luminance(b);
        res.map = detail::ssim_plane(la.plane(0), lb.plane(0), h, w, opts);
    } else {
        res.map = Image(h, w, 1);
        for (Index k = 0; k < a.channels(); ++k) {
            Image const mk = detail::ssim_plane(a.plane(k), b.plane(k), h, w, opts);
            for (std::size_t i = 0; i < mk.data().size(); ++i)
                res.map.data()[i] += mk.data()[i] / static_cast<double>(a.channels());
        }
    }
    res.score = detail::masked_mean(res.map, mask);
    return res;
}

/// Scores of an estimate against ground truth, globally and over the unsaturated pixels.
struct MetricReport
{
    double psnr = 0.0;
    double ssim = 0.0;
    Image ssim_map;
    std::optional<double> psnr_unsaturated;
    std::optional<double> ssim_unsaturated;
};

/// `saturated` (optional, one channel) marks pixels excluded from the masked variants.
inline MetricReport evaluate(Image const &estimate, Image const &truth, Image const *saturated = nullptr,
                             SsimOptions const &opts = {})
{
    MetricReport rep;
    rep.psnr = psnr(estimate, truth);
    auto s = ssim(estimate, truth, opts);
    rep.ssim = s.score;
    if (saturated) {
        Image keep(saturated->height(), saturated->width(), 1);
        for (std::size_t i = 0; i < keep.data().size(); ++i)
            keep.data()[i] = saturated->data()[i] == 0.0 ? 1.0 : 0.0;
        rep.psnr_unsaturated = psnr(estimate, truth, 1.0, &keep);
        rep.ssim_unsaturated = detail::masked_mean(s.map, &keep);
    }
    rep.ssim_map = std::move(s.map);
    return rep;
}

} // namespace polarsep
