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

#include "image.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace polarsep {

/// Maps any finite angle into [0, pi).
inline double reduce_phase(double phi)
{
    constexpr double pi = std::numbers::pi;
    double r = std::fmod(phi, pi);
    if (r < 0.0)
        r += pi;
    // fmod of a tiny negative number can round up to exactly pi
    if (r >= pi)
        r = 0.0;
    return r;
}

/// Least-squares fit of I(t) = ic + isv * cos(2t - 2phi) to samples at 0/45/90/135 degrees.
struct CosineFit
{
    double ic = 0.0;
    double isv = 0.0;
    double phi = 0.0;
    double residual = 0.0; ///< Euclidean norm of the four-sample fit residual
};

/// The four sample directions are orthogonal, so the normal equations are diagonal:
/// ic is the mean, cos(2t) and sin(2t) coefficients are half-differences of opposite angles.
inline CosineFit fit_cosine(std::array<double, kAngles> const &s)
{
    double const mean = 0.25 * (s[0] + s[1] + s[2] + s[3]);
    double const a = 0.5 * (s[0] - s[2]);
    double const b = 0.5 * (s[1] - s[3]);
    double const alt = 0.25 * (s[0] - s[1] + s[2] - s[3]);

    CosineFit f;
    f.ic = std::max(mean, 0.0);
    f.isv = std::hypot(a, b);
    f.phi = f.isv > 0.0 ? reduce_phase(0.5 * std::atan2(b, a)) : 0.0;
    f.residual = 2.0 * std::abs(alt);
    return f;
}

/// Evaluates the cosine model at the four polarizer angles.
inline std::array<double, kAngles> synthesize_cosine(double ic, double isv, double phi)
{
    std::array<double, kAngles> out{};
    for (int a = 0; a < kAngles; ++a)
        out[a] = ic + isv * std::cos(2.0 * kPolarizerAngles[a] - 2.0 * phi);
    return out;
}

/// Per-pixel, per-channel cosine model parameters of a PolarStack.
struct PolarDecomposition
{
    Image i_c;      ///< constant component, >= 0
    Image i_sv;     ///< cosine amplitude, >= 0
    Image phi;      ///< phase angle in [0, pi)
    Image residual; ///< least-squares residual norm of the four samples
};

inline PolarDecomposition fit_cosine_model(PolarStack const &stack)
{
    Index const h = stack.height(), w = stack.width();
    PolarDecomposition d{Image(h, w, 3), Image(h, w, 3), Image(h, w, 3), Image(h, w, 3)};
    auto const n = d.i_c.data().size();
    for (std::size_t i = 0; i < n; ++i) {
        auto const f = fit_cosine({stack[0].data()[i], stack[1].data()[i], stack[2].data()[i],
                                   stack[3].data()[i]});
        d.i_c.data()[i] = f.ic;
        d.i_sv.data()[i] = f.isv;
        d.phi.data()[i] = f.phi;
        d.residual.data()[i] = f.residual;
    }
    return d;
}

/// Polarization chromaticity image and the approximate diffuse/specular split it is built from.
struct ChromaticityImage
{
    Image chro;      ///< per-channel chromaticity in [0, 1]
    Image i_raw_d;   ///< i_c - i_raw_s (unfloored)
    Image i_raw_s;   ///< 2 * i_sv
    double i_min_bar = 0.0;
};

/// Chromaticity of a single pixel's approximate diffuse colour, with the stabilizer in the denominator.
inline std::array<double, 3> chromaticity_of(std::array<double, 3> raw_d, double i_min_bar)
{
    std::array<double, 3> c{};
    double sum = 0.0;
    for (auto &v : raw_d) {
        v = std::max(v, 0.0);
        sum += v;
    }
    double const denom = sum + i_min_bar;
    if (denom <= 0.0)
        return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (int k = 0; k < 3; ++k)
        c[k] = raw_d[k] / denom;
    return c;
}

/// Average over pixels of the minimum channel of the mean image.
inline double mean_min_channel(Image const &mean_rgb)
{
    Index const n = mean_rgb.pixels();
    if (n == 0)
        return 0.0;
    auto const r = mean_rgb.plane(0), g = mean_rgb.plane(1), b = mean_rgb.plane(2);
    double acc = 0.0;
    for (Index i = 0; i < n; ++i)
        acc += std::min({r[i], g[i], b[i]});
    return acc / static_cast<double>(n);
}

/// The mean image across angles is i_c itself, so i_min_bar is taken from it.
inline ChromaticityImage chromaticity(PolarDecomposition const &decomp)
{
    Index const h = decomp.i_c.height(), w = decomp.i_c.width();
    ChromaticityImage out{Image(h, w, 3), Image(h, w, 3), Image(h, w, 3), 0.0};
    out.i_min_bar = mean_min_channel(decomp.i_c);

    auto const &ic = decomp.i_c.data();
    auto const &isv = decomp.i_sv.data();
    for (std::size_t i = 0; i < ic.size(); ++i) {
        out.i_raw_s.data()[i] = 2.0 * isv[i];
        out.i_raw_d.data()[i] = ic[i] - out.i_raw_s.data()[i];
    }
    Index const n = h * w;
    for (Index p = 0; p < n; ++p) {
        std::array<double, 3> raw{};
        for (int k = 0; k < 3; ++k)
            raw[k] = out.i_raw_d.plane(k)[p];
        auto const c = chromaticity_of(raw, out.i_min_bar);
        for (int k = 0; k < 3; ++k)
            out.chro.plane(k)[p] = c[k];
    }
    return out;
}

/// Illumination chromaticity. Components sum to one unless one was degenerate and replaced.
struct Illumination
{
    std::array<double, 3> gamma{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::array<bool, 3> degenerate{false, false, false};
};

inline constexpr double kDegenerateGamma = 1e-6;

enum class IlluminantEstimator
{
    max_rgb,   ///< average colour of the brightest pixels of the mean image
    polarized, ///< colour of the polarized (cosine) amplitude, which only the specular term carries
};

namespace detail {

inline Illumination finish_illumination(std::array<double, 3> const &acc)
{
    Illumination ill;
    double const sum = acc[0] + acc[1] + acc[2];
    for (int k = 0; k < 3; ++k) {
        double const g = sum > 0.0 ? acc[k] / sum : 0.0;
        if (g <= kDegenerateGamma) {
            ill.gamma[k] = 1.0 / 3.0;
            ill.degenerate[k] = true;
        } else {
            ill.gamma[k] = g;
        }
    }
    return ill;
}

inline std::array<double, 3> max_rgb_sum(PolarStack const &stack, double top_fraction)
{
    Image const m = stack.mean();
    Index const n = m.pixels();
    std::array<double, 3> acc{};
    if (n == 0)
        return acc;
    std::vector<std::pair<double, Index>> bright(static_cast<std::size_t>(n));
    for (Index p = 0; p < n; ++p)
        bright[p] = {m.plane(0)[p] + m.plane(1)[p] + m.plane(2)[p], p};
    Index const top = std::max<Index>(1, static_cast<Index>(std::ceil(top_fraction * static_cast<double>(n))));
    // Ties broken by pixel index so the selection never depends on sort stability.
    std::partial_sort(bright.begin(), bright.begin() + top, bright.end(), [](auto const &x, auto const &y) {
        return x.first > y.first || (x.first == y.first && x.second < y.second);
    });
    for (Index i = 0; i < top; ++i)
        for (int k = 0; k < 3; ++k)
            acc[k] += m.plane(k)[bright[i].second];
    return acc;
}

/// Sum of cosine amplitudes over pixels whose samples are all below `saturation_level`.
inline std::array<double, 3> polarized_sum(PolarStack const &stack, double saturation_level)
{
    std::array<double, 3> acc{};
    Index const n = stack.height() * stack.width();
    for (Index p = 0; p < n; ++p) {
        bool clipped = false;
        for (int a = 0; a < kAngles && !clipped; ++a)
            for (int k = 0; k < 3; ++k)
                clipped = clipped || stack[a].plane(k)[p] >= saturation_level;
        if (clipped)
            continue;
        for (int k = 0; k < 3; ++k) {
            auto const f = fit_cosine({stack[0].plane(k)[p], stack[1].plane(k)[p], stack[2].plane(k)[p],
                                       stack[3].plane(k)[p]});
            acc[k] += f.isv;
        }
    }
    return acc;
}

} // namespace detail

/// Illumination chromaticity of the scene. The polarized estimator falls back to max-RGB when the
/// stack carries no measurable polarization.
inline Illumination estimate_illumination(PolarStack const &stack,
                                          IlluminantEstimator method = IlluminantEstimator::polarized,
                                          double top_fraction = 0.01)
{
    if (method == IlluminantEstimator::polarized) {
        auto const acc = detail::polarized_sum(stack, 1.0 - 1e-6);
        if (acc[0] + acc[1] + acc[2] > 1e-9 * static_cast<double>(std::max<Index>(1, stack.height() * stack.width())))
            return detail::finish_illumination(acc);
    }
    return detail::finish_illumination(detail::max_rgb_sum(stack, top_fraction));
}

/// Divides every channel k of every angle by 3 * gamma[k].
inline PolarStack apply_illumination(PolarStack stack, std::array<double, 3> const &gamma)
{
    for (auto &im : stack.images)
        for (int k = 0; k < 3; ++k) {
            double const s = 1.0 / (3.0 * gamma[k]);
            for (auto &v : im.plane(k))
                v *= s;
        }
    return stack;
}

/// Inverse of apply_illumination for a single RGB image.
inline Image restore_illumination(Image img, std::array<double, 3> const &gamma)
{
    for (int k = 0; k < 3; ++k)
        for (auto &v : img.plane(k))
            v *= 3.0 * gamma[k];
    return img;
}

struct NormalizedStack
{
    PolarStack stack;
    Illumination illumination;
};

inline NormalizedStack normalize_illumination(PolarStack const &stack,
                                              IlluminantEstimator method = IlluminantEstimator::polarized)
{
    auto ill = estimate_illumination(stack, method);
    return {apply_illumination(stack, ill.gamma), ill};
}

} // namespace polarsep
