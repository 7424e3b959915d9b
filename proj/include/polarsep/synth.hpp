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

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace polarsep {

using Vec3 = std::array<double, 3>;

inline double dot(Vec3 const &a, Vec3 const &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 normalized(Vec3 v)
{
    double const n = std::sqrt(dot(v, v));
    if (n > 0.0)
        for (auto &x : v)
            x /= n;
    return v;
}

enum class PhaseMode
{
    from_geometry, ///< azimuth of the surface normal, mod pi
    constant,
};

struct SceneSpec
{
    std::string name;
    Image depth;  ///< one channel, pixel units
    Image albedo; ///< RGB
    Image coverage; ///< optional one-channel mask; pixels at 0 are empty background and render black
    Vec3 light_dir{0.0, 0.0, 1.0};
    Vec3 light_color{1.0, 1.0, 1.0};
    double shininess = 32.0;
    double k_d = 1.0;
    double k_s = 0.5;
    double polarization = 0.7; ///< fraction p of the specular term that is polarized
    PhaseMode phase_mode = PhaseMode::from_geometry;
    double phi0 = 0.0;

    void validate() const
    {
        if (depth.channels() != 1 || depth.empty())
            throw DataError("scene '" + name + "': depth must be a non-empty single-channel raster");
        if (!depth.allFinite())
            throw DataError("scene '" + name + "': depth contains non-finite values");
        if (albedo.channels() != 3 || albedo.height() != depth.height() || albedo.width() != depth.width())
            throw DataError("scene '" + name + "': albedo must be RGB and match the depth size");
        if (!coverage.empty() && (coverage.channels() != 1 || coverage.height() != depth.height() ||
                                  coverage.width() != depth.width()))
            throw DataError("scene '" + name + "': coverage must be single-channel and match the depth size");
        if (std::abs(std::sqrt(dot(light_dir, light_dir)) - 1.0) > 1e-9)
            throw DataError("scene '" + name + "': light_dir must be a unit vector");
        if (!(polarization >= 0.0 && polarization <= 1.0))
            throw DataError("scene '" + name + "': polarization fraction must be in [0, 1]");
    }
};

struct GroundTruthScene
{
    std::string name;
    PolarStack stack;   ///< clamped to [0, 1]
    Image diffuse_gt;   ///< RGB
    Image specular_gt;  ///< RGB, the specular contribution to the mean of the four angles
    Image saturated;    ///< one channel, 1 where any angle or channel exceeded 1 before clamping
    Image phi;          ///< one channel, phase angle used for the polarized specular term

    double saturated_fraction() const
    {
        double n = 0.0;
        for (double v : saturated.data())
            n += v;
        return saturated.pixels() ? n / static_cast<double>(saturated.pixels()) : 0.0;
    }
};

/// Central differences (one-sided on the border); n = normalize(-dz/dx, -dz/dy, 1).
/// The result has three channels holding the x, y, z components.
inline Image normals_from_depth(Image const &depth)
{
    Index const h = depth.height(), w = depth.width();
    Image n(h, w, 3);
    auto z = [&](Index r, Index c) { return depth(0, r, c); };
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            double dx = 0.0, dy = 0.0;
            if (w > 1)
                dx = c == 0 ? z(r, 1) - z(r, 0) : c == w - 1 ? z(r, c) - z(r, c - 1) : 0.5 * (z(r, c + 1) - z(r, c - 1));
            if (h > 1)
                dy = r == 0 ? z(1, c) - z(0, c) : r == h - 1 ? z(r, c) - z(r - 1, c) : 0.5 * (z(r + 1, c) - z(r - 1, c));
            Vec3 const v = normalized({-dx, -dy, 1.0});
            for (int k = 0; k < 3; ++k)
                n(k, r, c) = v[k];
        }
    return n;
}

/// Blinn-Phong shading of a depth map seen along +z by a distant camera, split into an
/// unpolarized diffuse term and a partially polarized specular term:
///     I_c  = diffuse + (1 - p/2) * specular
///     I_sv = (p/2) * specular
///     I(t) = I_c + I_sv * cos(2t - 2 phi)
inline GroundTruthScene render(SceneSpec const &spec)
{
    spec.validate();
    Index const h = spec.depth.height(), w = spec.depth.width();
    Image const normals = normals_from_depth(spec.depth);
    Vec3 const l = spec.light_dir;
    Vec3 const hv = normalized({l[0], l[1], l[2] + 1.0});

    GroundTruthScene gt{spec.name, PolarStack(h, w), Image(h, w, 3), Image(h, w, 3), Image(h, w, 1), Image(h, w, 1)};
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            Vec3 const n{normals(0, r, c), normals(1, r, c), normals(2, r, c)};
            bool const covered = spec.coverage.empty() || spec.coverage(0, r, c) != 0.0;
            double const nl = covered ? std::max(0.0, dot(n, l)) : 0.0;
            double const nh = nl > 0.0 ? std::max(0.0, dot(n, hv)) : 0.0;
            double const spec_shape = spec.k_s * std::pow(nh, spec.shininess);
            double const phi = spec.phase_mode == PhaseMode::constant ? reduce_phase(spec.phi0)
                                                                      : reduce_phase(std::atan2(n[1], n[0]));
            gt.phi(0, r, c) = phi;
            bool sat = false;
            for (int k = 0; k < 3; ++k) {
                double const diffuse = spec.k_d * spec.albedo(k, r, c) * spec.light_color[k] * nl;
                double const specular = spec_shape * spec.light_color[k];
                double const ic = diffuse + (1.0 - 0.5 * spec.polarization) * specular;
                double const isv = 0.5 * spec.polarization * specular;
                gt.diffuse_gt(k, r, c) = diffuse;
                gt.specular_gt(k, r, c) = ic - diffuse;
                auto const samples = synthesize_cosine(ic, isv, phi);
                for (int a = 0; a < kAngles; ++a) {
                    sat = sat || samples[a] > 1.0;
                    gt.stack[a](k, r, c) = std::clamp(samples[a], 0.0, 1.0);
                }
            }
            gt.saturated(0, r, c) = sat ? 1.0 : 0.0;
        }
    return gt;
}

namespace scenes {

/// Hemisphere of radius `radius` centred at (cy, cx), resting on a plane at depth 0.
inline void add_sphere(Image &depth, double cy, double cx, double radius)
{
    for (Index r = 0; r < depth.height(); ++r)
        for (Index c = 0; c < depth.width(); ++c) {
            double const y = static_cast<double>(r) - cy, x = static_cast<double>(c) - cx;
            double const q = radius * radius - x * x - y * y;
            if (q > 0.0)
                depth(0, r, c) = std::max(depth(0, r, c), std::sqrt(q));
        }
}

inline void add_blob(Image &depth, double cy, double cx, double sigma, double height)
{
    for (Index r = 0; r < depth.height(); ++r)
        for (Index c = 0; c < depth.width(); ++c) {
            double const y = static_cast<double>(r) - cy, x = static_cast<double>(c) - cx;
            depth(0, r, c) += height * std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
        }
}

inline Image uniform_albedo(Index h, Index w, Vec3 const &rgb)
{
    Image a(h, w, 3);
    for (int k = 0; k < 3; ++k)
        for (auto &v : a.plane(k))
            v = rgb[k];
    return a;
}

/// Piecewise-constant albedo: vertical stripes of `period` pixels cycling through `colors`.
inline Image striped_albedo(Index h, Index w, std::vector<Vec3> const &colors, Index period)
{
    Image a(h, w, 3);
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            auto const &col = colors[static_cast<std::size_t>((c / period) % static_cast<Index>(colors.size()))];
            for (int k = 0; k < 3; ++k)
                a(k, r, c) = col[k];
        }
    return a;
}

/// Albedo with a disc of `inner` colour over an `outer` background.
inline Image disc_albedo(Index h, Index w, Vec3 const &outer, Vec3 const &inner, double cy, double cx, double radius)
{
    Image a = uniform_albedo(h, w, outer);
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            double const y = static_cast<double>(r) - cy, x = static_cast<double>(c) - cx;
            if (x * x + y * y < radius * radius)
                for (int k = 0; k < 3; ++k)
                    a(k, r, c) = inner[k];
        }
    return a;
}

inline Image disc_coverage(Index h, Index w, std::vector<std::array<double, 3>> const &discs)
{
    Image m(h, w, 1);
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c)
            for (auto const &d : discs) {
                double const y = static_cast<double>(r) - d[0], x = static_cast<double>(c) - d[1];
                if (x * x + y * y < d[2] * d[2])
                    m(0, r, c) = 1.0;
            }
    return m;
}

} // namespace scenes

/// Scene descriptions of the evaluation suite at `size` x `size` pixels, ordered from weak to
/// strong specular reflection; the last ones saturate.
inline std::vector<SceneSpec> suite_specs(Index size = 128)
{
    using namespace scenes;
    double const n = static_cast<double>(size);
    Index const h = size, w = size;
    std::vector<SceneSpec> out;

    auto sphere_scene = [&](std::string name) {
        SceneSpec s;
        s.name = std::move(name);
        s.depth = Image(h, w, 1);
        add_sphere(s.depth, 0.5 * n, 0.5 * n, 0.42 * n);
        s.coverage = disc_coverage(h, w, {{0.5 * n, 0.5 * n, 0.42 * n}});
        return s;
    };
    auto blob_scene = [&](std::string name) {
        SceneSpec s;
        s.name = std::move(name);
        s.depth = Image(h, w, 1);
        add_blob(s.depth, 0.30 * n, 0.32 * n, 0.16 * n, 0.30 * n);
        add_blob(s.depth, 0.62 * n, 0.70 * n, 0.20 * n, 0.35 * n);
        add_blob(s.depth, 0.75 * n, 0.25 * n, 0.12 * n, 0.20 * n);
        s.albedo = uniform_albedo(h, w, {0.0, 0.0, 0.0});
        return s;
    };
    std::vector<Vec3> const palette{{0.75, 0.35, 0.20}, {0.25, 0.55, 0.30}, {0.30, 0.35, 0.70}};

    {
        auto s = sphere_scene("sphere-weak");
        s.albedo = uniform_albedo(h, w, {0.75, 0.45, 0.25});
        s.light_dir = normalized({0.3, -0.3, 1.0});
        s.k_d = 0.9;
        s.k_s = 0.12;
        s.shininess = 60.0;
        out.push_back(std::move(s));
    }
    {
        auto s = blob_scene("blobs-uniform");
        s.albedo = uniform_albedo(h, w, {0.35, 0.55, 0.70});
        s.light_dir = normalized({-0.4, -0.2, 1.0});
        s.k_d = 0.85;
        s.k_s = 0.25;
        s.shininess = 50.0;
        out.push_back(std::move(s));
    }
    {
        auto s = sphere_scene("sphere-textured");
        s.albedo = striped_albedo(h, w, palette, std::max<Index>(2, size / 8));
        s.light_dir = normalized({-0.3, -0.4, 1.0});
        s.k_d = 0.9;
        s.k_s = 0.35;
        s.shininess = 45.0;
        out.push_back(std::move(s));
    }
    {
        auto s = blob_scene("blobs-textured");
        s.albedo = disc_albedo(h, w, palette[1], palette[0], 0.55 * n, 0.55 * n, 0.25 * n);
        s.light_dir = normalized({0.35, 0.25, 1.0});
        s.k_d = 0.85;
        s.k_s = 0.45;
        s.shininess = 40.0;
        out.push_back(std::move(s));
    }
    {
        auto s = sphere_scene("two-spheres");
        s.depth = Image(h, w, 1);
        add_sphere(s.depth, 0.32 * n, 0.32 * n, 0.26 * n);
        add_sphere(s.depth, 0.66 * n, 0.66 * n, 0.30 * n);
        s.coverage = disc_coverage(h, w, {{0.32 * n, 0.32 * n, 0.26 * n}, {0.66 * n, 0.66 * n, 0.30 * n}});
        s.albedo = disc_albedo(h, w, palette[2], palette[0], 0.32 * n, 0.32 * n, 0.27 * n);
        s.light_dir = normalized({0.2, -0.35, 1.0});
        s.k_d = 0.85;
        s.k_s = 0.6;
        s.shininess = 40.0;
        out.push_back(std::move(s));
    }
    {
        auto s = sphere_scene("sphere-strong");
        s.albedo = uniform_albedo(h, w, {0.70, 0.30, 0.25});
        s.light_dir = normalized({-0.25, 0.3, 1.0});
        s.k_d = 0.8;
        s.k_s = 0.8;
        s.shininess = 35.0;
        out.push_back(std::move(s));
    }
    {
        auto s = sphere_scene("sphere-saturated");
        s.albedo = striped_albedo(h, w, palette, std::max<Index>(2, size / 6));
        s.light_dir = normalized({0.3, 0.25, 1.0});
        s.k_d = 0.85;
        s.k_s = 1.1;
        s.shininess = 30.0;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<GroundTruthScene> scene_suite(Index size = 128)
{
    std::vector<GroundTruthScene> out;
    for (auto const &s : suite_specs(size))
        out.push_back(render(s));
    return out;
}

} // namespace polarsep
