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
#include <polarsep/polar_model.hpp>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace polarsep;

namespace {

constexpr double pi = std::numbers::pi;

// Independent least-squares oracle: QR solve of the 4 x 3 design matrix [1, cos 2t, sin 2t].
Eigen::Vector3d lsq_oracle(std::array<double, 4> const &s)
{
    Eigen::Matrix<double, 4, 3> a;
    Eigen::Vector4d y;
    for (int i = 0; i < 4; ++i) {
        double const t = i * pi / 4.0;
        a.row(i) << 1.0, std::cos(2 * t), std::sin(2 * t);
        y(i) = s[i];
    }
    return a.colPivHouseholderQr().solve(y);
}

PolarStack uniform_stack(Index h, Index w, std::array<double, 4> per_angle)
{
    PolarStack s(h, w);
    for (int a = 0; a < 4; ++a)
        for (auto &v : s[a].data())
            v = per_angle[a];
    return s;
}

} // namespace

TEST(ReducePhase, Examples)
{
    EXPECT_EQ(reduce_phase(0.0), 0.0);
    EXPECT_NEAR(reduce_phase(pi + 0.3), 0.3, 1e-15);
    EXPECT_NEAR(reduce_phase(-0.2), pi - 0.2, 1e-15);
    EXPECT_EQ(reduce_phase(-1e-300), 0.0);
}

TEST(ReducePhase, IdempotentAndInRange)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 10000; ++i) {
        double const x = u(rng);
        double const r = reduce_phase(x);
        ASSERT_GE(r, 0.0);
        ASSERT_LT(r, pi);
        ASSERT_EQ(reduce_phase(r), r);
        double const k = (x - r) / pi;
        ASSERT_NEAR(k, std::round(k), 1e-9);
    }
}

TEST(FitCosine, ConstantPixel)
{
    auto const f = fit_cosine({0.5, 0.5, 0.5, 0.5});
    EXPECT_EQ(f.ic, 0.5);
    EXPECT_EQ(f.isv, 0.0);
    EXPECT_EQ(f.phi, 0.0);
    EXPECT_EQ(f.residual, 0.0);
}

TEST(FitCosine, ThirtyDegrees)
{
    double const phi = 30.0 * pi / 180.0;
    std::array<double, 4> s{};
    for (int i = 0; i < 4; ++i)
        s[i] = 0.4 + 0.1 * std::cos(2.0 * (i * pi / 4.0) - 2.0 * phi);
    EXPECT_NEAR(s[0], 0.4500, 1e-4);
    EXPECT_NEAR(s[1], 0.4866, 1e-4);
    EXPECT_NEAR(s[2], 0.3500, 1e-4);
    EXPECT_NEAR(s[3], 0.3134, 1e-4);
    auto const f = fit_cosine(s);
    EXPECT_NEAR(f.ic, 0.4, 1e-10);
    EXPECT_NEAR(f.isv, 0.1, 1e-10);
    EXPECT_NEAR(f.phi, phi, 1e-10);
}

TEST(FitCosine, PhaseNearPi)
{
    double const phi = 170.0 * pi / 180.0;
    auto const s = synthesize_cosine(0.3, 0.2, phi);
    auto const f = fit_cosine(s);
    EXPECT_NEAR(f.phi, phi, 1e-12);
    EXPECT_LT(f.phi, pi);
    EXPECT_NEAR(f.ic, 0.3, 1e-12);
    EXPECT_NEAR(f.isv, 0.2, 1e-12);
}

TEST(FitCosine, MatchesLeastSquaresOracle)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        std::array<double, 4> s{u(rng), u(rng), u(rng), u(rng)};
        auto const x = lsq_oracle(s);
        auto const f = fit_cosine(s);
        ASSERT_NEAR(f.ic, x(0), 1e-12);
        ASSERT_NEAR(f.isv * std::cos(2 * f.phi), x(1), 1e-12);
        ASSERT_NEAR(f.isv * std::sin(2 * f.phi), x(2), 1e-12);
        // residual: norm of samples minus the fitted model
        auto const m = synthesize_cosine(x(0), std::hypot(x(1), x(2)), 0.5 * std::atan2(x(2), x(1)));
        double r2 = 0.0;
        for (int k = 0; k < 4; ++k)
            r2 += (s[k] - m[k]) * (s[k] - m[k]);
        ASSERT_NEAR(f.residual, std::sqrt(r2), 1e-12);
    }
}

TEST(FitCosine, ResidualIgnoresConstantOffset)
{
    std::array<double, 4> s{0.2, 0.7, 0.4, 0.1};
    auto const f1 = fit_cosine(s);
    for (auto &v : s)
        v += 0.25;
    auto const f2 = fit_cosine(s);
    EXPECT_NEAR(f2.residual, f1.residual, 1e-15);
    EXPECT_NEAR(f2.ic, f1.ic + 0.25, 1e-15);
    EXPECT_NEAR(f2.isv, f1.isv, 1e-15);
}

TEST(FitCosine, RoundTripProperty)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20000; ++i) {
        double const ic = 0.01 + u(rng);
        double const isv = u(rng) * ic;
        double const phi = u(rng) * pi;
        auto const f = fit_cosine(synthesize_cosine(ic, isv, phi));
        ASSERT_NEAR(f.ic, ic, 1e-9 * ic);
        ASSERT_NEAR(f.isv, isv, 1e-9 * std::max(isv, 1e-12) + 1e-15);
        if (isv > 1e-6 * ic) {
            double d = std::abs(f.phi - phi);
            d = std::min(d, pi - d);
            ASSERT_LE(d, 1e-9 * std::max(phi, 1.0) / std::min(1.0, isv / ic));
        }
        ASSERT_LE(f.residual, 1e-12);
    }
}

TEST(FitCosineModel, StackFieldsAndInvariants)
{
    PolarStack s(2, 3);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto &im : s.images)
        for (auto &v : im.data())
            v = u(rng);
    auto const d = fit_cosine_model(s);
    for (Index k = 0; k < 3; ++k)
        for (Index r = 0; r < 2; ++r)
            for (Index c = 0; c < 3; ++c) {
                std::array<double, 4> px{s[0](k, r, c), s[1](k, r, c), s[2](k, r, c), s[3](k, r, c)};
                auto const f = fit_cosine(px);
                EXPECT_EQ(d.i_c(k, r, c), f.ic);
                EXPECT_GE(d.i_sv(k, r, c), 0.0);
                EXPECT_GE(d.phi(k, r, c), 0.0);
                EXPECT_LT(d.phi(k, r, c), pi);
                EXPECT_EQ(d.residual(k, r, c), f.residual);
            }
}

TEST(Chromaticity, UnpolarizedGray)
{
    double const g = 0.4;
    auto const d = fit_cosine_model(uniform_stack(3, 3, {g, g, g, g}));
    auto const c = chromaticity(d);
    EXPECT_NEAR(c.i_min_bar, g, 1e-15);
    for (double v : c.chro.data())
        EXPECT_NEAR(v, g / (3 * g + g), 1e-15);
}

TEST(Chromaticity, ZeroRawDiffuse)
{
    EXPECT_EQ(chromaticity_of({0.0, 0.0, 0.0}, 0.1), (std::array<double, 3>{0.0, 0.0, 0.0}));
    // negative raw diffuse is floored
    auto const c = chromaticity_of({-0.3, 0.2, 0.2}, 0.0);
    EXPECT_EQ(c[0], 0.0);
    EXPECT_NEAR(c[1], 0.5, 1e-15);
}

TEST(Chromaticity, AllBlackIsOneThird)
{
    auto const c = chromaticity(fit_cosine_model(uniform_stack(2, 2, {0, 0, 0, 0})));
    EXPECT_EQ(c.i_min_bar, 0.0);
    for (double v : c.chro.data())
        EXPECT_EQ(v, 1.0 / 3.0);
}

TEST(Chromaticity, AverageOfMinima)
{
    // pixel 0 has channel minimum 0.05, pixel 1 has 0.15 -> mean 0.1
    PolarStack s(1, 2);
    std::array<std::array<double, 3>, 2> px{{{0.05, 0.3, 0.6}, {0.9, 0.15, 0.2}}};
    for (int a = 0; a < 4; ++a)
        for (Index c = 0; c < 2; ++c)
            for (Index k = 0; k < 3; ++k)
                s[a](k, 0, c) = px[c][k];
    EXPECT_NEAR(chromaticity(fit_cosine_model(s)).i_min_bar, 0.1, 1e-15);
}

TEST(Chromaticity, Invariants)
{
    PolarStack s(4, 4);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto &im : s.images)
        for (auto &v : im.data())
            v = u(rng);
    auto const d = fit_cosine_model(s);
    auto const c = chromaticity(d);
    ASSERT_GT(c.i_min_bar, 0.0);
    for (Index p = 0; p < 16; ++p) {
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) {
            EXPECT_EQ(c.i_raw_s.plane(k)[p], 2.0 * d.i_sv.plane(k)[p]);
            EXPECT_EQ(c.i_raw_d.plane(k)[p], d.i_c.plane(k)[p] - c.i_raw_s.plane(k)[p]);
            EXPECT_GE(c.chro.plane(k)[p], 0.0);
            EXPECT_LE(c.chro.plane(k)[p], 1.0);
            sum += c.chro.plane(k)[p];
        }
        EXPECT_LE(sum, 1.0 + 1e-12);
    }
    // with no stabilizer, positive rows sum to exactly one (up to rounding)
    auto const e = chromaticity_of({0.2, 0.5, 0.1}, 0.0);
    EXPECT_NEAR(e[0] + e[1] + e[2], 1.0, 1e-15);
}

TEST(Illumination, WhiteIsIdentity)
{
    auto const s = uniform_stack(2, 2, {0.2, 0.4, 0.6, 0.3});
    auto const out = apply_illumination(s, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    for (int a = 0; a < 4; ++a)
        for (std::size_t i = 0; i < s[a].data().size(); ++i)
            EXPECT_NEAR(out[a].data()[i], s[a].data()[i], 1e-15);
}

TEST(Illumination, ApplyDividesByThreeGamma)
{
    auto const out = apply_illumination(uniform_stack(2, 2, {1, 1, 1, 1}), {0.5, 0.25, 0.25});
    for (int a = 0; a < 4; ++a) {
        EXPECT_NEAR(out[a](0, 1, 1), 2.0 / 3.0, 1e-15);
        EXPECT_NEAR(out[a](1, 0, 1), 4.0 / 3.0, 1e-15);
        EXPECT_NEAR(out[a](2, 1, 0), 4.0 / 3.0, 1e-15);
    }
    Image const back = restore_illumination(out.mean(), {0.5, 0.25, 0.25});
    for (double v : back.data())
        EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Illumination, AllBlackFallsBack)
{
    auto const s = uniform_stack(3, 3, {0, 0, 0, 0});
    for (auto method : {IlluminantEstimator::polarized, IlluminantEstimator::max_rgb}) {
        auto const n = normalize_illumination(s, method);
        for (int k = 0; k < 3; ++k) {
            EXPECT_EQ(n.illumination.gamma[k], 1.0 / 3.0);
            EXPECT_TRUE(n.illumination.degenerate[k]);
        }
        EXPECT_EQ(n.stack, s);
    }
}

TEST(Illumination, PolarizedEstimatorSeesSpecularColour)
{
    // Diffuse albedo is orange, the polarized specular term is bluish: the estimate follows the specular.
    PolarStack s(4, 4);
    std::array<double, 3> const diffuse{0.5, 0.3, 0.1}, spec{0.1, 0.2, 0.3};
    for (Index k = 0; k < 3; ++k)
        for (Index p = 0; p < 16; ++p) {
            auto const px = synthesize_cosine(diffuse[k] + spec[k], 0.5 * spec[k], 0.3 + 0.1 * p);
            for (int a = 0; a < 4; ++a)
                s[a].plane(k)[p] = px[a];
        }
    auto const ill = estimate_illumination(s);
    EXPECT_NEAR(ill.gamma[0], 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(ill.gamma[1], 2.0 / 6.0, 1e-12);
    EXPECT_NEAR(ill.gamma[2], 3.0 / 6.0, 1e-12);
    // max-RGB on the same stack picks up the diffuse tint as well
    auto const m = estimate_illumination(s, IlluminantEstimator::max_rgb);
    EXPECT_NEAR(m.gamma[0], 0.6 / 1.5, 1e-12);
}

TEST(Illumination, DegenerateComponentFlagged)
{
    auto const ill = detail::finish_illumination({1.0, 1.0, 0.0});
    EXPECT_EQ(ill.gamma[0], 0.5);
    EXPECT_EQ(ill.gamma[2], 1.0 / 3.0);
    EXPECT_TRUE(ill.degenerate[2]);
    EXPECT_FALSE(ill.degenerate[0]);
}

TEST(PolarStack, ValidationErrors)
{
    std::array<Image, 4> ims{Image(2, 2, 3), Image(2, 2, 3), Image(2, 3, 3), Image(2, 2, 3)};
    EXPECT_THROW(PolarStack{ims}, DataError);
    ims[2] = Image(2, 2, 3);
    ims[1](0, 0, 0) = -0.1;
    EXPECT_THROW(PolarStack{ims}, DataError);
    ims[1](0, 0, 0) = std::nan("");
    EXPECT_THROW(PolarStack{ims}, DataError);
}
