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

#include <polarsep/rng.hpp>
#include <polarsep/tensor3.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace polarsep::fixtures {

struct PlantedProblem
{
    Tensor3 low_rank;
    Tensor3 spikes;
    Tensor3 observed;
};

/// Tubal rank one: entry (i, j, t) is the circular convolution of tube u_i with tube v_j. Spikes of
/// magnitude `spike_scale` times the RMS of the low-rank part sit on `fraction` of the entries.
inline PlantedProblem planted_tubal(Index n1, Index n2, Index n3, double fraction, double spike_scale,
                                    std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(n1 * n3)), v(static_cast<std::size_t>(n2 * n3));
    for (auto &x : u)
        x = gauss(rng);
    for (auto &x : v)
        x = gauss(rng);

    PlantedProblem p;
    p.low_rank = Tensor3(n1, n2, n3);
    for (Index t = 0; t < n3; ++t)
        for (Index j = 0; j < n2; ++j)
            for (Index i = 0; i < n1; ++i) {
                double acc = 0.0;
                for (Index s = 0; s < n3; ++s)
                    acc += u[static_cast<std::size_t>(i * n3 + s)] *
                           v[static_cast<std::size_t>(j * n3 + (t - s + n3) % n3)];
                p.low_rank(i, j, t) = acc;
            }
    double const rms = p.low_rank.norm() / std::sqrt(static_cast<double>(p.low_rank.size()));

    p.spikes = Tensor3(n1, n2, n3);
    auto const count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(p.spikes.size())));
    std::vector<std::size_t> idx(p.spikes.data().size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    for (std::size_t k = 0; k < count; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(rng)]);
        double const sign = (rng() & 1u) ? 1.0 : -1.0;
        p.spikes.data()[idx[k]] = sign * spike_scale * rms * mag(rng);
    }
    p.observed = p.low_rank;
    p.observed.array() += p.spikes.array();
    return p;
}

} // namespace polarsep::fixtures
