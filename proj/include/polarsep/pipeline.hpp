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

#include "decomposer.hpp"
#include "image.hpp"
#include "polar_model.hpp"
#include "representations.hpp"

#include <cstdint>

namespace polarsep {

struct SeparationParams
{
    Index block_size = 16;
    Index n4 = 8;
    double threshold = 0.05; ///< chromaticity similarity for representations
    std::uint64_t seed = 0;
    bool normalize_illumination = true;
    IlluminantEstimator illuminant = IlluminantEstimator::polarized;
    InitializerParams init;
    SolverConfig solver;

    void validate() const
    {
        if (block_size < 1)
            throw UsageError("block_size must be >= 1");
        if (n4 < 1)
            throw UsageError("n4 must be >= 1");
        if (!(threshold > 0.0))
            throw UsageError("threshold must be positive");
        init.validate();
        solver.validate();
    }
};

struct SeparationOutput
{
    Image diffuse;         ///< recovered diffuse image, original illumination
    Image specular;        ///< mean input minus diffuse, clamped (canonical specular output)
    Image specular_sparse; ///< mean over angles of the sparse term's identity slice
    Image mean_input;
    Illumination illumination;
    DecompositionResult result;
};

/// normalize -> fit -> chromaticity -> candidates -> initial diffuse -> fold -> solve -> extract
inline SeparationOutput separate(PolarStack const &input, SeparationParams const &prm)
{
    prm.validate();
    input.validate();

    NormalizedStack norm{input, {}};
    if (prm.normalize_illumination)
        norm = normalize_illumination(input, prm.illuminant);

    auto const decomp = fit_cosine_model(norm.stack);
    auto const chro = chromaticity(decomp);
    auto const cands = select_candidates(chro.chro, prm.block_size, prm.n4, prm.threshold, prm.seed);
    auto const init = initialize_diffuse(norm.stack, chro, prm.init);
    auto const rt = fold(gather_representations(init, cands));

    SeparationOutput out;
    out.illumination = norm.illumination;
    out.result = solve(rt.d, prm.solver, rt.layout);

    auto const &gamma = out.illumination.gamma;
    out.diffuse = restore_illumination(extract_diffuse(out.result.L, rt.layout), gamma);
    out.diffuse.clamp(0.0, 1.0);
    out.mean_input = input.mean();
    out.specular = Image(input.height(), input.width(), 3);
    for (std::size_t i = 0; i < out.specular.data().size(); ++i)
        out.specular.data()[i] = std::clamp(out.mean_input.data()[i] - out.diffuse.data()[i], 0.0, 1.0);

    Tensor3 s0(rt.d.rows(), rt.d.cols(), 1);
    s0.slice(0) = out.result.S.slice(0).cwiseAbs();
    out.specular_sparse = restore_illumination(extract_diffuse(s0, {rt.layout.n1, rt.layout.n2, 1}), gamma);
    out.specular_sparse.clamp(0.0, 1.0);
    return out;
}

} // namespace polarsep
