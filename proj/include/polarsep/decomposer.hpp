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
#include "polar_model.hpp"
#include "representations.hpp"
#include "tensor3.hpp"
#include "tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace polarsep {

enum class SolverMode
{
    full,     ///< nuclear + weighted sparse + phase regularizer
    no_phase, ///< nuclear + weighted sparse
    plain,    ///< nuclear + unweighted sparse
};

inline char const *to_string(SolverMode m)
{
    switch (m) {
    case SolverMode::full: return "full";
    case SolverMode::no_phase: return "no-phase";
    case SolverMode::plain: return "plain";
    }
    return "?";
}

inline SolverMode parse_mode(std::string const &s)
{
    if (s == "full")
        return SolverMode::full;
    if (s == "no-phase" || s == "no_phase")
        return SolverMode::no_phase;
    if (s == "plain")
        return SolverMode::plain;
    throw UsageError("unknown solver mode '" + s + "' (expected full, no-phase or plain)");
}

/// How the data and phase targets are weighted in the low-rank update.
enum class LStepForm
{
    lagrangian, ///< mu on (D - S), 2 gamma on Q: the minimizer of the augmented Lagrangian
    printed,    ///< 2 gamma on (D - S), mu on Q
};

/// Where the default sparsity weight comes from when no explicit lambda is given.
enum class LambdaRule
{
    tensor, ///< tensor_lambda of the k x m x n4 tensor being solved
    image,  ///< auto_lambda of the image dimensions
};

inline char const *to_string(LambdaRule r)
{
    return r == LambdaRule::tensor ? "tensor" : "image";
}

inline LambdaRule parse_lambda_rule(std::string const &s)
{
    if (s == "tensor")
        return LambdaRule::tensor;
    if (s == "image")
        return LambdaRule::image;
    throw UsageError("unknown lambda rule '" + s + "' (expected tensor or image)");
}

struct SolverConfig
{
    std::optional<double> lambda;    ///< unset: chosen by lambda_rule
    LambdaRule lambda_rule = LambdaRule::tensor;
    std::optional<double> gamma0;    ///< unset: 0.1 * lambda
    double gamma_growth = 1.05;
    std::optional<double> gamma_max; ///< unset: 10 * lambda
    std::optional<double> mu0;       ///< unset: 1.25 / spectral norm of slice 0
    double rho = 1.1;
    double mu_max = 1e7;
    double tol = 1e-5;
    int max_iters = 500;
    double alpha = 2.0;
    double beta = 0.25;
    SolverMode mode = SolverMode::full;
    LStepForm l_step = LStepForm::lagrangian;

    void validate() const
    {
        if (!(tol > 0.0))
            throw UsageError("solver: tol must be positive");
        if (mu0 && !(*mu0 > 0.0))
            throw UsageError("solver: mu0 must be positive");
        if (!(rho > 1.0))
            throw UsageError("solver: rho must exceed 1");
        if (!(mu_max > 0.0))
            throw UsageError("solver: mu_max must be positive");
        if (!(gamma_growth >= 1.0))
            throw UsageError("solver: gamma_growth must be >= 1");
        if (gamma0 && *gamma0 < 0.0)
            throw UsageError("solver: gamma0 must be non-negative");
        if (lambda && !(*lambda > 0.0))
            throw UsageError("solver: lambda must be positive");
        if (max_iters < 1)
            throw UsageError("solver: max_iters must be >= 1");
    }
};

struct TraceRecord
{
    int iteration = 0;
    double error = 0.0;
    double objective = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
};

struct DecompositionResult
{
    Tensor3 L;
    Tensor3 S;
    std::vector<TraceRecord> trace;
    int iterations = 0;
    bool converged = false;
    double lambda = 0.0;
    int phase_projections = 0; ///< number of phase-regularizer evaluations performed
};

/// 1 / sqrt(max(n1 * n2, n3) * n4), with n1 x n2 the image, n3 the colour channels, n4 the representations.
inline double auto_lambda(Index n1, Index n2, Index n3, Index n4)
{
    if (n1 < 1 || n2 < 1 || n3 < 1 || n4 < 1)
        throw UsageError("auto_lambda: dimensions must be positive");
    double const big = std::max(static_cast<double>(n1) * static_cast<double>(n2), static_cast<double>(n3));
    return 1.0 / std::sqrt(big * static_cast<double>(n4));
}

/// 1 / sqrt(max(rows, cols) * tubes) for a rows x cols x tubes tensor.
inline double tensor_lambda(Index rows, Index cols, Index tubes)
{
    if (rows < 1 || cols < 1 || tubes < 1)
        throw UsageError("tensor_lambda: dimensions must be positive");
    return 1.0 / std::sqrt(static_cast<double>(std::max(rows, cols)) * static_cast<double>(tubes));
}

/// (1 - I) / exp(-alpha * |grad I|^beta)
inline double tau_value(double intensity, double grad_norm, double alpha, double beta)
{
    return (1.0 - intensity) * std::exp(alpha * std::pow(grad_norm, beta));
}

/// Spatially variant sparsity weight from representation slice 0 of D (clamped to [0, 1]).
/// Gradients are taken inside each angle/channel sub-image: central differences, one-sided at
/// borders. The slice-0 map is broadcast to all representations.
inline Tensor3 tau_weight(Tensor3 const &d, TensorLayout const &lay, double alpha = 2.0, double beta = 0.25)
{
    if (d.rows() != lay.rows() || d.cols() != lay.cols() || d.tubes() < 1)
        throw DataError("tau_weight: tensor shape does not match layout");
    auto intensity = [&](int a, int g, Index r, Index c) {
        return std::clamp(d(lay.row(a, r), lay.col(g, c), 0), 0.0, 1.0);
    };
    auto diff = [](auto &&f, Index i, Index n) {
        if (n < 2)
            return 0.0;
        if (i == 0)
            return f(1) - f(0);
        if (i == n - 1)
            return f(n - 1) - f(n - 2);
        return 0.5 * (f(i + 1) - f(i - 1));
    };

    Tensor3 tau(d.rows(), d.cols(), d.tubes());
    for (int a = 0; a < kAngles; ++a)
        for (int g = 0; g < 3; ++g)
            for (Index r = 0; r < lay.n1; ++r)
                for (Index c = 0; c < lay.n2; ++c) {
                    double const gx = diff([&](Index x) { return intensity(a, g, r, x); }, c, lay.n2);
                    double const gy = diff([&](Index y) { return intensity(a, g, y, c); }, r, lay.n1);
                    tau(lay.row(a, r), lay.col(g, c), 0) =
                        tau_value(intensity(a, g, r, c), std::hypot(gx, gy), alpha, beta);
                }
    for (Index t = 1; t < d.tubes(); ++t)
        tau.slice(t) = tau.slice(0);
    return tau;
}

/// Gives the three colour channels of every pixel and representation a common phase angle: the
/// circular mean (on doubled angles) of the channels' own phases. Each channel keeps its constant
/// term, its amplitude and its out-of-model residual. Channels with negligible amplitude have no vote.
///
/// With samples s at 0/45/90/135 degrees the cosine coefficients are a = (s0 - s2)/2, b = (s1 - s3)/2
/// and (a, b) / |(a, b)| is the unit vector at twice the phase, so no trigonometry is needed: the
/// shared direction is the normalized sum of the channels' unit vectors, and moving a channel onto it
/// changes its samples by (da, db, -da, -db).
inline Tensor3 phase_project(Tensor3 const &l, TensorLayout const &lay)
{
    if (l.rows() != lay.rows() || l.cols() != lay.cols())
        throw DataError("phase_project: tensor shape does not match layout");
    Tensor3 q = l;
    Index const n1 = lay.n1;
    for (Index t = 0; t < l.tubes(); ++t)
        for (Index c = 0; c < lay.n2; ++c) {
            std::array<double const *, 3> src;
            std::array<double *, 3> dst;
            for (int g = 0; g < 3; ++g) {
                src[g] = l.slice(t).col(lay.col(g, c)).data();
                dst[g] = q.slice(t).col(lay.col(g, c)).data();
            }
            for (Index r = 0; r < n1; ++r) {
                std::array<double, 3> ca{}, cb{}, amp{};
                std::array<bool, 3> votes{};
                double sx = 0.0, sy = 0.0;
                int voters = 0;
                for (int g = 0; g < 3; ++g) {
                    double const s0 = src[g][r], s1 = src[g][n1 + r], s2 = src[g][2 * n1 + r], s3 = src[g][3 * n1 + r];
                    ca[g] = 0.5 * (s0 - s2);
                    cb[g] = 0.5 * (s1 - s3);
                    amp[g] = std::hypot(ca[g], cb[g]);
                    votes[g] = amp[g] > 1e-12 + 1e-9 * std::abs(0.25 * (s0 + s1 + s2 + s3));
                    if (votes[g]) {
                        sx += ca[g] / amp[g];
                        sy += cb[g] / amp[g];
                        ++voters;
                    }
                }
                double const resultant = std::hypot(sx, sy);
                if (voters == 0 || resultant < 1e-9 * voters)
                    continue;
                double const ux = sx / resultant, uy = sy / resultant;
                for (int g = 0; g < 3; ++g) {
                    if (!votes[g])
                        continue;
                    double const da = amp[g] * ux - ca[g];
                    double const db = amp[g] * uy - cb[g];
                    dst[g][r] += da;
                    dst[g][n1 + r] += db;
                    dst[g][2 * n1 + r] -= da;
                    dst[g][3 * n1 + r] -= db;
                }
            }
        }
    return q;
}

namespace detail {

inline double weighted_l1(Tensor3 const &s, Tensor3 const &w)
{
    return (s.array().abs() * w.array()).sum();
}

} // namespace detail

/// Inexact augmented Lagrangian iterations for D = L + S with explicit sparsity weights.
/// Iterates start at L = D, S = 0, Y = 0. The phase regularizer is active in full mode only.
/// The layout is consulted only by the phase regularizer and the image lambda rule; plain and no-phase
/// solves with an explicit or tensor lambda accept any tensor shape.
inline DecompositionResult solve_weighted(Tensor3 const &d, Tensor3 const &tau, SolverConfig const &cfg,
                                          TensorLayout const &lay = {})
{
    cfg.validate();
    requireSameShape(d, tau, "solve");
    if (!d.allFinite())
        throw DataError("solve: input tensor contains non-finite values");
    bool const needs_layout = cfg.mode == SolverMode::full || (!cfg.lambda && cfg.lambda_rule == LambdaRule::image);
    if (needs_layout && (d.rows() != lay.rows() || d.cols() != lay.cols() || d.tubes() != lay.n4))
        throw DataError("solve: tensor shape does not match layout");

    DecompositionResult res;
    if (cfg.lambda)
        res.lambda = *cfg.lambda;
    else if (cfg.lambda_rule == LambdaRule::image)
        res.lambda = auto_lambda(lay.n1, lay.n2, 3, lay.n4);
    else
        res.lambda = tensor_lambda(d.rows(), d.cols(), d.tubes());
    bool const full = cfg.mode == SolverMode::full;

    double const norm_d = d.norm();
    if (norm_d == 0.0) {
        res.L = Tensor3(d.rows(), d.cols(), d.tubes());
        res.S = res.L;
        res.trace.push_back({1, 0.0, 0.0, cfg.mu0.value_or(0.0), 0.0});
        res.iterations = 1;
        res.converged = true;
        return res;
    }

    double mu = cfg.mu0 ? *cfg.mu0 : 1.25 / singular_values(d.slice(0)).maxCoeff();
    double gamma = full ? cfg.gamma0.value_or(0.1 * res.lambda) : 0.0;
    double const gamma_max = cfg.gamma_max.value_or(10.0 * res.lambda);

    Tensor3 L = d;
    Tensor3 S(d.rows(), d.cols(), d.tubes());
    Tensor3 Y(d.rows(), d.cols(), d.tubes());
    Tensor3 Q;
    if (full) {
        Q = phase_project(L, lay);
        ++res.phase_projections;
    }

    Tensor3 target(d.rows(), d.cols(), d.tubes());
    Tensor3 resid(d.rows(), d.cols(), d.tubes());
    for (int it = 1; it <= cfg.max_iters; ++it) {
        double threshold;
        auto const D = d.array();
        auto const Sa = S.array();
        auto const Ya = Y.array();
        if (full && gamma > 0.0) {
            double const denom = 2.0 * gamma + mu;
            if (cfg.l_step == LStepForm::lagrangian)
                target.array() = (D - Sa) + (Ya + 2.0 * gamma * (Q.array() - (D - Sa))) / denom;
            else
                target.array() = (2.0 * gamma * (D - Sa) + Ya + mu * Q.array()) / denom;
            threshold = 1.0 / denom;
        } else {
            target.array() = (D - Sa) + Ya / mu;
            threshold = 1.0 / mu;
        }

        TsvtResult lr;
        try {
            lr = tsvt(target, threshold);
        } catch (SolverError const &e) {
            throw SolverError("solve: iteration " + std::to_string(it) + ": " + e.what());
        }
        L = std::move(lr.tensor);

        resid.array() = D - L.array() + Ya / mu;
        S = weighted_shrink(resid, tau, res.lambda / mu);

        double phase_term = 0.0;
        if (full) {
            Q = phase_project(L, lay);
            ++res.phase_projections;
            phase_term = gamma * (Q.array() - L.array()).matrix().squaredNorm();
        }

        resid.array() = D - L.array() - S.array();
        Y.array() += mu * resid.array();
        double const err = resid.norm() / norm_d;
        double const objective = lr.nuclear_norm + res.lambda * detail::weighted_l1(S, tau) + phase_term;
        res.trace.push_back({it, err, objective, mu, gamma});
        res.iterations = it;

        if (!std::isfinite(err) || !std::isfinite(objective) || !L.allFinite() || !S.allFinite())
            throw SolverError("solve: non-finite iterate at iteration " + std::to_string(it));
        if (err <= cfg.tol) {
            res.converged = true;
            break;
        }
        mu = std::min(cfg.rho * mu, cfg.mu_max);
        if (full)
            gamma = std::min(gamma * cfg.gamma_growth, gamma_max);
    }
    res.L = std::move(L);
    res.S = std::move(S);
    return res;
}

/// Solves with the mode's weights: tau from D for full / no-phase, all ones for plain.
inline DecompositionResult solve(Tensor3 const &d, SolverConfig const &cfg, TensorLayout const &lay)
{
    if (cfg.mode == SolverMode::plain)
        return solve_weighted(d, Tensor3(d.rows(), d.cols(), d.tubes(), 1.0), cfg, lay);
    return solve_weighted(d, tau_weight(d, lay, cfg.alpha, cfg.beta), cfg, lay);
}

inline void write_trace_csv(std::ostream &os, std::vector<TraceRecord> const &trace)
{
    auto const old = os.precision(17);
    os << "iteration,error,objective,mu,gamma\n";
    for (auto const &t : trace)
        os << t.iteration << ',' << t.error << ',' << t.objective << ',' << t.mu << ',' << t.gamma << '\n';
    os.precision(old);
}

} // namespace polarsep
