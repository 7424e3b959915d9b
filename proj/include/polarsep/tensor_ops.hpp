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

#include "linalg.hpp"
#include "tensor3.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace polarsep {

/// Singular value thresholding of one matrix. Returns the thresholded matrix; `kept_sum`
/// receives the nuclear norm of the result.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
matrix_svt(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> const &x, double threshold, double *kept_sum = nullptr)
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (kept_sum)
        *kept_sum = 0.0;
    if (x.size() == 0)
        return Matrix::Zero(x.rows(), x.cols());
    if (!x.allFinite())
        throw SolverError("matrix_svt: non-finite input");

    // SVT(X) = X V diag(max(0, 1 - t / s)) V^H with V, s^2 from the eigensystem of the small Gram matrix.
    bool const tall = x.rows() >= x.cols();
    Matrix gram(tall ? x.cols() : x.rows(), tall ? x.cols() : x.rows());
    gram.setZero();
    if (tall)
        gram.template selfadjointView<Eigen::Lower>().rankUpdate(x.adjoint());
    else
        gram.template selfadjointView<Eigen::Lower>().rankUpdate(x);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success)
        throw SolverError("matrix_svt: eigendecomposition did not converge");

    Eigen::VectorXd const &ev = eig.eigenvalues();
    Index const n = ev.size();
    Index keep = 0;
    while (keep < n && std::sqrt(std::max(0.0, ev(n - 1 - keep))) > threshold)
        ++keep;
    if (keep == 0)
        return Matrix::Zero(x.rows(), x.cols());

    Eigen::VectorXd const sigma = ev.tail(keep).cwiseMax(0.0).cwiseSqrt();
    if (kept_sum)
        *kept_sum = (sigma.array() - threshold).sum();
    Eigen::VectorXd const weight = 1.0 - threshold / sigma.array();
    auto const basis = eig.eigenvectors().rightCols(keep);
    if (tall) {
        Matrix const projected = x * basis;
        return (projected * weight.template cast<Scalar>().asDiagonal()) * basis.adjoint();
    }
    Matrix const projected = basis.adjoint() * x;
    return basis * (weight.template cast<Scalar>().asDiagonal() * projected);
}

struct TsvtResult
{
    Tensor3 tensor;
    double nuclear_norm = 0.0; ///< tensor nuclear norm of `tensor`, a by-product of the thresholding
};

/// Proximal operator of threshold * TNN, where TNN(X) = (1/n) * sum of nuclear norms of the
/// unnormalized mode-3 DFT slices. Under that convention each transform slice is thresholded by
/// `threshold` itself. Only the non-redundant half of the spectrum is decomposed.
inline TsvtResult tsvt(Tensor3 const &x, double threshold)
{
    if (!(threshold >= 0.0))
        throw UsageError("tsvt: threshold must be non-negative");
    if (threshold == 0.0 || x.size() == 0)
        return {x, 0.0};

    Index const n = x.tubes();
    HalfSpectrum spec = fft_mode3(x);
    double total = 0.0;
    for (Index t = 0; t < spec.slices(); ++t) {
        bool const real_slice = t == 0 || 2 * t == n;
        double kept = 0.0;
        try {
            if (real_slice) {
                Eigen::MatrixXd const re = spec.slice(t).real();
                spec.slice(t) = matrix_svt<double>(re, threshold, &kept).cast<cdouble>();
            } else {
                Eigen::MatrixXcd const c = spec.slice(t);
                spec.slice(t) = matrix_svt<cdouble>(c, threshold, &kept);
            }
        } catch (SolverError const &e) {
            throw SolverError("tsvt: slice " + std::to_string(t) + ": " + e.what());
        }
        // Conjugate partners of the interior slices carry the same singular values.
        total += real_slice ? kept : 2.0 * kept;
    }
    return {ifft_mode3(std::move(spec)), total / static_cast<double>(n)};
}

/// Tensor nuclear norm: mean over the n transform-domain slices of their matrix nuclear norms.
inline double tensor_nuclear_norm(Tensor3 const &x)
{
    if (x.size() == 0)
        return 0.0;
    Index const n = x.tubes();
    HalfSpectrum const spec = fft_mode3(x);
    double total = 0.0;
    for (Index t = 0; t < spec.slices(); ++t) {
        bool const real_slice = t == 0 || 2 * t == n;
        double s = 0.0;
        if (real_slice) {
            s = singular_values(spec.slice(t).real()).sum();
        } else {
            s = singular_values(spec.slice(t)).sum();
        }
        total += real_slice ? s : 2.0 * s;
    }
    return total / static_cast<double>(n);
}

/// Soft thresholding: sign(x) * max(|x| - t, 0).
inline double soft_threshold(double x, double t)
{
    double const a = std::abs(x) - t;
    return a > 0.0 ? std::copysign(a, x) : 0.0;
}

/// Element-wise soft thresholding with per-entry threshold `threshold * weights`.
inline Tensor3 weighted_shrink(Tensor3 const &x, Tensor3 const &weights, double threshold)
{
    requireSameShape(x, weights, "weighted_shrink");
    if (!(threshold >= 0.0))
        throw UsageError("weighted_shrink: threshold must be non-negative");
    Tensor3 out(x.rows(), x.cols(), x.tubes());
    auto const &xd = x.data();
    auto const &wd = weights.data();
    auto &od = out.data();
    for (std::size_t i = 0; i < xd.size(); ++i) {
        if (wd[i] < 0.0)
            throw UsageError("weighted_shrink: negative weight at entry " + std::to_string(i));
        od[i] = soft_threshold(xd[i], threshold * wd[i]);
    }
    return out;
}

} // namespace polarsep
