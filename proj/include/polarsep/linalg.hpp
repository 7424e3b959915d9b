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

// Thin wrappers over Eigen's divide-and-conquer SVD and FFTW (real transforms along mode 3).

#include "error.hpp"
#include "tensor3.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>
#include <fftw3.h>

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace polarsep {

using cdouble = std::complex<double>;

template <typename Scalar>
struct ThinSVD
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Matrix U;               ///< rows x r
    Eigen::VectorXd values; ///< descending, r = min(rows, cols)
    Matrix Vh;              ///< r x cols
};

namespace detail {

inline double unitPhase(double v) { return v < 0.0 ? -1.0 : 1.0; }
inline cdouble unitPhase(cdouble v) { return v / std::abs(v); }
inline double conjugate(double v) { return v; }
inline cdouble conjugate(cdouble v) { return std::conj(v); }

} // namespace detail

/// Thin SVD. Sign convention: the first non-negligible entry of every left singular vector is
/// real and non-negative.
template <typename Scalar>
ThinSVD<Scalar> thin_svd(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> const &a)
{
    Index const m = a.rows(), n = a.cols(), r = std::min(m, n);
    ThinSVD<Scalar> out;
    if (r == 0) {
        out.U.resize(m, 0);
        out.Vh.resize(0, n);
        return out;
    }
    if (!a.allFinite())
        throw SolverError("svd: non-finite input");
    Eigen::BDCSVD<typename ThinSVD<Scalar>::Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw SolverError("svd: decomposition did not converge");
    out.U = svd.matrixU();
    out.values = svd.singularValues();
    out.Vh = svd.matrixV().adjoint();

    for (Index j = 0; j < r; ++j) {
        double const tiny = 1e-12 * out.U.col(j).cwiseAbs().maxCoeff();
        for (Index i = 0; i < m; ++i) {
            if (std::abs(out.U(i, j)) > tiny) {
                Scalar const ph = detail::unitPhase(out.U(i, j));
                out.U.col(j) *= detail::conjugate(ph);
                out.Vh.row(j) *= ph;
                break;
            }
        }
    }
    return out;
}

template <typename Derived>
Eigen::VectorXd singular_values(Eigen::MatrixBase<Derived> const &a)
{
    using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (std::min(a.rows(), a.cols()) == 0)
        return {};
    Eigen::BDCSVD<Matrix> svd(a.eval());
    if (svd.info() != Eigen::Success)
        throw SolverError("svd: decomposition did not converge");
    return svd.singularValues();
}

/// Half spectrum of a real tensor along mode 3: slices 0 .. tubes/2 of the unnormalized DFT.
/// The remaining slices are complex conjugates of these.
struct HalfSpectrum
{
    Index rows = 0;
    Index cols = 0;
    Index tubes = 0;
    std::vector<cdouble> data; ///< (tubes/2 + 1) contiguous column-major slices

    Index slices() const { return tubes / 2 + 1; }
    Eigen::Map<Eigen::MatrixXcd> slice(Index t) { return {data.data() + t * rows * cols, rows, cols}; }
    Eigen::Map<Eigen::MatrixXcd const> slice(Index t) const
    {
        return {data.data() + t * rows * cols, rows, cols};
    }
};

namespace detail {

struct PlanDeleter
{
    void operator()(fftw_plan_s *p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

} // namespace detail

/// Forward real-to-complex DFT of every mode-3 fibre.
inline HalfSpectrum fft_mode3(Tensor3 const &x)
{
    HalfSpectrum h{x.rows(), x.cols(), x.tubes(), {}};
    Index const fibres = x.sliceSize();
    h.data.assign(static_cast<std::size_t>(h.slices() * fibres), cdouble{});
    if (fibres == 0 || x.tubes() == 0)
        return h;
    int const n = static_cast<int>(x.tubes());
    // FFTW_ESTIMATE never touches the arrays while planning, so the const input is safe.
    detail::Plan plan(fftw_plan_many_dft_r2c(1, &n, static_cast<int>(fibres), const_cast<double *>(x.data().data()),
                                             nullptr, static_cast<int>(fibres), 1,
                                             reinterpret_cast<fftw_complex *>(h.data.data()), nullptr,
                                             static_cast<int>(fibres), 1, FFTW_ESTIMATE));
    if (!plan)
        throw SolverError("fft_mode3: planning failed");
    fftw_execute(plan.get());
    return h;
}

/// Inverse of fft_mode3, including the 1/tubes normalization. The spectrum is consumed.
inline Tensor3 ifft_mode3(HalfSpectrum h)
{
    Tensor3 x(h.rows, h.cols, h.tubes);
    Index const fibres = x.sliceSize();
    if (fibres == 0 || h.tubes == 0)
        return x;
    int const n = static_cast<int>(h.tubes);
    detail::Plan plan(fftw_plan_many_dft_c2r(1, &n, static_cast<int>(fibres),
                                             reinterpret_cast<fftw_complex *>(h.data.data()), nullptr,
                                             static_cast<int>(fibres), 1, x.data().data(), nullptr,
                                             static_cast<int>(fibres), 1, FFTW_ESTIMATE));
    if (!plan)
        throw SolverError("ifft_mode3: planning failed");
    fftw_execute(plan.get());
    x.array() *= 1.0 / static_cast<double>(h.tubes);
    return x;
}

} // namespace polarsep
