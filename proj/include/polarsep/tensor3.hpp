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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace polarsep {

/// Dense real order-3 tensor of shape (rows, cols, tubes).
/// Frontal slices are stored contiguously in column-major order, so slice t is a rows x cols matrix.
class Tensor3
{
  public:
    using SliceMap = Eigen::Map<Eigen::MatrixXd>;
    using ConstSliceMap = Eigen::Map<Eigen::MatrixXd const>;

    Tensor3() = default;
    Tensor3(Index rows, Index cols, Index tubes, double fill = 0.0)
      : rows_{rows}
      , cols_{cols}
      , tubes_{tubes}
      , data_(checkedSize(rows, cols, tubes), fill)
    {
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index tubes() const { return tubes_; }
    Index size() const { return static_cast<Index>(data_.size()); }
    Index sliceSize() const { return rows_ * cols_; }

    double &operator()(Index i, Index j, Index t) { return data_[offset(i, j, t)]; }
    double operator()(Index i, Index j, Index t) const { return data_[offset(i, j, t)]; }

    SliceMap slice(Index t) { return {data_.data() + t * sliceSize(), rows_, cols_}; }
    ConstSliceMap slice(Index t) const { return {data_.data() + t * sliceSize(), rows_, cols_}; }

    Eigen::Map<Eigen::ArrayXd> array() { return {data_.data(), size()}; }
    Eigen::Map<Eigen::ArrayXd const> array() const { return {data_.data(), size()}; }

    std::vector<double> &data() { return data_; }
    std::vector<double> const &data() const { return data_; }

    bool sameShape(Tensor3 const &o) const
    {
        return rows_ == o.rows_ && cols_ == o.cols_ && tubes_ == o.tubes_;
    }

    double norm() const { return array().matrix().norm(); }

    bool allFinite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    bool operator==(Tensor3 const &) const = default;

  private:
    static std::size_t checkedSize(Index rows, Index cols, Index tubes)
    {
        if (rows < 0 || cols < 0 || tubes < 0)
            throw UsageError("Tensor3: negative dimension");
        return static_cast<std::size_t>(rows * cols * tubes);
    }

    std::size_t offset(Index i, Index j, Index t) const
    {
        return static_cast<std::size_t>((t * cols_ + j) * rows_ + i);
    }

    Index rows_ = 0;
    Index cols_ = 0;
    Index tubes_ = 0;
    std::vector<double> data_;
};

inline void requireSameShape(Tensor3 const &a, Tensor3 const &b, char const *what)
{
    if (!a.sameShape(b))
        throw UsageError(std::string(what) + ": tensor shape mismatch");
}

} // namespace polarsep
