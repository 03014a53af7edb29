/*
 * Copyright 2026 The muforge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace muforge {

#ifdef MUFORGE_REAL_FLOAT
using Real = float;
#else
using Real = double;
#endif

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense rank-2 array of reals stored row-major. Vectors are 1 x n, scalars
/// are 1 x 1. Every extent is positive.
class Array {
 public:
  Array() = default;
  Array(std::size_t rows, std::size_t cols);
  Array(std::size_t rows, std::size_t cols, Real fill);
  explicit Array(Matrix m);

  static Array scalar(Real v) { return Array(1, 1, v); }
  static Array row(std::initializer_list<Real> values);
  static Array from(std::size_t rows, std::size_t cols, std::span<const Real> values);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(m_.cols()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(m_.size()); }
  std::vector<std::size_t> shape() const { return {rows(), cols()}; }
  bool same_shape(const Array& o) const noexcept { return rows() == o.rows() && cols() == o.cols(); }
  bool empty() const noexcept { return m_.size() == 0; }

  Real operator()(std::size_t r, std::size_t c) const { return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); }
  Real& operator()(std::size_t r, std::size_t c) { return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); }
  Real item() const;

  std::span<Real> data() noexcept { return {m_.data(), size()}; }
  std::span<const Real> data() const noexcept { return {m_.data(), size()}; }

  Matrix& mat() noexcept { return m_; }
  const Matrix& mat() const noexcept { return m_; }

  bool all_finite() const noexcept { return m_.allFinite(); }
  std::string shape_string() const;

  friend bool operator==(const Array& a, const Array& b) {
    return a.same_shape(b) && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

}  // namespace muforge
