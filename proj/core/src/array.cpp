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

#include "muforge/array.hpp"

#include <sstream>

#include "muforge/error.hpp"

namespace muforge {

Array::Array(std::size_t rows, std::size_t cols) : m_(Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {}

Array::Array(std::size_t rows, std::size_t cols, Real fill)
    : m_(Matrix::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), fill)) {}

Array::Array(Matrix m) : m_(std::move(m)) {}

Array Array::row(std::initializer_list<Real> values) {
  Array a(1, values.size());
  std::size_t i = 0;
  for (Real v : values) a.m_(0, static_cast<Eigen::Index>(i++)) = v;
  return a;
}

Array Array::from(std::size_t rows, std::size_t cols, std::span<const Real> values) {
  if (rows * cols != values.size()) {
    throw ShapeError("array: " + std::to_string(values.size()) + " values for shape [" + std::to_string(rows) + "," +
                     std::to_string(cols) + "]");
  }
  Array a(rows, cols);
  std::copy(values.begin(), values.end(), a.m_.data());
  return a;
}

Real Array::item() const {
  if (size() != 1) throw ShapeError("array: item() on shape " + shape_string());
  return m_(0, 0);
}

std::string Array::shape_string() const {
  std::ostringstream os;
  os << '[' << rows() << ',' << cols() << ']';
  return os.str();
}

}  // namespace muforge
