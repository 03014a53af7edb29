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

#include "muforge/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "muforge/error.hpp"

namespace muforge::ad {

std::string_view op_name(OpKind op) noexcept {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kOffset: return "offset";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kReduceSum: return "reduce-sum";
    case OpKind::kReduceMean: return "reduce-mean";
    case OpKind::kSoftmaxCrossEntropy: return "softmax-cross-entropy";
    case OpKind::kHinge: return "hinge";
    case OpKind::kBroadcast: return "broadcast";
    case OpKind::kGatherRows: return "gather-rows";
    case OpKind::kClamp: return "clamp";
    case OpKind::kLayerNorm: return "layer-norm";
    case OpKind::kRowSelect: return "row-select";
  }
  return "?";
}

namespace {

bool row_broadcast(const Array& a, const Array& b) {
  return b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols();
}

Matrix fold_rows(const Matrix& g) { return g.colwise().sum(); }

}  // namespace

void Tape::check_id(NodeId id) const {
  if (!id.valid() || id.index >= nodes_.size()) {
    throw Error("tape: unknown node id " + std::to_string(id.index));
  }
}

void Tape::shape_fail(std::uint32_t i, const std::string& detail) const {
  std::ostringstream os;
  os << "shape mismatch at node #" << i << " (" << op_name(nodes_[i].op) << "): " << detail;
  throw ShapeError(os.str());
}

NodeId Tape::push(Node node) {
  for (auto j : node.in) {
    if (j >= nodes_.size()) throw Error("tape: input id " + std::to_string(j) + " out of order");
  }
  auto i = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(std::move(node));
  bool req = nodes_[i].op == OpKind::kLeaf;
  for (auto j : nodes_[i].in) req = req || requires_[j];
  requires_.push_back(req ? 1 : 0);
  try {
    if (!stale_) evaluate(i);
  } catch (...) {
    nodes_.pop_back();
    requires_.pop_back();
    throw;
  }
  return NodeId{i};
}

NodeId Tape::leaf(Array value, std::string name) {
  if (value.empty()) throw ShapeError("tape: leaf arrays need positive extents");
  Node n;
  n.op = OpKind::kLeaf;
  n.value = std::move(value);
  n.name = std::move(name);
  return push(std::move(n));
}

NodeId Tape::constant(Array value) {
  if (value.empty()) throw ShapeError("tape: constant arrays need positive extents");
  Node n;
  n.op = OpKind::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

void Tape::bind(NodeId id, Array value) {
  check_id(id);
  auto& n = nodes_[id.index];
  if (n.op != OpKind::kLeaf && n.op != OpKind::kConstant) {
    throw Error("tape: bind() on non-leaf node #" + std::to_string(id.index));
  }
  if (!n.value.same_shape(value)) {
    shape_fail(id.index, "rebinding " + n.value.shape_string() + " with " + value.shape_string());
  }
  n.value = std::move(value);
  stale_ = true;
}

namespace {

template <typename... Ids>
std::vector<std::uint32_t> ids(Ids... xs) {
  return {xs.index...};
}

}  // namespace

#define MUFORGE_CHECK_IDS(...)                          \
  for (NodeId id__ : {__VA_ARGS__}) check_id(id__)

NodeId Tape::matmul(NodeId a, NodeId b) {
  MUFORGE_CHECK_IDS(a, b);
  Node n;
  n.op = OpKind::kMatmul;
  n.in = ids(a, b);
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  MUFORGE_CHECK_IDS(a, b);
  Node n;
  n.op = OpKind::kAdd;
  n.in = ids(a, b);
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  MUFORGE_CHECK_IDS(a, b);
  Node n;
  n.op = OpKind::kSub;
  n.in = ids(a, b);
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  MUFORGE_CHECK_IDS(a, b);
  Node n;
  n.op = OpKind::kMul;
  n.in = ids(a, b);
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, Real factor) {
  check_id(a);
  Node n;
  n.op = OpKind::kScale;
  n.in = ids(a);
  n.a = factor;
  return push(std::move(n));
}

NodeId Tape::offset(NodeId a, Real shift) {
  check_id(a);
  Node n;
  n.op = OpKind::kOffset;
  n.in = ids(a);
  n.a = shift;
  return push(std::move(n));
}

#define MUFORGE_UNARY(method, kind) \
  NodeId Tape::method(NodeId a) {   \
    check_id(a);                    \
    Node n;                         \
    n.op = OpKind::kind;            \
    n.in = ids(a);                  \
    return push(std::move(n));      \
  }

MUFORGE_UNARY(tanh, kTanh)
MUFORGE_UNARY(sigmoid, kSigmoid)
MUFORGE_UNARY(exp, kExp)
MUFORGE_UNARY(log, kLog)
MUFORGE_UNARY(hinge, kHinge)

#undef MUFORGE_UNARY

NodeId Tape::concat(std::span<const NodeId> parts) {
  if (parts.empty()) throw ShapeError("tape: concat of zero arrays");
  Node n;
  n.op = OpKind::kConcat;
  for (auto p : parts) {
    check_id(p);
    n.in.push_back(p.index);
  }
  return push(std::move(n));
}

NodeId Tape::concat(NodeId a, NodeId b) {
  const NodeId parts[] = {a, b};
  return concat(parts);
}

NodeId Tape::slice(NodeId a, std::size_t col_begin, std::size_t col_end) {
  check_id(a);
  Node n;
  n.op = OpKind::kSlice;
  n.in = ids(a);
  n.begin = col_begin;
  n.end = col_end;
  return push(std::move(n));
}

NodeId Tape::reduce_sum(NodeId a, Axis axis) {
  check_id(a);
  Node n;
  n.op = OpKind::kReduceSum;
  n.in = ids(a);
  n.axis = axis;
  return push(std::move(n));
}

NodeId Tape::reduce_mean(NodeId a, Axis axis) {
  check_id(a);
  Node n;
  n.op = OpKind::kReduceMean;
  n.in = ids(a);
  n.axis = axis;
  return push(std::move(n));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, std::span<const std::int32_t> targets,
                                   std::span<const Real> weights) {
  check_id(logits);
  Node n;
  n.op = OpKind::kSoftmaxCrossEntropy;
  n.in = ids(logits);
  n.index.assign(targets.begin(), targets.end());
  n.weights.assign(weights.begin(), weights.end());
  return push(std::move(n));
}

NodeId Tape::broadcast(NodeId row, std::size_t rows) {
  check_id(row);
  Node n;
  n.op = OpKind::kBroadcast;
  n.in = ids(row);
  n.begin = rows;
  return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId table, std::span<const std::int32_t> row_ids) {
  check_id(table);
  Node n;
  n.op = OpKind::kGatherRows;
  n.in = ids(table);
  n.index.assign(row_ids.begin(), row_ids.end());
  return push(std::move(n));
}

NodeId Tape::clamp(NodeId a, Real lo, Real hi) {
  check_id(a);
  if (!(lo < hi)) throw Error("tape: clamp bounds must satisfy lo < hi");
  Node n;
  n.op = OpKind::kClamp;
  n.in = ids(a);
  n.a = lo;
  n.b = hi;
  return push(std::move(n));
}

NodeId Tape::layer_norm(NodeId a, Real eps) {
  check_id(a);
  Node n;
  n.op = OpKind::kLayerNorm;
  n.in = ids(a);
  n.a = eps;
  return push(std::move(n));
}

NodeId Tape::row_select(NodeId a, NodeId b, std::span<const std::uint8_t> keep) {
  MUFORGE_CHECK_IDS(a, b);
  Node n;
  n.op = OpKind::kRowSelect;
  n.in = ids(a, b);
  n.index.assign(keep.begin(), keep.end());
  return push(std::move(n));
}

#undef MUFORGE_CHECK_IDS

void Tape::evaluate(std::uint32_t i) {
  Node& n = nodes_[i];
  auto in = [&](std::size_t k) -> const Array& { return nodes_[n.in[k]].value; };
  auto binary_shapes = [&] {
    const Array& x = in(0);
    const Array& y = in(1);
    if (!x.same_shape(y) && !row_broadcast(x, y)) {
      shape_fail(i, x.shape_string() + " vs " + y.shape_string());
    }
  };

  switch (n.op) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
      break;
    case OpKind::kMatmul: {
      const Array& x = in(0);
      const Array& y = in(1);
      if (x.cols() != y.rows()) shape_fail(i, x.shape_string() + " x " + y.shape_string());
      Matrix out(x.mat().rows(), y.mat().cols());
      out.noalias() = x.mat() * y.mat();
      n.value = Array(std::move(out));
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      binary_shapes();
      const Matrix& x = in(0).mat();
      const Matrix& y = in(1).mat();
      Matrix out;
      if (x.rows() == y.rows()) {
        if (n.op == OpKind::kAdd) out = x + y;
        else if (n.op == OpKind::kSub) out = x - y;
        else out = x.cwiseProduct(y);
      } else {
        if (n.op == OpKind::kAdd) out = x.rowwise() + y.row(0);
        else if (n.op == OpKind::kSub) out = x.rowwise() - y.row(0);
        else out = (x.array().rowwise() * y.row(0).array()).matrix();
      }
      n.value = Array(std::move(out));
      break;
    }
    case OpKind::kScale:
      n.value = Array(Matrix(in(0).mat() * n.a));
      break;
    case OpKind::kOffset:
      n.value = Array(Matrix(in(0).mat().array() + n.a));
      break;
    case OpKind::kTanh:
      n.value = Array(Matrix(in(0).mat().array().tanh()));
      break;
    case OpKind::kSigmoid:
      n.value = Array(Matrix((Real(1) + (-in(0).mat().array()).exp()).inverse()));
      break;
    case OpKind::kExp:
      n.value = Array(Matrix(in(0).mat().array().exp()));
      break;
    case OpKind::kLog:
      n.value = Array(Matrix(in(0).mat().array().log()));
      break;
    case OpKind::kConcat: {
      std::size_t rows = in(0).rows();
      std::size_t cols = 0;
      for (std::size_t k = 0; k < n.in.size(); ++k) {
        if (in(k).rows() != rows) shape_fail(i, "row counts " + in(0).shape_string() + " vs " + in(k).shape_string());
        cols += in(k).cols();
      }
      Matrix out(rows, cols);
      Eigen::Index at = 0;
      for (std::size_t k = 0; k < n.in.size(); ++k) {
        const Matrix& part = in(k).mat();
        out.middleCols(at, part.cols()) = part;
        at += part.cols();
      }
      n.value = Array(std::move(out));
      break;
    }
    case OpKind::kSlice: {
      const Array& x = in(0);
      if (n.begin >= n.end || n.end > x.cols()) {
        shape_fail(i, "columns [" + std::to_string(n.begin) + "," + std::to_string(n.end) + ") of " + x.shape_string());
      }
      n.value = Array(Matrix(x.mat().middleCols(static_cast<Eigen::Index>(n.begin),
                                                static_cast<Eigen::Index>(n.end - n.begin))));
      break;
    }
    case OpKind::kReduceSum:
    case OpKind::kReduceMean: {
      const Matrix& x = in(0).mat();
      Matrix out;
      Real div = 1;
      switch (n.axis) {
        case Axis::kAll:
          out = Matrix::Constant(1, 1, x.sum());
          div = static_cast<Real>(x.size());
          break;
        case Axis::kRows:
          out = x.colwise().sum();
          div = static_cast<Real>(x.rows());
          break;
        case Axis::kCols:
          out = x.rowwise().sum();
          div = static_cast<Real>(x.cols());
          break;
      }
      if (n.op == OpKind::kReduceMean) out /= div;
      n.value = Array(std::move(out));
      break;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      const Matrix& x = in(0).mat();
      const auto rows = static_cast<std::size_t>(x.rows());
      if (n.index.size() != rows || n.weights.size() != rows) {
        shape_fail(i, "logits " + in(0).shape_string() + " with " + std::to_string(n.index.size()) +
                          " targets and " + std::to_string(n.weights.size()) + " weights");
      }
      Matrix probs(x.rows(), x.cols());
      Real total = 0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const auto t = n.index[static_cast<std::size_t>(r)];
        if (t < 0 || t >= x.cols()) shape_fail(i, "target id " + std::to_string(t) + " outside vocabulary");
        const Real mx = x.row(r).maxCoeff();
        probs.row(r) = (x.row(r).array() - mx).exp();
        const Real z = probs.row(r).sum();
        probs.row(r) /= z;
        const Real w = n.weights[static_cast<std::size_t>(r)];
        if (w != 0) total += w * (mx + std::log(z) - x(r, t));
      }
      n.cache = Array(std::move(probs));
      n.value = Array::scalar(total);
      break;
    }
    case OpKind::kHinge:
      n.value = Array(Matrix(in(0).mat().cwiseMax(Real(0))));
      break;
    case OpKind::kBroadcast: {
      const Array& x = in(0);
      if (x.rows() != 1 || n.begin == 0) shape_fail(i, "broadcast needs a 1 x C row, got " + x.shape_string());
      n.value = Array(Matrix(x.mat().replicate(static_cast<Eigen::Index>(n.begin), 1)));
      break;
    }
    case OpKind::kGatherRows: {
      const Matrix& table = in(0).mat();
      if (n.index.empty()) shape_fail(i, "empty id list");
      Matrix out(static_cast<Eigen::Index>(n.index.size()), table.cols());
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        const auto id = n.index[r];
        if (id < 0 || id >= table.rows()) shape_fail(i, "row id " + std::to_string(id) + " of " + in(0).shape_string());
        out.row(static_cast<Eigen::Index>(r)) = table.row(id);
      }
      n.value = Array(std::move(out));
      break;
    }
    case OpKind::kClamp:
      n.value = Array(Matrix(in(0).mat().cwiseMax(n.a).cwiseMin(n.b)));
      break;
    case OpKind::kLayerNorm: {
      const Matrix& x = in(0).mat();
      const Real c = static_cast<Real>(x.cols());
      Matrix y(x.rows(), x.cols());
      Matrix inv(x.rows(), 1);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Real mean = x.row(r).sum() / c;
        const Real var = (x.row(r).array() - mean).square().sum() / c;
        inv(r, 0) = Real(1) / std::sqrt(var + n.a);
        y.row(r) = (x.row(r).array() - mean) * inv(r, 0);
      }
      n.cache2 = Array(std::move(inv));
      n.value = Array(std::move(y));
      break;
    }
    case OpKind::kRowSelect: {
      const Array& x = in(0);
      const Array& y = in(1);
      if (!x.same_shape(y) || n.index.size() != x.rows()) {
        shape_fail(i, x.shape_string() + " vs " + y.shape_string() + " with " + std::to_string(n.index.size()) + " flags");
      }
      Matrix out = y.mat();
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        if (n.index[r]) out.row(static_cast<Eigen::Index>(r)) = x.mat().row(static_cast<Eigen::Index>(r));
      }
      n.value = Array(std::move(out));
      break;
    }
  }

  if (!n.value.all_finite()) {
    std::ostringstream os;
    os << "non-finite value at node #" << i << " (" << op_name(n.op) << ")";
    if (!n.name.empty()) os << " '" << n.name << "'";
    throw NumericError(os.str());
  }
}

void Tape::forward() {
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) evaluate(i);
  stale_ = false;
}

std::vector<Array> Tape::forward(std::span<const NodeId> roots) {
  for (auto r : roots) check_id(r);
  forward();
  std::vector<Array> out;
  out.reserve(roots.size());
  for (auto r : roots) out.push_back(nodes_[r.index].value);
  return out;
}

void Tape::accumulate(std::uint32_t j, const Matrix& g) {
  if (!requires_[j]) return;
  if (has_grad_[j]) {
    grads_[j].mat() += g;
  } else {
    grads_[j] = Array(g);
    has_grad_[j] = 1;
  }
}

void Tape::adjoint(std::uint32_t i) {
  const Node& n = nodes_[i];
  const Matrix& g = grads_[i].mat();
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[n.in[k]].value.mat(); };
  auto need = [&](std::size_t k) { return requires_[n.in[k]] != 0; };

  switch (n.op) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
      break;
    case OpKind::kMatmul:
      if (need(0)) accumulate(n.in[0], g * in(1).transpose());
      if (need(1)) accumulate(n.in[1], in(0).transpose() * g);
      break;
    case OpKind::kAdd:
    case OpKind::kSub: {
      if (need(0)) accumulate(n.in[0], g);
      if (need(1)) {
        const Real sign = n.op == OpKind::kAdd ? Real(1) : Real(-1);
        if (in(1).rows() == in(0).rows()) accumulate(n.in[1], sign * g);
        else accumulate(n.in[1], sign * fold_rows(g));
      }
      break;
    }
    case OpKind::kMul: {
      const bool bc = in(1).rows() != in(0).rows();
      if (need(0)) {
        if (bc) accumulate(n.in[0], (g.array().rowwise() * in(1).row(0).array()).matrix());
        else accumulate(n.in[0], g.cwiseProduct(in(1)));
      }
      if (need(1)) {
        if (bc) accumulate(n.in[1], fold_rows(g.cwiseProduct(in(0))));
        else accumulate(n.in[1], g.cwiseProduct(in(0)));
      }
      break;
    }
    case OpKind::kScale:
      accumulate(n.in[0], g * n.a);
      break;
    case OpKind::kOffset:
      accumulate(n.in[0], g);
      break;
    case OpKind::kTanh: {
      const auto& y = n.value.mat().array();
      accumulate(n.in[0], (g.array() * (Real(1) - y.square())).matrix());
      break;
    }
    case OpKind::kSigmoid: {
      const auto& y = n.value.mat().array();
      accumulate(n.in[0], (g.array() * y * (Real(1) - y)).matrix());
      break;
    }
    case OpKind::kExp:
      accumulate(n.in[0], g.cwiseProduct(n.value.mat()));
      break;
    case OpKind::kLog:
      accumulate(n.in[0], (g.array() / in(0).array()).matrix());
      break;
    case OpKind::kConcat: {
      Eigen::Index at = 0;
      for (std::size_t k = 0; k < n.in.size(); ++k) {
        const auto w = in(k).cols();
        if (need(k)) accumulate(n.in[k], g.middleCols(at, w));
        at += w;
      }
      break;
    }
    case OpKind::kSlice: {
      Matrix full = Matrix::Zero(in(0).rows(), in(0).cols());
      full.middleCols(static_cast<Eigen::Index>(n.begin), g.cols()) = g;
      accumulate(n.in[0], full);
      break;
    }
    case OpKind::kReduceSum:
    case OpKind::kReduceMean: {
      const Matrix& x = in(0);
      Matrix full;
      Real div = 1;
      switch (n.axis) {
        case Axis::kAll:
          full = Matrix::Constant(x.rows(), x.cols(), g(0, 0));
          div = static_cast<Real>(x.size());
          break;
        case Axis::kRows:
          full = g.replicate(x.rows(), 1);
          div = static_cast<Real>(x.rows());
          break;
        case Axis::kCols:
          full = g.replicate(1, x.cols());
          div = static_cast<Real>(x.cols());
          break;
      }
      if (n.op == OpKind::kReduceMean) full /= div;
      accumulate(n.in[0], full);
      break;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      Matrix d = n.cache.mat();
      const Real seed = g(0, 0);
      for (Eigen::Index r = 0; r < d.rows(); ++r) {
        const Real w = n.weights[static_cast<std::size_t>(r)];
        if (w == 0) {
          d.row(r).setZero();
          continue;
        }
        d(r, n.index[static_cast<std::size_t>(r)]) -= Real(1);
        d.row(r) *= seed * w;
      }
      accumulate(n.in[0], d);
      break;
    }
    case OpKind::kHinge:
      accumulate(n.in[0], (in(0).array() > Real(0)).select(g.array(), Real(0)).matrix());
      break;
    case OpKind::kBroadcast:
      accumulate(n.in[0], fold_rows(g));
      break;
    case OpKind::kGatherRows: {
      Matrix table = Matrix::Zero(in(0).rows(), in(0).cols());
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        table.row(n.index[r]) += g.row(static_cast<Eigen::Index>(r));
      }
      accumulate(n.in[0], table);
      break;
    }
    case OpKind::kClamp: {
      const auto& x = in(0).array();
      accumulate(n.in[0], ((x > n.a) && (x < n.b)).select(g.array(), Real(0)).matrix());
      break;
    }
    case OpKind::kLayerNorm: {
      const Matrix& y = n.value.mat();
      const Matrix& inv = n.cache2.mat();
      const Real c = static_cast<Real>(y.cols());
      Matrix d(y.rows(), y.cols());
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const Real sg = g.row(r).sum();
        const Real sgy = g.row(r).dot(y.row(r));
        d.row(r) = (inv(r, 0) / c) * (c * g.row(r).array() - sg - y.row(r).array() * sgy);
      }
      accumulate(n.in[0], d);
      break;
    }
    case OpKind::kRowSelect: {
      Matrix ga = g;
      Matrix gb = g;
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        if (n.index[r]) gb.row(static_cast<Eigen::Index>(r)).setZero();
        else ga.row(static_cast<Eigen::Index>(r)).setZero();
      }
      if (need(0)) accumulate(n.in[0], ga);
      if (need(1)) accumulate(n.in[1], gb);
      break;
    }
  }
}

void Tape::backward(NodeId seed) {
  check_id(seed);
  if (stale_) throw Error("tape: backward() called before forward() on rebound leaves");
  const Array& sv = nodes_[seed.index].value;
  if (sv.rows() != 1 || sv.cols() != 1) {
    throw ShapeError("tape: backward seed must be scalar, node #" + std::to_string(seed.index) +
                     " is " + sv.shape_string());
  }
  grads_.assign(nodes_.size(), Array{});
  has_grad_.assign(nodes_.size(), 0);
  grads_[seed.index] = Array::scalar(1);
  has_grad_[seed.index] = 1;
  for (std::int64_t i = seed.index; i >= 0; --i) {
    const auto u = static_cast<std::uint32_t>(i);
    if (has_grad_[u] && requires_[u]) adjoint(u);
  }
}

Tape::BranchState Tape::branch_state() const {
  BranchState st;
  for (const Node& n : nodes_) {
    if (n.op != OpKind::kHinge && n.op != OpKind::kClamp) continue;
    const Matrix& x = nodes_[n.in[0]].value.mat();
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const Real v = x.data()[k];
      std::uint8_t b = 0;
      if (n.op == OpKind::kHinge) {
        b = v < 0 ? 0 : (v == 0 ? 1 : 2);
        st.on_kink = st.on_kink || v == 0;
      } else {
        b = v < n.a ? 0 : (v == n.a ? 1 : (v < n.b ? 2 : (v == n.b ? 3 : 4)));
        st.on_kink = st.on_kink || v == n.a || v == n.b;
      }
      st.pattern.push_back(b);
    }
  }
  return st;
}

const Array& Tape::value(NodeId id) const {
  check_id(id);
  return nodes_[id.index].value;
}

Array Tape::grad(NodeId id) const {
  check_id(id);
  if (id.index < has_grad_.size() && has_grad_[id.index]) return grads_[id.index];
  const Array& v = nodes_[id.index].value;
  return Array(v.rows(), v.cols());
}

bool Tape::has_grad(NodeId id) const {
  check_id(id);
  return id.index < has_grad_.size() && has_grad_[id.index];
}

OpKind Tape::op(NodeId id) const {
  check_id(id);
  return nodes_[id.index].op;
}

std::span<const std::uint32_t> Tape::inputs(NodeId id) const {
  check_id(id);
  return nodes_[id.index].in;
}

const std::string& Tape::name(NodeId id) const {
  check_id(id);
  return nodes_[id.index].name;
}

}  // namespace muforge::ad
