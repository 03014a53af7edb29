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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "muforge/array.hpp"

namespace muforge::ad {

enum class OpKind : std::uint8_t {
  kLeaf,
  kConstant,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kOffset,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kConcat,
  kSlice,
  kReduceSum,
  kReduceMean,
  kSoftmaxCrossEntropy,
  kHinge,
  kBroadcast,
  kGatherRows,
  kClamp,
  kLayerNorm,
  kRowSelect,
};

std::string_view op_name(OpKind op) noexcept;

// Reduction direction. kRows collapses the row (batch) dimension to 1 x C,
// kCols collapses columns to R x 1.
enum class Axis : std::uint8_t { kAll, kRows, kCols };

struct NodeId {
  static constexpr std::uint32_t kInvalid = 0xffffffffu;
  std::uint32_t index = kInvalid;

  bool valid() const noexcept { return index != kInvalid; }
  friend bool operator==(NodeId, NodeId) = default;
};

/// Reverse-mode differentiation tape over dense arrays.
///
/// Nodes are appended in topological order and evaluated eagerly as they are
/// recorded, so values are available while a graph is being built (greedy
/// decoding relies on this). Leaves can later be rebound and the whole tape
/// re-evaluated with forward(), which is how the finite-difference checker
/// perturbs inputs without rebuilding the graph.
///
/// Binary elementwise ops accept a 1 x C right operand against an N x C left
/// operand (leading batch dimension). Every other shape mismatch throws
/// ShapeError naming the node and shapes.
///
/// A tape is single-owner; build independent tapes for parallel work.
class Tape {
 public:
  Tape() = default;

  NodeId leaf(Array value, std::string name = {});
  NodeId constant(Array value);
  void bind(NodeId leaf, Array value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, Real factor);
  NodeId offset(NodeId a, Real shift);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId concat(std::span<const NodeId> parts);
  NodeId concat(NodeId a, NodeId b);
  NodeId slice(NodeId a, std::size_t col_begin, std::size_t col_end);
  NodeId reduce_sum(NodeId a, Axis axis = Axis::kAll);
  NodeId reduce_mean(NodeId a, Axis axis = Axis::kAll);
  // sum_n weight[n] * -log softmax(logits[n])[target[n]]  ->  1 x 1
  NodeId softmax_cross_entropy(NodeId logits, std::span<const std::int32_t> targets,
                               std::span<const Real> weights);
  // max(0, a) elementwise; subgradient at 0 is 0.
  NodeId hinge(NodeId a);
  NodeId broadcast(NodeId row, std::size_t rows);
  NodeId gather_rows(NodeId table, std::span<const std::int32_t> ids);
  NodeId clamp(NodeId a, Real lo, Real hi);
  // Row-wise (x - mean) / sqrt(var + eps), no affine part.
  NodeId layer_norm(NodeId a, Real eps = Real(1e-5));
  // out[r] = keep[r] ? a[r] : b[r]
  NodeId row_select(NodeId a, NodeId b, std::span<const std::uint8_t> keep);

  // Re-evaluates every node from the bound leaves.
  void forward();
  std::vector<Array> forward(std::span<const NodeId> roots);

  // Resets all gradient accumulators and back-propagates from a scalar node.
  void backward(NodeId seed);

  const Array& value(NodeId id) const;
  Array grad(NodeId id) const;
  bool has_grad(NodeId id) const;
  OpKind op(NodeId id) const;
  std::span<const std::uint32_t> inputs(NodeId id) const;
  const std::string& name(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Branch taken by every hinge/clamp element, and whether any input sits
  // exactly on a non-differentiable point.
  struct BranchState {
    std::vector<std::uint8_t> pattern;
    bool on_kink = false;
  };
  BranchState branch_state() const;

 private:
  struct Node {
    OpKind op = OpKind::kConstant;
    std::vector<std::uint32_t> in;
    Real a = 0;
    Real b = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    Axis axis = Axis::kAll;
    std::vector<std::int32_t> index;
    std::vector<Real> weights;
    std::string name;
    Array value;
    Array cache;
    Array cache2;
  };

  NodeId push(Node node);
  void evaluate(std::uint32_t i);
  void check_id(NodeId id) const;
  void accumulate(std::uint32_t i, const Matrix& g);
  void adjoint(std::uint32_t i);
  [[noreturn]] void shape_fail(std::uint32_t i, const std::string& detail) const;

  std::vector<Node> nodes_;
  std::vector<Array> grads_;
  std::vector<std::uint8_t> has_grad_;
  std::vector<std::uint8_t> requires_;
  bool stale_ = false;
};

}  // namespace muforge::ad
