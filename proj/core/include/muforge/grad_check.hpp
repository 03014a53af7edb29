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
#include <functional>
#include <span>

#include "muforge/tape.hpp"

namespace muforge::ad {

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t checked = 0;
  // Coordinates skipped because a hinge/clamp switched branch under the
  // perturbation, or the base point sits exactly on a kink.
  std::size_t excluded = 0;
  bool at_kink = false;
};

/// Compares analytic gradients of the scalar `loss` w.r.t. every element of
/// `leaves` against central differences. Relative error per coordinate is
/// |analytic - numeric| / max(1, |numeric|). Leaves are restored on return.
GradCheckResult grad_check(Tape& tape, NodeId loss, std::span<const NodeId> leaves, double eps = 1e-5);

using ScalarBuilder = std::function<NodeId(Tape&, NodeId)>;

/// Builds f on a fresh tape with `x` as the only leaf and checks it.
GradCheckResult grad_check(const ScalarBuilder& f, const Array& x, double eps = 1e-5);

}  // namespace muforge::ad
