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

#include "muforge/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "muforge/error.hpp"

namespace muforge::ad {

GradCheckResult grad_check(Tape& tape, NodeId loss, std::span<const NodeId> leaves, double eps) {
  if (!(eps > 0 && eps <= 1e-2)) throw Error("grad_check: eps must lie in (0, 1e-2]");

  tape.forward();
  const auto base_state = tape.branch_state();
  tape.backward(loss);

  GradCheckResult result;
  result.at_kink = base_state.on_kink;

  for (NodeId leaf : leaves) {
    const Array original = tape.value(leaf);
    const Array analytic = tape.grad(leaf);
    Array probe = original;
    for (std::size_t k = 0; k < original.size(); ++k) {
      const Real x0 = original.data()[k];

      probe.data()[k] = x0 + static_cast<Real>(eps);
      tape.bind(leaf, probe);
      tape.forward();
      const double up = tape.value(loss).item();
      const bool up_same = tape.branch_state().pattern == base_state.pattern;

      probe.data()[k] = x0 - static_cast<Real>(eps);
      tape.bind(leaf, probe);
      tape.forward();
      const double down = tape.value(loss).item();
      const bool down_same = tape.branch_state().pattern == base_state.pattern;

      probe.data()[k] = x0;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        tape.bind(leaf, original);
        tape.forward();
        throw NumericError("grad_check: non-finite loss at perturbed coordinate " + std::to_string(k));
      }
      if (base_state.on_kink || !up_same || !down_same) {
        ++result.excluded;
        continue;
      }
      const double numeric = (up - down) / (2 * eps);
      const double err = std::abs(static_cast<double>(analytic.data()[k]) - numeric) / std::max(1.0, std::abs(numeric));
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.checked;
    }
    tape.bind(leaf, original);
  }
  tape.forward();
  return result;
}

GradCheckResult grad_check(const ScalarBuilder& f, const Array& x, double eps) {
  Tape tape;
  const NodeId leaf = tape.leaf(x, "x");
  const NodeId loss = f(tape, leaf);
  const NodeId leaves[] = {leaf};
  return grad_check(tape, loss, leaves, eps);
}

}  // namespace muforge::ad
