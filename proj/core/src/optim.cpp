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

#include "muforge/optim.hpp"

#include <cmath>

#include "muforge/error.hpp"

namespace muforge::train {

OptimState OptimState::zeros_like(const model::Params& params, AdamHyper hyper) {
  OptimState s;
  s.hyper = hyper;
  for (const auto& e : params.entries()) {
    s.m.emplace_back(e.value.rows(), e.value.cols());
    s.v.emplace_back(e.value.rows(), e.value.cols());
  }
  return s;
}

void clip_gradients(Gradients& grads, double threshold) {
  if (!(threshold > 0)) throw Error("clip_gradients: threshold must be positive");
  const auto th = static_cast<Real>(threshold);
  for (auto& g : grads) g.mat() = g.mat().cwiseMax(-th).cwiseMin(th);
}

double global_norm(const Gradients& grads) {
  double sq = 0;
  for (const auto& g : grads) sq += static_cast<double>(g.mat().squaredNorm());
  return std::sqrt(sq);
}

void adam_step(model::Params& params, const Gradients& grads, OptimState& state) {
  auto& entries = params.entries();
  if (grads.size() != entries.size() || state.m.size() != entries.size() || state.v.size() != entries.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!grads[i].same_shape(entries[i].value) || !state.m[i].same_shape(entries[i].value) ||
        !state.v[i].same_shape(entries[i].value)) {
      throw ShapeError("adam_step: shape mismatch for parameter " + entries[i].name);
    }
    if (!grads[i].all_finite()) throw NumericError("adam_step: non-finite gradient for parameter " + entries[i].name);
  }

  const AdamHyper& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const auto b1 = static_cast<Real>(h.beta1);
  const auto b2 = static_cast<Real>(h.beta2);
  const auto step = static_cast<Real>(h.lr / (1.0 - std::pow(h.beta1, t)));
  const auto v_corr = static_cast<Real>(1.0 / (1.0 - std::pow(h.beta2, t)));
  const auto eps = static_cast<Real>(h.eps);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto m = state.m[i].mat().array();
    auto v = state.v[i].mat().array();
    const auto g = grads[i].mat().array();
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.square();
    entries[i].value.mat().array() -= step * m / ((v * v_corr).sqrt() + eps);
  }
}

}  // namespace muforge::train
