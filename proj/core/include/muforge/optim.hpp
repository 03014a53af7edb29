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
#include <vector>

#include "muforge/array.hpp"
#include "muforge/model.hpp"

namespace muforge::train {

/// One gradient Array per parameter, in Params order.
using Gradients = std::vector<Array>;

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

struct OptimState {
  AdamHyper hyper;
  std::uint64_t t = 0;
  std::vector<Array> m;
  std::vector<Array> v;

  static OptimState zeros_like(const model::Params& params, AdamHyper hyper = {});
  friend bool operator==(const OptimState&, const OptimState&) = default;
};

/// Clamps every element to [-threshold, threshold].
void clip_gradients(Gradients& grads, double threshold);

double global_norm(const Gradients& grads);

/// Bias-corrected Adam update. A non-finite gradient aborts the step before
/// anything is modified and names the offending parameter.
void adam_step(model::Params& params, const Gradients& grads, OptimState& state);

}  // namespace muforge::train
