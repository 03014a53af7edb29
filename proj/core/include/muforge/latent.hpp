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
#include <string>
#include <vector>

#include "muforge/corpus.hpp"
#include "muforge/model.hpp"

namespace muforge::latent {

using corpus::Sentence;

enum class Provenance { kEncoded, kPrior, kArithmetic };

/// A latent code. `terms` are the signed codes it was built from; `z` is
/// their exact sum rounded once, so chained transfers stay exact.
struct LatentPoint {
  struct Term {
    int sign = 1;
    std::vector<double> value;
    friend bool operator==(const Term&, const Term&) = default;
  };

  Array z;  // 1 x K
  Provenance provenance = Provenance::kArithmetic;
  std::string source;  // sentence text for encoded points
  std::vector<Term> terms;

  static LatentPoint from(const Array& z, Provenance provenance, std::string source = {});
  std::size_t dim() const noexcept { return z.cols(); }
};

/// Posterior mean of the encoded sentence. No sampling.
LatentPoint encode_to_latent(const model::Params& params, const model::ModelConfig& config,
                             const corpus::Vocabulary& vocab, const Sentence& sentence, std::size_t max_len);

/// Greedy decode of a single latent point.
Sentence decode_greedy(const model::Params& params, const model::ModelConfig& config, const corpus::Vocabulary& vocab,
                       const Array& z, std::size_t max_len);

/// z_t = z1 * t + z2 * (1 - t).
Array interpolate_point(const Array& z1, const Array& z2, double t);

struct HomotopyStep {
  double t = 0;
  LatentPoint point;
  Sentence sentence;
};

/// `steps` evenly spaced t from 0 to 1 inclusive, each decoded greedily.
std::vector<HomotopyStep> interpolate(const model::Params& params, const model::ModelConfig& config,
                                      const corpus::Vocabulary& vocab, const LatentPoint& z1, const LatentPoint& z2,
                                      std::size_t steps, std::size_t max_len);

/// z_b = z_a + z_q - z_p, summed exactly.
LatentPoint transfer_vector(const LatentPoint& z_a, const LatentPoint& z_p, const LatentPoint& z_q);

struct TransferResult {
  LatentPoint point;
  Sentence sentence;
};

TransferResult attribute_transfer(const model::Params& params, const model::ModelConfig& config,
                                  const corpus::Vocabulary& vocab, const LatentPoint& z_a, const LatentPoint& z_p,
                                  const LatentPoint& z_q, std::size_t max_len);

/// `t<TAB>sentence` per line.
std::string homotopy_table(const std::vector<HomotopyStep>& steps);

/// `original<TAB>transferred` per line.
std::string transfer_table(const std::vector<std::pair<Sentence, Sentence>>& rows);

}  // namespace muforge::latent
