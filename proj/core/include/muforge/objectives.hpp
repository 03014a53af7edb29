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
#include <span>
#include <string>
#include <string_view>

#include "muforge/corpus.hpp"
#include "muforge/model.hpp"
#include "muforge/tape.hpp"

namespace muforge::objectives {

using ad::NodeId;
using ad::Tape;

enum class AnnealShape { kLinear, kSigmoid };
// Mean: the objective is per sentence (recon summed over tokens, averaged
// over the batch; KL averaged). Sum: recon, KL and BOW are summed over the
// batch. The mu-forcing term is a batch statistic and is never rescaled.
enum class KlReduction { kMean, kSum };

std::string to_string(AnnealShape s);
std::string to_string(KlReduction r);
AnnealShape parse_anneal_shape(std::string_view s);
KlReduction parse_kl_reduction(std::string_view s);

/// Every strategy is independently switchable; a zero weight/margin/rate
/// disables it. All KL quantities are in nats.
struct RegularizerConfig {
  double beta = 0;                    // mu-forcing margin
  std::size_t kl_anneal_steps = 0;    // 0 = constant weight 1
  AnnealShape anneal_shape = AnnealShape::kLinear;
  double free_bits_per_dim = 0;       // reserve per latent dimension
  double free_bits_total = 0;         // reserve for the whole KL
  double kl_lambda = 1;               // KL penalty weight in (0, 1]
  double bow_weight = 0;
  double word_dropout = 0;
  KlReduction kl_reduction = KlReduction::kMean;

  void validate() const;
  friend bool operator==(const RegularizerConfig&, const RegularizerConfig&) = default;
};

struct ReconTerms {
  NodeId sum;  // 1 x 1, nats summed over unmasked target tokens
  std::size_t tokens = 0;
  const corpus::Batch* batch = nullptr;
};

/// Softmax cross-entropy of logits[t] against token t+1, masked.
ReconTerms recon_loss(Tape& tape, std::span<const NodeId> logits, const corpus::Batch& batch);

struct KlTerms {
  NodeId per_dim;      // N x K
  NodeId per_example;  // N x 1
  NodeId mean;         // 1 x 1
  std::size_t rows = 0;
};

/// Closed-form KL(N(mu, diag exp(logvar)) || N(0, I)):
/// 1/2 sum_k (exp(logvar_k) + mu_k^2 - 1 - logvar_k).
KlTerms kl_loss(Tape& tape, const model::PosteriorNodes& post);

struct MuForcingTerms {
  NodeId loss;           // max(0, beta - variance)
  NodeId variance_term;  // 1/(2N) sum_n |mu_n - mean(mu)|^2
};

/// The batch mean is part of the graph, so gradients flow through it.
MuForcingTerms mu_forcing_loss(Tape& tape, NodeId mu, double beta);

double kl_anneal_weight(std::size_t step, std::size_t anneal_steps, AnnealShape shape = AnnealShape::kLinear);

/// Batch-mean KL after the free-bits clamp; plain batch-mean KL when neither
/// reserve is set.
NodeId apply_free_bits(Tape& tape, const KlTerms& kl, const RegularizerConfig& cfg);

/// Cross-entropy of each content token (BOS/EOS/PAD excluded, repeats
/// counted) against a unigram distribution predicted from z. Summed over the
/// batch.
NodeId bow_loss(Tape& tape, const model::BoundParams& params, NodeId z, const corpus::Batch& batch);

struct LossBreakdown {
  double recon = 0;            // per-sentence sum, averaged over the batch
  double recon_per_token = 0;
  double kl = 0;               // batch-mean KL, before any clamp
  double kl_effective = 0;     // after free bits
  double mu_reg = 0;
  double mu_var_term = 0;
  double bow = 0;              // per-sentence, averaged over the batch
  double kl_weight = 0;        // lambda * anneal(step)
  double total = 0;
};

struct LossComponents {
  ReconTerms recon;
  KlTerms kl;
  NodeId mu;
  NodeId bow;  // invalid when the head is disabled
  const corpus::Batch* batch = nullptr;
};

struct TotalLoss {
  NodeId total;
  LossBreakdown breakdown;
};

/// total = recon + lambda * anneal(step) * KL_eff + L_mu + bow_weight * bow
TotalLoss total_loss(Tape& tape, const LossComponents& parts, const RegularizerConfig& cfg, std::size_t step);

}  // namespace muforge::objectives
