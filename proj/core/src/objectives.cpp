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

#include "muforge/objectives.hpp"

#include <cmath>
#include <vector>

#include "muforge/error.hpp"

namespace muforge::objectives {

using corpus::Batch;

std::string to_string(AnnealShape s) { return s == AnnealShape::kLinear ? "linear" : "sigmoid"; }
std::string to_string(KlReduction r) { return r == KlReduction::kMean ? "mean" : "sum"; }

AnnealShape parse_anneal_shape(std::string_view s) {
  if (s == "linear") return AnnealShape::kLinear;
  if (s == "sigmoid") return AnnealShape::kSigmoid;
  throw ConfigError("unknown anneal shape '" + std::string(s) + "' (expected linear or sigmoid)");
}

KlReduction parse_kl_reduction(std::string_view s) {
  if (s == "mean") return KlReduction::kMean;
  if (s == "sum") return KlReduction::kSum;
  throw ConfigError("unknown kl reduction '" + std::string(s) + "' (expected mean or sum)");
}

void RegularizerConfig::validate() const {
  if (!(beta >= 0)) throw ConfigError("regularizer: beta must be >= 0");
  if (!(kl_lambda > 0 && kl_lambda <= 1)) throw ConfigError("regularizer: kl_lambda must lie in (0, 1]");
  if (!(free_bits_per_dim >= 0) || !(free_bits_total >= 0)) throw ConfigError("regularizer: free-bits reserves must be >= 0");
  if (free_bits_per_dim > 0 && free_bits_total > 0) {
    throw ConfigError("regularizer: per-dimension and total free bits are mutually exclusive");
  }
  if (!(bow_weight >= 0)) throw ConfigError("regularizer: bow_weight must be >= 0");
  if (!(word_dropout >= 0 && word_dropout <= 1)) throw ConfigError("regularizer: word_dropout must lie in [0, 1]");
}

ReconTerms recon_loss(Tape& t, std::span<const NodeId> logits, const Batch& batch) {
  if (logits.size() + 1 != batch.steps) {
    throw ShapeError("recon_loss: " + std::to_string(logits.size()) + " logit steps for a batch of " +
                     std::to_string(batch.steps) + " steps");
  }
  ReconTerms out;
  out.batch = &batch;
  out.tokens = batch.token_count();
  std::vector<NodeId> per_step;
  std::vector<Real> weights(batch.rows);
  for (std::size_t s = 0; s < logits.size(); ++s) {
    const auto targets = batch.column(s + 1);
    const auto keep = batch.mask_column(s + 1);
    for (std::size_t r = 0; r < batch.rows; ++r) weights[r] = keep[r] ? Real(1) : Real(0);
    per_step.push_back(t.softmax_cross_entropy(logits[s], targets, weights));
  }
  out.sum = per_step.size() == 1 ? per_step.front() : t.reduce_sum(t.concat(per_step));
  return out;
}

KlTerms kl_loss(Tape& t, const model::PosteriorNodes& post) {
  const NodeId mu_sq = t.mul(post.mu, post.mu);
  const NodeId inner = t.sub(t.add(t.exp(post.logvar), mu_sq), t.offset(post.logvar, Real(1)));
  KlTerms out;
  out.per_dim = t.scale(inner, Real(0.5));
  out.per_example = t.reduce_sum(out.per_dim, ad::Axis::kCols);
  out.mean = t.reduce_mean(out.per_example);
  out.rows = t.value(post.mu).rows();
  return out;
}

MuForcingTerms mu_forcing_loss(Tape& t, NodeId mu, double beta) {
  const std::size_t n = t.value(mu).rows();
  if (n < 2) throw Error("mu_forcing_loss: needs at least 2 rows, got " + std::to_string(n));
  if (!(beta >= 0)) throw Error("mu_forcing_loss: beta must be >= 0");
  const NodeId centered = t.sub(mu, t.reduce_mean(mu, ad::Axis::kRows));
  MuForcingTerms out;
  out.variance_term = t.scale(t.reduce_sum(t.mul(centered, centered)), Real(1) / static_cast<Real>(2 * n));
  out.loss = t.hinge(t.offset(t.scale(out.variance_term, Real(-1)), static_cast<Real>(beta)));
  return out;
}

double kl_anneal_weight(std::size_t step, std::size_t anneal_steps, AnnealShape shape) {
  if (anneal_steps == 0 || step >= anneal_steps) return 1.0;
  const double x = static_cast<double>(step) / static_cast<double>(anneal_steps);
  if (shape == AnnealShape::kLinear) return x;
  return 1.0 / (1.0 + std::exp(-12.0 * (x - 0.5)));
}

NodeId apply_free_bits(Tape& t, const KlTerms& kl, const RegularizerConfig& cfg) {
  if (cfg.free_bits_per_dim > 0 && cfg.free_bits_total > 0) {
    throw ConfigError("free bits: per-dimension and total reserves are mutually exclusive");
  }
  // max(r, x) = r + max(0, x - r)
  auto floor_at = [&](NodeId x, double reserve) {
    const auto r = static_cast<Real>(reserve);
    return t.offset(t.hinge(t.offset(x, -r)), r);
  };
  if (cfg.free_bits_per_dim > 0) {
    const NodeId dim_means = t.reduce_mean(kl.per_dim, ad::Axis::kRows);
    return t.reduce_sum(floor_at(dim_means, cfg.free_bits_per_dim));
  }
  if (cfg.free_bits_total > 0) return floor_at(kl.mean, cfg.free_bits_total);
  return kl.mean;
}

NodeId bow_loss(Tape& t, const model::BoundParams& p, NodeId z, const Batch& batch) {
  NodeId hw;
  try {
    hw = p["bow.hidden.w"];
  } catch (const Error&) {
    throw Error("bow_loss: bag-of-words head not initialized (model bow_hidden = 0)");
  }
  if (t.value(z).rows() != batch.rows) throw ShapeError("bow_loss: z rows do not match the batch");
  const NodeId hidden = t.tanh(t.add(t.matmul(z, hw), p["bow.hidden.b"]));
  const NodeId logits = t.add(t.matmul(hidden, p["bow.out.w"]), p["bow.out.b"]);
  std::vector<NodeId> terms;
  std::vector<Real> weights(batch.rows);
  for (std::size_t s = 1; s + 1 < batch.steps; ++s) {
    bool any = false;
    for (std::size_t r = 0; r < batch.rows; ++r) {
      const bool content = s + 1 < batch.lengths[r];
      weights[r] = content ? Real(1) : Real(0);
      any = any || content;
    }
    if (any) terms.push_back(t.softmax_cross_entropy(logits, batch.column(s), weights));
  }
  if (terms.empty()) return t.scale(t.reduce_sum(logits), Real(0));
  return terms.size() == 1 ? terms.front() : t.reduce_sum(t.concat(terms));
}

TotalLoss total_loss(Tape& t, const LossComponents& parts, const RegularizerConfig& cfg, std::size_t step) {
  const Batch* batch = parts.batch;
  if (batch == nullptr || parts.recon.batch != batch || parts.kl.rows != batch->rows ||
      t.value(parts.mu).rows() != batch->rows) {
    throw Error("total_loss: loss components were computed on different batches");
  }
  const auto n = static_cast<Real>(batch->rows);
  const bool sum = cfg.kl_reduction == KlReduction::kSum;

  TotalLoss out;
  LossBreakdown& b = out.breakdown;
  const double weight = cfg.kl_lambda * kl_anneal_weight(step, cfg.kl_anneal_steps, cfg.anneal_shape);
  b.kl_weight = weight;

  const NodeId recon = sum ? parts.recon.sum : t.scale(parts.recon.sum, Real(1) / n);
  const NodeId kl_eff = apply_free_bits(t, parts.kl, cfg);
  NodeId total = t.add(recon, t.scale(kl_eff, static_cast<Real>(weight) * (sum ? n : Real(1))));

  if (cfg.beta > 0 || batch->rows >= 2) {
    const auto mf = mu_forcing_loss(t, parts.mu, cfg.beta);
    b.mu_var_term = t.value(mf.variance_term).item();
    if (cfg.beta > 0) {
      total = t.add(total, mf.loss);
      b.mu_reg = t.value(mf.loss).item();
    }
  }

  if (parts.bow.valid()) {
    b.bow = t.value(parts.bow).item() / n;
    if (cfg.bow_weight > 0) {
      total = t.add(total, t.scale(parts.bow, static_cast<Real>(cfg.bow_weight) / (sum ? Real(1) : n)));
    }
  }

  b.recon = t.value(parts.recon.sum).item() / n;
  b.recon_per_token = t.value(parts.recon.sum).item() / static_cast<double>(std::max<std::size_t>(1, parts.recon.tokens));
  b.kl = t.value(parts.kl.mean).item();
  b.kl_effective = t.value(kl_eff).item();
  b.total = t.value(total).item();
  out.total = total;
  return out;
}

}  // namespace muforge::objectives
