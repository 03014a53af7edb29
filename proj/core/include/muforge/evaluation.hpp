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
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "muforge/corpus.hpp"
#include "muforge/model.hpp"

namespace muforge::eval {

using corpus::Sentence;

struct HeldOut {
  double recon_sum = 0;        // nats per sentence
  double recon_per_token = 0;  // nats per target token
  double kl = 0;               // nats per sentence
  double mu_var_term = 0;      // 1/(2N) sum |mu_n - mean(mu)|^2 over the whole set
  std::size_t sentences = 0;
  std::size_t tokens = 0;
};

/// Closed-form KL on the posterior and teacher-forced reconstruction averaged
/// over `mc_samples` reparameterized draws. No word dropout.
HeldOut held_out_metrics(const model::Params& params, const model::ModelConfig& config,
                         std::span<const corpus::Batch> batches, std::size_t mc_samples, std::uint64_t seed);

/// Corpus BLEU in [0, 100]. Every reference is a reference for every
/// candidate: counts are clipped by the maximum count over references and
/// the brevity penalty uses the closest reference length (shorter on ties).
/// When any precision is zero, orders n >= 2 get add-one smoothing. Orders
/// for which the candidates contain no n-gram at all are left out of the
/// geometric mean.
double bleu(std::span<const Sentence> candidates, std::span<const Sentence> references, std::size_t max_n);

/// Mean over candidates of bleu({c_i}, all other candidates).
double self_bleu(std::span<const Sentence> candidates, std::size_t max_n);

/// Content tokens of a generated row (BOS, EOS and PAD dropped).
Sentence to_sentence(std::span<const corpus::TokenId> ids, const corpus::Vocabulary& vocab);

/// z ~ N(0, I) per sentence, then generate().
std::vector<Sentence> sample_from_prior(const model::Params& params, const model::ModelConfig& config,
                                        const corpus::Vocabulary& vocab, std::size_t count, std::size_t max_len,
                                        model::DecodeMode mode, std::uint64_t seed);

struct MuHistogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
  std::vector<double> dim_mean;
  std::vector<double> dim_var;
  std::size_t examples = 0;
  double near_zero_fraction = 0;  // share of entries with |mu| < 0.1

  std::string to_csv() const;          // bin_lo,bin_hi,count
  std::string dim_stats_csv() const;   // dim,mean,var
};

MuHistogram mu_histogram(const model::Params& params, const model::ModelConfig& config,
                         std::span<const corpus::Batch> batches, std::size_t bins);

struct EvalReport {
  double recon_sum = 0;
  double recon_per_token = 0;
  double kl = 0;
  double mu_var_term = 0;
  std::map<int, double> bleu;
  std::map<int, double> self_bleu;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;

  std::string to_json_line() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

}  // namespace muforge::eval
