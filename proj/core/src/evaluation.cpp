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

#include "muforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "muforge/error.hpp"
#include "muforge/objectives.hpp"

namespace muforge::eval {

namespace {

using corpus::Batch;
using NgramCounts = std::unordered_map<std::string, std::size_t>;

std::string ngram_key(const Sentence& s, std::size_t at, std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) key.push_back('\x1f');
    key += s[at + i];
  }
  return key;
}

NgramCounts count_ngrams(const Sentence& s, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[ngram_key(s, i, n)];
  return out;
}

std::size_t closest_length(const std::multiset<std::size_t>& lengths, std::size_t c) {
  auto hi = lengths.lower_bound(c);
  if (hi == lengths.end()) return *std::prev(hi);
  if (*hi == c || hi == lengths.begin()) return *hi;
  const std::size_t lo = *std::prev(hi);
  return (c - lo <= *hi - c) ? lo : *hi;
}

struct Tally {
  std::vector<double> matched;
  std::vector<double> total;
  double cand_len = 0;
  double ref_len = 0;
};

double score(const Tally& t, std::size_t max_n) {
  if (t.cand_len == 0 || t.matched[0] == 0) return 0.0;
  bool any_zero = false;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (t.total[n] > 0 && t.matched[n] == 0) any_zero = true;
  }
  double log_sum = 0;
  std::size_t used = 0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (t.total[n] == 0) continue;
    double num = t.matched[n];
    double den = t.total[n];
    if (any_zero && n >= 1) {
      num += 1;
      den += 1;
    }
    log_sum += std::log(num / den);
    ++used;
  }
  const double bp = t.cand_len > t.ref_len ? 1.0 : std::exp(1.0 - t.ref_len / t.cand_len);
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(used));
}

void check_order(std::size_t max_n) {
  if (max_n < 1 || max_n > 8) throw Error("bleu: max_n must lie in [1, 8], got " + std::to_string(max_n));
}

// Top two counts of an n-gram over a set of sentences, for leave-one-out clipping.
struct TopTwo {
  std::size_t best = 0;
  std::size_t best_at = std::numeric_limits<std::size_t>::max();
  std::size_t second = 0;

  void offer(std::size_t count, std::size_t at) {
    if (count > best) {
      second = best;
      best = count;
      best_at = at;
    } else if (count > second) {
      second = count;
    }
  }
  std::size_t excluding(std::size_t at) const { return at == best_at ? second : best; }
};

}  // namespace

double bleu(std::span<const Sentence> candidates, std::span<const Sentence> references, std::size_t max_n) {
  check_order(max_n);
  if (candidates.empty()) throw Error("bleu: no candidates");
  if (references.empty()) throw Error("bleu: no references");

  std::vector<NgramCounts> max_ref(max_n);
  std::multiset<std::size_t> ref_lengths;
  for (const auto& r : references) {
    ref_lengths.insert(r.size());
    for (std::size_t n = 1; n <= max_n; ++n) {
      for (const auto& [g, c] : count_ngrams(r, n)) {
        auto& slot = max_ref[n - 1][g];
        slot = std::max(slot, c);
      }
    }
  }

  Tally t{std::vector<double>(max_n, 0), std::vector<double>(max_n, 0), 0, 0};
  for (const auto& c : candidates) {
    t.cand_len += static_cast<double>(c.size());
    t.ref_len += static_cast<double>(closest_length(ref_lengths, c.size()));
    for (std::size_t n = 1; n <= max_n; ++n) {
      for (const auto& [g, k] : count_ngrams(c, n)) {
        auto it = max_ref[n - 1].find(g);
        const std::size_t cap = it == max_ref[n - 1].end() ? 0 : it->second;
        t.matched[n - 1] += static_cast<double>(std::min(k, cap));
        t.total[n - 1] += static_cast<double>(k);
      }
    }
  }
  return score(t, max_n);
}

double self_bleu(std::span<const Sentence> candidates, std::size_t max_n) {
  check_order(max_n);
  if (candidates.size() < 2) throw Error("self_bleu: needs at least 2 candidates");

  std::vector<std::vector<NgramCounts>> counts(candidates.size(), std::vector<NgramCounts>(max_n));
  std::vector<std::unordered_map<std::string, TopTwo>> top(max_n);
  std::multiset<std::size_t> lengths;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    lengths.insert(candidates[i].size());
    for (std::size_t n = 1; n <= max_n; ++n) {
      counts[i][n - 1] = count_ngrams(candidates[i], n);
      for (const auto& [g, c] : counts[i][n - 1]) top[n - 1][g].offer(c, i);
    }
  }

  double sum = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::size_t len = candidates[i].size();
    lengths.erase(lengths.find(len));
    Tally t{std::vector<double>(max_n, 0), std::vector<double>(max_n, 0), static_cast<double>(len),
            static_cast<double>(closest_length(lengths, len))};
    lengths.insert(len);
    for (std::size_t n = 0; n < max_n; ++n) {
      for (const auto& [g, k] : counts[i][n]) {
        t.matched[n] += static_cast<double>(std::min(k, top[n].at(g).excluding(i)));
        t.total[n] += static_cast<double>(k);
      }
    }
    sum += score(t, max_n);
  }
  return sum / static_cast<double>(candidates.size());
}

HeldOut held_out_metrics(const model::Params& params, const model::ModelConfig& config,
                         std::span<const Batch> batches, std::size_t mc_samples, std::uint64_t seed) {
  if (mc_samples < 1) throw Error("held_out_metrics: mc_samples must be >= 1");
  if (batches.empty()) throw Error("held_out_metrics: empty test set");

  model::Rng rng(seed);
  HeldOut out;
  double recon = 0;
  double kl = 0;
  std::vector<Array> mus;
  for (const Batch& batch : batches) {
    ad::Tape t;
    const model::BoundParams p(t, params, false);
    const auto post = model::encode(t, p, config, batch);
    kl += t.value(objectives::kl_loss(t, post).per_example).mat().sum();
    mus.push_back(t.value(post.mu));
    for (std::size_t s = 0; s < mc_samples; ++s) {
      const ad::NodeId z = model::reparameterize(t, post, rng);
      const auto logits = model::decode_teacher_forced(t, p, config, z, batch, 0.0, rng);
      recon += t.value(objectives::recon_loss(t, logits, batch).sum).item();
    }
    out.sentences += batch.rows;
    out.tokens += batch.token_count();
  }
  recon /= static_cast<double>(mc_samples);
  out.recon_sum = recon / static_cast<double>(out.sentences);
  out.recon_per_token = recon / static_cast<double>(std::max<std::size_t>(1, out.tokens));
  out.kl = kl / static_cast<double>(out.sentences);

  const std::size_t k = config.latent_dim;
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(k));
  for (const auto& m : mus) mean += m.mat().cast<double>().colwise().sum();
  mean /= static_cast<double>(out.sentences);
  double spread = 0;
  for (const auto& m : mus) spread += (m.mat().cast<double>().rowwise() - mean).squaredNorm();
  out.mu_var_term = spread / (2.0 * static_cast<double>(out.sentences));
  return out;
}

Sentence to_sentence(std::span<const corpus::TokenId> ids, const corpus::Vocabulary& vocab) {
  Sentence out;
  for (const auto id : ids) {
    if (id == corpus::Vocabulary::kBos || id == corpus::Vocabulary::kPad) continue;
    if (id == corpus::Vocabulary::kEos) break;
    out.push_back(vocab.token(id));
  }
  return out;
}

std::vector<Sentence> sample_from_prior(const model::Params& params, const model::ModelConfig& config,
                                        const corpus::Vocabulary& vocab, std::size_t count, std::size_t max_len,
                                        model::DecodeMode mode, std::uint64_t seed) {
  if (count < 1) throw Error("sample_from_prior: count must be >= 1");
  model::Rng rng(seed);
  const Array z = model::standard_normal(count, config.latent_dim, rng);
  const auto rows = model::generate(params, config, z, max_len, mode, rng);
  std::vector<Sentence> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(to_sentence(r, vocab));
  return out;
}

MuHistogram mu_histogram(const model::Params& params, const model::ModelConfig& config,
                         std::span<const Batch> batches, std::size_t bins) {
  if (bins < 10) throw Error("mu_histogram: bins must be >= 10");
  std::vector<double> values;
  MuHistogram h;
  const std::size_t k = config.latent_dim;
  h.dim_mean.assign(k, 0);
  h.dim_var.assign(k, 0);
  std::vector<Array> mus;
  for (const Batch& b : batches) {
    mus.push_back(model::encode(params, config, b).mu);
    h.examples += b.rows;
  }
  if (h.examples == 0) throw Error("mu_histogram: empty dataset");

  for (const auto& m : mus) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        const double v = m(r, c);
        values.push_back(v);
        h.dim_mean[c] += v;
      }
    }
  }
  const double n = static_cast<double>(h.examples);
  for (auto& v : h.dim_mean) v /= n;
  for (const auto& m : mus) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        const double d = m(r, c) - h.dim_mean[c];
        h.dim_var[c] += d * d;
      }
    }
  }
  for (auto& v : h.dim_var) v /= n;

  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  std::size_t near_zero = 0;
  for (const double v : values) {
    auto bin = static_cast<std::size_t>((v - lo) / width);
    ++h.counts[std::min(bin, bins - 1)];
    if (std::abs(v) < 0.1) ++near_zero;
  }
  h.near_zero_fraction = static_cast<double>(near_zero) / static_cast<double>(values.size());
  return h;
}

std::string MuHistogram::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) os << edges[i] << ',' << edges[i + 1] << ',' << counts[i] << '\n';
  return os.str();
}

std::string MuHistogram::dim_stats_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "dim,mean,var\n";
  for (std::size_t i = 0; i < dim_mean.size(); ++i) os << i << ',' << dim_mean[i] << ',' << dim_var[i] << '\n';
  return os.str();
}

std::string EvalReport::to_json_line() const {
  nlohmann::ordered_json j;
  j["recon_sum"] = recon_sum;
  j["recon_per_token"] = recon_per_token;
  j["kl"] = kl;
  j["mu_var_term"] = mu_var_term;
  for (const auto& [n, s] : bleu) j["bleu"][std::to_string(n)] = s;
  for (const auto& [n, s] : self_bleu) j["self_bleu"][std::to_string(n)] = s;
  j["sample_count"] = sample_count;
  j["seed"] = seed;
  return j.dump();
}

std::string EvalReport::csv_header() {
  return "recon_sum,recon_per_token,kl,mu_var_term,bleu4,bleu5,self_bleu4,self_bleu5,sample_count,seed";
}

std::string EvalReport::to_csv_row() const {
  auto get = [](const std::map<int, double>& m, int n) {
    auto it = m.find(n);
    return it == m.end() ? std::nan("") : it->second;
  };
  std::ostringstream os;
  os.precision(17);
  os << recon_sum << ',' << recon_per_token << ',' << kl << ',' << mu_var_term << ',' << get(bleu, 4) << ','
     << get(bleu, 5) << ',' << get(self_bleu, 4) << ',' << get(self_bleu, 5) << ',' << sample_count << ',' << seed;
  return os.str();
}

}  // namespace muforge::eval
