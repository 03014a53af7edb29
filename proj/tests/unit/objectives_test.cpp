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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "muforge/error.hpp"
#include "muforge/objectives.hpp"

namespace muforge::objectives {
namespace {

using corpus::Batch;
using corpus::TokenId;

Batch two_rows() {
  const std::vector<std::vector<TokenId>> rows{{1, 4, 2}, {1, 5, 2}};
  return corpus::make_batch(rows);
}

double mu_forcing_value(const Array& mu, double beta) {
  Tape t;
  return t.value(mu_forcing_loss(t, t.constant(mu), beta).loss).item();
}

Array from_rows(std::size_t n, std::size_t k, std::initializer_list<Real> v) {
  return Array::from(n, k, std::vector<Real>(v));
}

TEST(ReconLoss, UniformLogitsGiveLogV) {
  Tape t;
  const Batch b = two_rows();
  std::vector<NodeId> logits{t.constant(Array(2, 6)), t.constant(Array(2, 6))};
  const auto r = recon_loss(t, logits, b);
  EXPECT_NEAR(t.value(r.sum).item(), 4 * std::log(6.0), 1e-12);
  EXPECT_EQ(r.tokens, 4u);
}

TEST(ReconLoss, SingleTokenPairOfZeroLogits) {
  Tape t;
  const std::int32_t target[] = {0};
  const Real weight[] = {1};
  EXPECT_NEAR(t.value(t.softmax_cross_entropy(t.constant(Array::row({0, 0})), target, weight)).item(), std::log(2.0),
              1e-15);
}

TEST(ReconLoss, ConfidentCorrectLogitsApproachZero) {
  Tape t;
  const Batch b = two_rows();
  Array step0(2, 6);
  step0(0, 4) = 200;
  step0(1, 5) = 200;
  Array step1(2, 6);
  step1(0, 2) = 200;
  step1(1, 2) = 200;
  std::vector<NodeId> logits{t.constant(step0), t.constant(step1)};
  EXPECT_LT(t.value(recon_loss(t, logits, b).sum).item(), 1e-80);
}

TEST(ReconLoss, MaskedPositionsIgnored) {
  Tape t;
  const std::vector<std::vector<TokenId>> rows{{1, 4, 4, 2}, {1, 2}};
  const Batch b = corpus::make_batch(rows);
  std::vector<NodeId> logits{t.constant(Array(2, 6)), t.constant(Array(2, 6)), t.constant(Array(2, 6))};
  const auto r = recon_loss(t, logits, b);
  EXPECT_EQ(r.tokens, 4u);
  EXPECT_NEAR(t.value(r.sum).item(), 4 * std::log(6.0), 1e-12);
  std::vector<NodeId> wrong{logits[0]};
  EXPECT_THROW(recon_loss(t, wrong, b), ShapeError);
}

TEST(KlLoss, PriorGivesZero) {
  Tape t;
  const auto kl = kl_loss(t, {t.constant(Array(3, 4)), t.constant(Array(3, 4))});
  EXPECT_EQ(t.value(kl.mean).item(), 0.0);
}

TEST(KlLoss, UnitMeanHandValue) {
  Tape t;
  const auto kl = kl_loss(t, {t.constant(Array::row({1, 1})), t.constant(Array(1, 2))});
  EXPECT_DOUBLE_EQ(t.value(kl.mean).item(), 1.0);
}

TEST(KlLoss, LogTwoVarianceAgreesWithMonteCarlo) {
  Tape t;
  const double lv = std::log(2.0);
  const auto kl = kl_loss(t, {t.constant(Array::scalar(0)), t.constant(Array::scalar(lv))});
  const double closed = t.value(kl.mean).item();
  EXPECT_NEAR(closed, 0.5 * (2 - 1 - lv), 1e-12);
  EXPECT_NEAR(closed, 0.1534, 1e-4);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const double sigma = std::sqrt(2.0);
  const int draws = 200000;
  double sum = 0;
  double sq = 0;
  for (int i = 0; i < draws; ++i) {
    const double e = n01(rng);
    const double z = sigma * e;
    const double f = (-0.5 * lv - 0.5 * e * e) - (-0.5 * z * z);
    sum += f;
    sq += f * f;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  EXPECT_LT(std::abs(mean - closed), 3 * se);
}

TEST(MuForcing, IdenticalRowsGiveBeta) {
  EXPECT_EQ(mu_forcing_value(from_rows(3, 2, {0.5, -1, 0.5, -1, 0.5, -1}), 2.0), 2.0);
}

TEST(MuForcing, HandCaseOnePointFive) {
  EXPECT_NEAR(mu_forcing_value(from_rows(2, 1, {1, -1}), 2.0), 1.5, 1e-12);
}

TEST(MuForcing, HingeInactiveWhenSpreadExceedsBeta) {
  Tape t;
  const auto mf = mu_forcing_loss(t, t.constant(from_rows(2, 1, {3, -3})), 2.0);
  EXPECT_DOUBLE_EQ(t.value(mf.variance_term).item(), 4.5);
  EXPECT_EQ(t.value(mf.loss).item(), 0.0);
}

TEST(MuForcing, NeedsTwoRows) {
  Tape t;
  EXPECT_THROW(mu_forcing_loss(t, t.constant(Array::row({1, 2})), 2.0), Error);
}

TEST(MuForcing, PropertiesOnRandomBatches) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0, 0.8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    const std::size_t k = 1 + static_cast<std::size_t>(trial % 4);
    Array mu(n, k);
    for (auto& v : mu.data()) v = d(rng);
    const double beta = 0.5 + 0.1 * trial;
    const double base = mu_forcing_value(mu, beta);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, beta);

    Array shifted = mu;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < k; ++c) shifted(r, c) += 3.25 * static_cast<Real>(c + 1);
    }
    EXPECT_NEAR(mu_forcing_value(shifted, beta), base, 1e-12);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Array permuted(n, k);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < k; ++c) permuted(r, c) = mu(perm[r], c);
    }
    EXPECT_NEAR(mu_forcing_value(permuted, beta), base, 1e-12);
  }
}

TEST(KlAnneal, LinearSchedule) {
  EXPECT_EQ(kl_anneal_weight(0, 10000), 0.0);
  EXPECT_EQ(kl_anneal_weight(5000, 10000), 0.5);
  EXPECT_EQ(kl_anneal_weight(10000, 10000), 1.0);
  EXPECT_EQ(kl_anneal_weight(20000, 10000), 1.0);
  EXPECT_EQ(kl_anneal_weight(7, 0), 1.0);
}

TEST(KlAnneal, SigmoidIsMonotone) {
  double prev = -1;
  for (std::size_t s = 0; s <= 1000; s += 10) {
    const double w = kl_anneal_weight(s, 1000, AnnealShape::kSigmoid);
    EXPECT_GE(w, prev);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    prev = w;
  }
  EXPECT_NEAR(kl_anneal_weight(500, 1000, AnnealShape::kSigmoid), 0.5, 1e-12);
}

KlTerms kl_from_per_dim(Tape& t, const Array& per_dim) {
  KlTerms k;
  k.per_dim = t.constant(per_dim);
  k.per_example = t.reduce_sum(k.per_dim, ad::Axis::kCols);
  k.mean = t.reduce_mean(k.per_example);
  k.rows = per_dim.rows();
  return k;
}

TEST(FreeBits, PerDimensionReserve) {
  Tape t;
  RegularizerConfig cfg;
  cfg.free_bits_per_dim = 0.0125;
  const auto kl = kl_from_per_dim(t, Array::row({0.01, 0.02}));
  EXPECT_NEAR(t.value(apply_free_bits(t, kl, cfg)).item(), 0.0325, 1e-15);
}

TEST(FreeBits, TotalReserve) {
  Tape t;
  RegularizerConfig cfg;
  cfg.free_bits_total = 0.2;
  const auto kl = kl_from_per_dim(t, Array::row({0.04, 0.06}));
  EXPECT_NEAR(t.value(apply_free_bits(t, kl, cfg)).item(), 0.2, 1e-15);
}

TEST(FreeBits, InactiveWhenAboveReserve) {
  Tape t;
  RegularizerConfig cfg;
  cfg.free_bits_per_dim = 0.0125;
  const auto kl = kl_from_per_dim(t, from_rows(2, 2, {0.5, 0.25, 0.75, 1.0}));
  EXPECT_NEAR(t.value(apply_free_bits(t, kl, cfg)).item(), t.value(kl.mean).item(), 1e-15);
  cfg.free_bits_total = 0.1;
  EXPECT_THROW(apply_free_bits(t, kl, cfg), ConfigError);
}

model::Params bow_params(std::size_t k, std::size_t h, std::size_t v) {
  model::Params p;
  p.add("bow.hidden.w", Array(k, h, 0.1));
  p.add("bow.hidden.b", Array(1, h));
  p.add("bow.out.w", Array(h, v));
  p.add("bow.out.b", Array(1, v));
  return p;
}

TEST(BowLoss, UniformLogits) {
  Tape t;
  const auto params = bow_params(2, 3, 7);
  const model::BoundParams p(t, params, false);
  const std::vector<std::vector<TokenId>> rows{{1, 4, 5, 6, 2}, {1, 4, 2}};
  const Batch b = corpus::make_batch(rows);
  const NodeId z = t.constant(Array(2, 2, 0.3));
  EXPECT_NEAR(t.value(bow_loss(t, p, z, b)).item(), 4 * std::log(7.0), 1e-12);
}

TEST(BowLoss, MarginOnSingleToken) {
  Tape t;
  auto params = bow_params(2, 3, 6);
  const double m = 3.0;
  params.at("bow.out.b")(0, 4) = m;
  const model::BoundParams p(t, params, false);
  const std::vector<std::vector<TokenId>> rows{{1, 4, 2}, {1, 4, 2}};
  const Batch b = corpus::make_batch(rows);
  const NodeId z = t.constant(Array(2, 2));
  const double direct = -std::log(std::exp(m) / (std::exp(m) + 5.0));
  EXPECT_NEAR(t.value(bow_loss(t, p, z, b)).item(), 2 * direct, 1e-12);

  params.at("bow.out.b")(0, 4) = 60;
  Tape t2;
  const model::BoundParams p2(t2, params, false);
  EXPECT_LT(t2.value(bow_loss(t2, p2, t2.constant(Array(2, 2)), b)).item(), 1e-20);
}

TEST(BowLoss, MissingHeadRejected) {
  Tape t;
  model::Params params;
  params.add("embedding", Array(6, 2));
  const model::BoundParams p(t, params, false);
  const Batch b = two_rows();
  EXPECT_THROW(bow_loss(t, p, t.constant(Array(2, 2)), b), Error);
}

struct Toy {
  Tape t;
  Batch batch = two_rows();
  LossComponents parts;
  Toy(const Array& mu, const Array& logvar) {
    std::vector<NodeId> logits{t.constant(Array(2, 6)), t.constant(Array(2, 6))};
    parts.recon = recon_loss(t, logits, batch);
    const model::PosteriorNodes post{t.leaf(mu), t.constant(logvar)};
    parts.kl = kl_loss(t, post);
    parts.mu = post.mu;
    parts.batch = &batch;
  }
};

TEST(TotalLoss, VanillaIsReconPlusKl) {
  Toy toy(from_rows(2, 2, {1, 0, 0, 1}), Array(2, 2));
  RegularizerConfig cfg;
  const auto total = total_loss(toy.t, toy.parts, cfg, 0);
  const double recon = 4 * std::log(6.0) / 2;
  EXPECT_NEAR(total.breakdown.total, recon + 0.5, 1e-12);
  EXPECT_NEAR(total.breakdown.recon, recon, 1e-12);
  EXPECT_NEAR(total.breakdown.kl, 0.5, 1e-12);
  EXPECT_EQ(total.breakdown.mu_reg, 0.0);
}

TEST(TotalLoss, MuForcingWithEqualRowsAddsBeta) {
  Toy toy(from_rows(2, 2, {0.3, 0.1, 0.3, 0.1}), Array(2, 2));
  RegularizerConfig vanilla;
  RegularizerConfig forced;
  forced.beta = 2.0;
  const double a = total_loss(toy.t, toy.parts, vanilla, 0).breakdown.total;
  const double b = total_loss(toy.t, toy.parts, forced, 0).breakdown.total;
  EXPECT_DOUBLE_EQ(b - a, 2.0);
}

TEST(TotalLoss, AnnealingAtStepZeroDropsKlButReportsIt) {
  Toy toy(from_rows(2, 2, {1, 0, 0, 1}), Array(2, 2));
  RegularizerConfig cfg;
  cfg.kl_anneal_steps = 10000;
  const auto total = total_loss(toy.t, toy.parts, cfg, 0);
  EXPECT_NEAR(total.breakdown.total, 4 * std::log(6.0) / 2, 1e-12);
  EXPECT_NEAR(total.breakdown.kl, 0.5, 1e-12);
  EXPECT_EQ(total.breakdown.kl_weight, 0.0);
}

TEST(TotalLoss, LedgerIdentityHolds) {
  Toy toy(from_rows(2, 2, {0.2, 0.1, -0.1, 0.4}), from_rows(2, 2, {-0.3, 0.2, 0.1, -0.5}));
  RegularizerConfig cfg;
  cfg.beta = 1.5;
  cfg.kl_lambda = 0.7;
  cfg.kl_anneal_steps = 100;
  cfg.free_bits_total = 0.05;
  const auto b = total_loss(toy.t, toy.parts, cfg, 40).breakdown;
  EXPECT_NEAR(b.total, b.recon + b.kl_weight * b.kl_effective + b.mu_reg, 1e-12);
  EXPECT_NEAR(b.kl_weight, 0.7 * 0.4, 1e-15);
  EXPECT_GE(b.mu_reg, 0.0);
  EXPECT_GE(b.kl, 0.0);
}

TEST(TotalLoss, RejectsMixedBatches) {
  Toy toy(from_rows(2, 2, {1, 0, 0, 1}), Array(2, 2));
  Batch other = two_rows();
  toy.parts.batch = &other;
  EXPECT_THROW(total_loss(toy.t, toy.parts, {}, 0), Error);
}

TEST(TotalLoss, MeanReducedGradientLeavesOnlyBatchMeanTerm) {
  // With the hinge active, d/dmu_n of (mean KL + L_mu) is mean(mu) / N.
  Toy toy(from_rows(3, 2, {0.1, 0.2, 0.1001, 0.2, 0.1, 0.1999}), Array(3, 2));
  RegularizerConfig cfg;
  cfg.beta = 2.0;
  const NodeId kl_mu = toy.t.add(toy.parts.kl.mean, mu_forcing_loss(toy.t, toy.parts.mu, cfg.beta).loss);
  toy.t.backward(kl_mu);
  const Array g = toy.t.grad(toy.parts.mu);
  const Array& mu = toy.t.value(toy.parts.mu);
  for (std::size_t c = 0; c < 2; ++c) {
    const double mean = (mu(0, c) + mu(1, c) + mu(2, c)) / 3;
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(g(r, c), mean / 3, 1e-15);
  }
}

}  // namespace
}  // namespace muforge::objectives
