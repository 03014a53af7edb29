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
#include <random>

#include <gtest/gtest.h>

#include "muforge/error.hpp"
#include "muforge/grad_check.hpp"
#include "muforge/model.hpp"
#include "muforge/objectives.hpp"

namespace muforge::model {
namespace {

using corpus::Batch;
using corpus::TokenId;

ModelConfig tiny(CellKind cell = CellKind::kLstm, bool layer_norm = false,
                 LatentWiring wiring = LatentWiring::kInitAndStep) {
  ModelConfig c;
  c.vocab_size = 10;
  c.embed_dim = 4;
  c.enc_hidden = 5;
  c.dec_hidden = 6;
  c.latent_dim = 3;
  c.cell = cell;
  c.layer_norm = layer_norm;
  c.wiring = wiring;
  return c;
}

Batch batch_of(std::vector<std::vector<TokenId>> rows, std::size_t steps = 0) {
  return corpus::make_batch(rows, steps);
}

TEST(Init, GlorotBoundForSquareFour) {
  EXPECT_NEAR(glorot_bound(4, 4), std::sqrt(6.0 / 8.0), 1e-15);
  EXPECT_NEAR(glorot_bound(4, 4), 0.866, 1e-3);
}

TEST(Init, SeedDeterminesParams) {
  const auto a = init_params(tiny(), 7);
  const auto b = init_params(tiny(), 7);
  const auto c = init_params(tiny(), 8);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
}

TEST(Init, BiasesStartAtZeroAndWeightsWithinBound) {
  const auto p = init_params(tiny(), 3);
  EXPECT_TRUE(p.at("latent.mu.b").mat().isZero());
  EXPECT_TRUE(p.at("latent.logvar.b").mat().isZero());
  const Array& w = p.at("latent.mu.w");
  EXPECT_LE(w.mat().cwiseAbs().maxCoeff(), glorot_bound(w.rows(), w.cols()));
  EXPECT_FALSE(p.contains("bow.hidden.w"));
  ModelConfig with_bow = tiny();
  with_bow.bow_hidden = 7;
  EXPECT_TRUE(init_params(with_bow, 3).contains("bow.out.w"));
}

TEST(Config, ValidationAndParsing) {
  ModelConfig c = tiny();
  c.vocab_size = 3;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_cell("gru"), CellKind::kGru);
  EXPECT_EQ(parse_wiring("init"), LatentWiring::kInitOnly);
  EXPECT_EQ(to_string(LatentWiring::kInitAndStep), "init+step");
  EXPECT_THROW(parse_cell("rnn"), ConfigError);
}

TEST(Encode, IdenticalSentencesGiveIdenticalRows) {
  const auto cfg = tiny();
  const auto p = init_params(cfg, 1);
  const auto post = encode(p, cfg, batch_of({{1, 4, 5, 2}, {1, 4, 5, 2}}));
  EXPECT_EQ(post.mu.mat().row(0), post.mu.mat().row(1));
  EXPECT_EQ(post.logvar.mat().row(0), post.logvar.mat().row(1));
}

TEST(Encode, PermutingRowsPermutesPosterior) {
  const auto cfg = tiny(CellKind::kGru, true);
  const auto p = init_params(cfg, 2);
  const auto a = encode(p, cfg, batch_of({{1, 4, 5, 2}, {1, 6, 2}, {1, 7, 8, 9, 2}}));
  const auto b = encode(p, cfg, batch_of({{1, 7, 8, 9, 2}, {1, 4, 5, 2}, {1, 6, 2}}));
  const int perm[] = {1, 2, 0};
  for (int r = 0; r < 3; ++r) {
    EXPECT_LT((a.mu.mat().row(r) - b.mu.mat().row(perm[r])).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Encode, PaddingDoesNotChangePosterior) {
  for (auto cell : {CellKind::kLstm, CellKind::kGru}) {
    for (bool ln : {false, true}) {
      const auto cfg = tiny(cell, ln);
      const auto p = init_params(cfg, 4);
      const auto alone = encode(p, cfg, batch_of({{1, 4, 5, 2}}));
      const auto padded = encode(p, cfg, batch_of({{1, 4, 5, 2}, {1, 6, 7, 8, 9, 6, 7, 2}}, 12));
      EXPECT_LT((alone.mu.mat().row(0) - padded.mu.mat().row(0)).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((alone.logvar.mat().row(0) - padded.logvar.mat().row(0)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Reparameterize, ZeroNoiseReturnsMean) {
  ad::Tape t;
  const PosteriorNodes post{t.constant(Array::row({0.5, -1})), t.constant(Array::row({0.3, 2}))};
  EXPECT_EQ(t.value(reparameterize(t, post, Array(1, 2))), Array::row({0.5, -1}));
}

TEST(Reparameterize, ClampedLogvarStaysNearMean) {
  ad::Tape t;
  const PosteriorNodes post{t.constant(Array::row({0.5})), t.constant(Array::row({kLogvarMin}))};
  const Array eps = Array::row({1.7});
  const double z = t.value(reparameterize(t, post, eps)).item();
  EXPECT_LT(std::abs(z - 0.5), 2e-2 * 1.7);
}

TEST(Reparameterize, MonteCarloMean) {
  const std::size_t n = 100000;
  GaussianPosterior post{Array(n, 2), Array(n, 2)};
  for (std::size_t r = 0; r < n; ++r) {
    post.mu(r, 0) = 0.7;
    post.mu(r, 1) = -1.2;
    post.logvar(r, 0) = std::log(0.25);
    post.logvar(r, 1) = 0;
  }
  const Array z = reparameterize(post, 11);
  const auto mean = z.mat().colwise().mean();
  EXPECT_LT(std::abs(mean(0) - 0.7), 3 * 0.5 / std::sqrt(double(n)));
  EXPECT_LT(std::abs(mean(1) + 1.2), 3 * 1.0 / std::sqrt(double(n)));
}

std::vector<Array> logits_of(const Params& p, const ModelConfig& cfg, const Array& z, const Batch& b, double wd,
                             std::uint64_t seed) {
  ad::Tape t;
  const BoundParams bp(t, p, false);
  Rng rng(seed);
  std::vector<Array> out;
  for (auto n : decode_teacher_forced(t, bp, cfg, t.constant(z), b, wd, rng)) out.push_back(t.value(n));
  return out;
}

TEST(Decode, DeterministicWithoutDropout) {
  const auto cfg = tiny();
  const auto p = init_params(cfg, 5);
  const Batch b = batch_of({{1, 4, 5, 2}, {1, 6, 2}});
  const Array z = Array::from(2, 3, std::vector<Real>{0.1, -0.2, 0.3, 0.5, 0.0, -0.4});
  const auto a = logits_of(p, cfg, z, b, 0.0, 1);
  const auto c = logits_of(p, cfg, z, b, 0.0, 99);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a[0].shape(), c[0].shape());
  EXPECT_EQ(a[0].cols(), 10u);
}

TEST(Decode, FullDropoutFeedsOnlyUnk) {
  const auto cfg = tiny();
  const auto p = init_params(cfg, 5);
  const Batch b = batch_of({{1, 4, 5, 2}, {1, 6, 2}});
  Batch unk = b;
  std::fill(unk.ids.begin(), unk.ids.end(), corpus::Vocabulary::kUnk);
  const Array z(2, 3, 0.2);
  EXPECT_EQ(logits_of(p, cfg, z, b, 1.0, 3), logits_of(p, cfg, z, unk, 0.0, 3));
}

TEST(Decode, LatentIsWiredIn) {
  for (auto wiring : {LatentWiring::kInitOnly, LatentWiring::kInitAndStep}) {
    const auto cfg = tiny(CellKind::kLstm, false, wiring);
    const auto p = init_params(cfg, 6);
    const Batch b = batch_of({{1, 4, 5, 2}});
    Array z = Array::row({0.1, 0.2, 0.3});
    const auto a = logits_of(p, cfg, z, b, 0.0, 0);
    z(0, 1) += 1e-3;
    const auto c = logits_of(p, cfg, z, b, 0.0, 0);
    EXPECT_GT((a[2].mat() - c[2].mat()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Generate, GreedyIsDeterministicAndTerminates) {
  const auto cfg = tiny();
  const auto p = init_params(cfg, 8);
  const Array z = Array::from(3, 3, std::vector<Real>{0, 0, 0, 1, -1, 0.5, -2, 0.3, 1});
  const auto a = generate(p, cfg, z, 7, DecodeMode::argmax(), std::uint64_t{1});
  const auto b = generate(p, cfg, z, 7, DecodeMode::argmax(), std::uint64_t{2});
  EXPECT_EQ(a, b);
  for (const auto& row : a) {
    ASSERT_GE(row.size(), 2u);
    EXPECT_LE(row.size(), 7u);
    EXPECT_EQ(row.front(), corpus::Vocabulary::kBos);
    EXPECT_EQ(row.back(), corpus::Vocabulary::kEos);
  }
}

TEST(Generate, LowTemperatureMatchesGreedy) {
  const auto cfg = tiny();
  auto p = init_params(cfg, 9);
  p.at("out.w").mat() *= 20;
  const Array z = Array::from(2, 3, std::vector<Real>{0.3, -0.1, 0.2, -0.5, 0.6, 0.1});
  const auto greedy = generate(p, cfg, z, 8, DecodeMode::argmax(), std::uint64_t{0});
  const auto cold = generate(p, cfg, z, 8, DecodeMode::sample(1e-4), std::uint64_t{42});
  EXPECT_EQ(greedy, cold);
  EXPECT_THROW(generate(p, cfg, z, 8, DecodeMode::sample(0.0), std::uint64_t{0}), Error);
  EXPECT_THROW(generate(p, cfg, z, 1, DecodeMode::argmax(), std::uint64_t{0}), Error);
}

TEST(Gradients, FullModelMatchesFiniteDifferences) {
  for (auto cell : {CellKind::kLstm, CellKind::kGru}) {
    const auto cfg = tiny(cell, cell == CellKind::kGru);
    const auto params = init_params(cfg, 10);
    const Batch b = batch_of({{1, 4, 5, 6, 2}, {1, 7, 2}});
    ad::Tape t;
    const BoundParams p(t, params, true);
    const auto post = encode(t, p, cfg, b);
    const Array eps = Array::from(2, 3, std::vector<Real>{0.3, -0.7, 1.1, -0.2, 0.5, 0.9});
    const auto z = reparameterize(t, post, eps);
    Rng rng(0);
    const auto logits = decode_teacher_forced(t, p, cfg, z, b, 0.0, rng);
    objectives::LossComponents parts;
    parts.recon = objectives::recon_loss(t, logits, b);
    parts.kl = objectives::kl_loss(t, post);
    parts.mu = post.mu;
    parts.batch = &b;
    objectives::RegularizerConfig reg;
    reg.beta = 2.0;
    const auto total = objectives::total_loss(t, parts, reg, 0);
    const auto r = ad::grad_check(t, total.total, p.nodes());
    EXPECT_LT(r.max_rel_error, 1e-4) << to_string(cell);
    EXPECT_GT(r.checked, 100u);
  }
}

}  // namespace
}  // namespace muforge::model
