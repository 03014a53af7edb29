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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "muforge/evaluation.hpp"
#include "muforge/latent.hpp"
#include "muforge/model.hpp"
#include "muforge/synthetic.hpp"
#include "muforge/tape.hpp"
#include "muforge/trainer.hpp"

namespace {

using namespace muforge;

RunConfig bench_config(std::size_t hidden) {
  RunConfig c;
  c.data.train = "synthetic";
  c.data.max_len = 12;
  c.model.embed_dim = hidden / 2;
  c.model.enc_hidden = hidden;
  c.model.dec_hidden = hidden;
  c.model.latent_dim = 16;
  c.trainer.batch_size = 32;
  c.trainer.log_timing = false;
  return c;
}

std::vector<corpus::Sentence> reviews(std::size_t n) {
  std::vector<corpus::Sentence> out;
  for (auto& r : corpus::synthesize_reviews(n, 7)) out.push_back(std::move(r.tokens));
  return out;
}

void BM_TrainStep(benchmark::State& state) {
  const auto cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  train::Trainer t(cfg, train::prepare_dataset(reviews(1200), {}, cfg));
  for (auto _ : state) benchmark::DoNotOptimize(t.step().loss.total);
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  Array a(32, n);
  Array b(n, 4 * n);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = d(rng);
  for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = d(rng);
  for (auto _ : state) {
    ad::Tape t;
    const auto x = t.leaf(a);
    const auto w = t.leaf(b);
    const auto y = t.reduce_sum(t.matmul(x, w));
    t.backward(y);
    benchmark::DoNotOptimize(t.grad(w).data());
  }
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_Generate(benchmark::State& state) {
  const auto cfg = bench_config(64);
  const auto data = train::prepare_dataset(reviews(1200), {}, cfg);
  const auto model_cfg = cfg.resolved_model(data.vocab.size());
  const auto params = model::init_params(model_cfg, 3);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto s = eval::sample_from_prior(params, model_cfg, data.vocab, 32, 12, model::DecodeMode::argmax(), ++seed);
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

void BM_SelfBleu(benchmark::State& state) {
  const auto sents = reviews(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::self_bleu(sents, 4));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SelfBleu)->Arg(100)->Arg(300)->Arg(1000)->Complexity()->Unit(benchmark::kMillisecond);

void BM_Bleu(benchmark::State& state) {
  const auto cands = reviews(300);
  const auto refs = reviews(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::bleu(cands, refs, 5));
}
BENCHMARK(BM_Bleu)->Arg(300)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_TransferExact(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  Array a(1, 16);
  Array p(1, 16);
  Array q(1, 16);
  for (std::size_t j = 0; j < 16; ++j) {
    a(0, j) = d(rng);
    p(0, j) = d(rng);
    q(0, j) = d(rng);
  }
  const auto za = latent::LatentPoint::from(a, latent::Provenance::kEncoded);
  const auto zp = latent::LatentPoint::from(p, latent::Provenance::kEncoded);
  const auto zq = latent::LatentPoint::from(q, latent::Provenance::kEncoded);
  for (auto _ : state) benchmark::DoNotOptimize(latent::transfer_vector(za, zp, zq).z.data());
}
BENCHMARK(BM_TransferExact);

}  // namespace

BENCHMARK_MAIN();
