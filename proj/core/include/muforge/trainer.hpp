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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "muforge/checkpoint.hpp"
#include "muforge/corpus.hpp"
#include "muforge/evaluation.hpp"
#include "muforge/model.hpp"
#include "muforge/objectives.hpp"
#include "muforge/optim.hpp"
#include "muforge/run_config.hpp"

namespace muforge::train {

struct Dataset {
  corpus::Vocabulary vocab;
  std::vector<corpus::Sentence> train_sentences;
  std::vector<corpus::Sentence> test_sentences;
  std::vector<std::vector<corpus::TokenId>> train;
  std::vector<std::vector<corpus::TokenId>> test;

  std::vector<corpus::Batch> test_batches(std::size_t batch_size) const;
};

/// Drops sentences with more than max_len - 2 tokens, holds out the tail of
/// a seeded shuffle when no test file is given, and builds the vocabulary on
/// the training split.
Dataset prepare_dataset(std::vector<corpus::Sentence> train, std::vector<corpus::Sentence> test,
                        const RunConfig& config);
Dataset prepare_dataset(const RunConfig& config);

struct LogRecord {
  std::size_t step = 0;  // 1-based count of completed optimizer steps
  objectives::LossBreakdown loss;
  double grad_norm = 0;          // before clipping
  double grad_norm_clipped = 0;  // after clipping
  double mu_mean = 0;            // mean of all batch mu entries
  double ms = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

struct EvalRecord {
  std::size_t step = 0;
  eval::HeldOut held_out;
  double total() const { return held_out.recon_sum + held_out.kl; }

  static std::string csv_header();
  std::string csv_row() const;
};

class Trainer {
 public:
  Trainer(RunConfig config, Dataset data);
  /// Continues from a checkpoint; the vocabulary hash must match.
  Trainer(RunConfig config, Dataset data, const Checkpoint& from);

  /// One optimizer step. A non-finite loss or gradient throws NumericError
  /// and leaves the state as it was before the step.
  LogRecord step();
  EvalRecord evaluate() const;

  Checkpoint checkpoint() const;

  std::size_t global_step() const noexcept { return step_; }
  const model::Params& params() const noexcept { return params_; }
  const model::ModelConfig& model_config() const noexcept { return model_; }
  const RunConfig& config() const noexcept { return config_; }
  const Dataset& data() const noexcept { return data_; }

  // Best held-out total seen so far, kept for best-checkpoint selection.
  std::optional<double> best_metric;

 private:
  const corpus::Batch& next_batch();

  RunConfig config_;
  Dataset data_;
  model::ModelConfig model_;
  model::Params params_;
  OptimState optim_;
  model::Rng rng_;
  std::size_t step_ = 0;
  std::size_t epoch_ = static_cast<std::size_t>(-1);
  std::vector<corpus::Batch> epoch_batches_;
  std::vector<corpus::Batch> test_batches_;
};

struct TrainOptions {
  bool resume = false;                  // continue from <output_dir>/latest.ckpt
  std::optional<std::size_t> stop_at;   // halt early (latest.ckpt is still written)
  std::function<void(const LogRecord&)> on_step;
  std::function<void(const EvalRecord&)> on_eval;
};

struct TrainSummary {
  std::size_t steps = 0;
  std::optional<EvalRecord> last_eval;
  std::filesystem::path latest;
  std::filesystem::path best;
};

/// Writes config.ini, vocab.txt, log.csv, eval.csv, latest.ckpt and best.ckpt
/// under config.output_dir. On a non-finite loss, emergency.ckpt holds the
/// last good state and the NumericError is rethrown.
TrainSummary run_training(const RunConfig& config, const TrainOptions& options = {});
TrainSummary run_training(const RunConfig& config, Dataset data, const TrainOptions& options = {});

struct FullEval {
  eval::EvalReport report;
  eval::MuHistogram histogram;
  std::vector<corpus::Sentence> samples;
};

/// Held-out metrics on the test split, BLEU-4/5 of greedy prior samples
/// against the first `bleu_refs` test sentences, Self-BLEU-4/5 of the
/// samples and the mu histogram of the test split.
FullEval full_evaluation(const RunConfig& config, const Dataset& data, const model::Params& params,
                         const model::ModelConfig& model_config);

}  // namespace muforge::train
