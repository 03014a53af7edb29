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
#include <string>

#include "muforge/model.hpp"
#include "muforge/objectives.hpp"

namespace muforge {

struct DataConfig {
  std::filesystem::path train;
  std::filesystem::path test;  // empty: hold out a fraction of `train`
  double holdout = 0.1;
  std::size_t min_freq = 1;
  std::size_t max_vocab = 10000;
  std::size_t max_len = 32;  // including BOS and EOS

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct TrainerConfig {
  double lr = 0.001;
  std::size_t batch_size = 64;
  std::size_t steps = 3000;
  double clip = 5.0;
  std::size_t eval_every = 200;
  std::size_t eval_mc_samples = 1;
  // Off: the ms column of the step log is written as 0 so logs are
  // byte-reproducible.
  bool log_timing = true;

  friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

struct Seeds {
  std::uint64_t init = 1;
  std::uint64_t data = 2;
  std::uint64_t sample = 3;

  friend bool operator==(const Seeds&, const Seeds&) = default;
};

struct EvalConfig {
  std::size_t samples = 300;
  std::size_t bleu_refs = 300;
  std::size_t hist_bins = 40;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct RunConfig {
  DataConfig data;
  model::ModelConfig model;  // vocab_size and bow_hidden are resolved at train time
  std::size_t bow_hidden = 64;
  objectives::RegularizerConfig reg{.beta = 2.0};
  double fb_total_bits = 0;  // raw config value; reg.free_bits_total holds nats
  TrainerConfig trainer;
  Seeds seeds;
  EvalConfig eval;
  std::filesystem::path output_dir = "runs/default";

  /// Model config with the vocabulary size filled in and the BOW head sized
  /// only when the BOW loss is active.
  model::ModelConfig resolved_model(std::size_t vocab_size) const;
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Flat `key = value` lines under `[section]` headers; `;` and `#` start
/// comments. Unknown sections or keys, malformed values and a missing
/// `[data] train` are ConfigErrors. Relative paths resolve against the
/// config file's directory.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                            bool check_paths = true);

/// Every key with its resolved value; parse_config_text(echo) == config.
std::string echo_config(const RunConfig& config);

/// Shortest round-trip decimal form.
std::string format_real(double v);

}  // namespace muforge
