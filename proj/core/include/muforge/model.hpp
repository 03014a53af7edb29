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
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "muforge/array.hpp"
#include "muforge/corpus.hpp"
#include "muforge/tape.hpp"

namespace muforge::model {

using Rng = std::mt19937_64;
using corpus::TokenId;

enum class CellKind { kLstm, kGru };
// How z conditions the decoder: initial state only, or initial state plus a
// copy concatenated to every input step.
enum class LatentWiring { kInitOnly, kInitAndStep };

std::string to_string(CellKind c);
std::string to_string(LatentWiring w);
CellKind parse_cell(std::string_view s);
LatentWiring parse_wiring(std::string_view s);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t enc_hidden = 128;
  std::size_t dec_hidden = 128;
  std::size_t latent_dim = 16;
  bool layer_norm = false;
  CellKind cell = CellKind::kLstm;
  LatentWiring wiring = LatentWiring::kInitAndStep;
  // Hidden width of the bag-of-words head; 0 means no head.
  std::size_t bow_hidden = 0;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Named parameter arrays in a fixed registration order.
class Params {
 public:
  struct Entry {
    std::string name;
    Array value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void add(std::string name, Array value);
  bool contains(std::string_view name) const;
  Array& at(std::string_view name);
  const Array& at(std::string_view name) const;
  std::size_t index(std::string_view name) const;

  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  friend bool operator==(const Params&, const Params&) = default;

 private:
  std::vector<Entry> entries_;
};

/// Uniform Glorot bound sqrt(6 / (fan_in + fan_out)).
Real glorot_bound(std::size_t fan_in, std::size_t fan_out);

Params init_params(const ModelConfig& config, std::uint64_t seed);

/// Tape handles for every parameter, in Params order.
class BoundParams {
 public:
  BoundParams(ad::Tape& tape, const Params& params, bool trainable);
  ad::NodeId operator[](std::string_view name) const;
  const std::vector<ad::NodeId>& nodes() const noexcept { return nodes_; }

 private:
  const Params* params_;
  std::vector<ad::NodeId> nodes_;
};

struct PosteriorNodes {
  ad::NodeId mu;
  ad::NodeId logvar;
};

struct GaussianPosterior {
  Array mu;      // N x K
  Array logvar;  // N x K, clamped to [-8, 8]
};

inline constexpr Real kLogvarMin = -8;
inline constexpr Real kLogvarMax = 8;

PosteriorNodes encode(ad::Tape& tape, const BoundParams& p, const ModelConfig& config, const corpus::Batch& batch);
GaussianPosterior encode(const Params& params, const ModelConfig& config, const corpus::Batch& batch);

Array standard_normal(std::size_t rows, std::size_t cols, Rng& rng);

/// z = mu + exp(logvar / 2) * eps; eps is a constant on the tape.
ad::NodeId reparameterize(ad::Tape& tape, const PosteriorNodes& post, const Array& eps);
ad::NodeId reparameterize(ad::Tape& tape, const PosteriorNodes& post, Rng& rng);
Array reparameterize(const GaussianPosterior& post, std::uint64_t seed);

/// Per-step logits for targets 1..T-1: logits[t] is N x V and predicts token t+1.
std::vector<ad::NodeId> decode_teacher_forced(ad::Tape& tape, const BoundParams& p, const ModelConfig& config,
                                              ad::NodeId z, const corpus::Batch& batch, double word_dropout,
                                              Rng& rng);

struct DecodeMode {
  bool greedy = true;
  double temperature = 1.0;

  static DecodeMode argmax() { return {}; }
  static DecodeMode sample(double temperature) { return {false, temperature}; }
};

/// Autoregressive decoding from BOS for every row of z. Each returned row is
/// BOS ... EOS with at most `max_len` ids; EOS is forced at the length limit.
/// Greedy decoding breaks ties toward the lowest id.
std::vector<std::vector<TokenId>> generate(const Params& params, const ModelConfig& config, const Array& z,
                                           std::size_t max_len, DecodeMode mode, Rng& rng);
std::vector<std::vector<TokenId>> generate(const Params& params, const ModelConfig& config, const Array& z,
                                           std::size_t max_len, DecodeMode mode, std::uint64_t seed);

}  // namespace muforge::model
