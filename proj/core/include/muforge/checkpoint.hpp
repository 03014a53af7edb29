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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "muforge/model.hpp"
#include "muforge/optim.hpp"
#include "muforge/run_config.hpp"

namespace muforge::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to continue a run bit-exactly. The run configuration is
/// stored as its echoed text; its FNV-1a digest goes in the file header.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_text;
  std::uint64_t vocab_size = 0;
  std::uint64_t vocab_hash = 0;
  std::uint64_t step = 0;
  std::string rng_state;
  double best_metric = 0;
  bool has_best = false;
  model::Params params;
  OptimState optim;

  RunConfig run_config() const;
  model::ModelConfig model_config() const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::uint64_t fnv1a(std::string_view bytes);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

/// Writes to a temporary sibling, then renames.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Rejects a wrong magic, version, digest or (when given) vocabulary hash.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

}  // namespace muforge::train
