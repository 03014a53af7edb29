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

// Small run configurations shared by the trainer, checkpoint and latent tests.

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "muforge/run_config.hpp"
#include "muforge/synthetic.hpp"
#include "muforge/trainer.hpp"

namespace muforge::testing {

inline std::vector<corpus::Sentence> review_sentences(std::size_t count, std::uint64_t seed) {
  std::vector<corpus::Sentence> out;
  for (auto& r : corpus::synthesize_reviews(count, seed)) out.push_back(std::move(r.tokens));
  return out;
}

inline RunConfig tiny_config(const std::filesystem::path& out_dir) {
  RunConfig c;
  c.data.train = "unused.txt";
  c.data.max_len = 12;
  c.model.embed_dim = 6;
  c.model.enc_hidden = 8;
  c.model.dec_hidden = 8;
  c.model.latent_dim = 4;
  c.trainer.batch_size = 8;
  c.trainer.steps = 12;
  c.trainer.eval_every = 5;
  c.trainer.log_timing = false;
  c.eval.samples = 6;
  c.eval.bleu_refs = 10;
  c.eval.hist_bins = 10;
  c.output_dir = out_dir;
  return c;
}

inline train::Dataset tiny_dataset(const RunConfig& c) { return train::prepare_dataset(review_sentences(80, 5), {}, c); }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("muforge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace muforge::testing
