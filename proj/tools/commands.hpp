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
#include <vector>

namespace muforge::cli {

struct TrainArgs {
  std::filesystem::path config;
  bool resume = false;
  std::size_t stop_at = 0;  // 0: run to the configured step count
};

struct EvalArgs {
  std::filesystem::path config;
  std::filesystem::path checkpoint;  // default <output_dir>/latest.ckpt
  std::filesystem::path out;         // default <output_dir>
};

struct SampleArgs {
  std::filesystem::path config;
  std::filesystem::path checkpoint;
  std::filesystem::path out;  // default <output_dir>/samples.txt
  std::size_t count = 300;
  std::uint64_t seed = 0;
  double temperature = 0;  // 0: greedy
};

struct InterpolateArgs {
  std::filesystem::path config;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
  std::string a;
  std::string b;
  std::size_t steps = 5;
};

struct TransferArgs {
  std::filesystem::path config;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
  std::string a;
  std::string p;
  std::string q;
};

struct SweepArgs {
  std::filesystem::path config;
  std::vector<double> betas;
};

struct SynthArgs {
  std::filesystem::path out;
  std::size_t count = 2400;
  std::uint64_t seed = 1;
  std::filesystem::path labels;
};

void run_train(const TrainArgs& args);
void run_eval(const EvalArgs& args);
void run_sample(const SampleArgs& args);
void run_interpolate(const InterpolateArgs& args);
void run_transfer(const TransferArgs& args);
void run_sweep(const SweepArgs& args);
void run_synth(const SynthArgs& args);

}  // namespace muforge::cli
