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

#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "muforge/error.hpp"
#include "muforge/latent.hpp"
#include "muforge/synthetic.hpp"
#include "muforge/trainer.hpp"

namespace muforge::cli {

namespace fs = std::filesystem;

namespace {

struct LoadedRun {
  RunConfig config;
  train::Dataset data;
  train::Checkpoint ckpt;
  model::ModelConfig model;
};

LoadedRun load_run(const fs::path& config_path, const fs::path& checkpoint) {
  LoadedRun r{parse_config(config_path), {}, {}, {}};
  r.data = train::prepare_dataset(r.config);
  const fs::path ckpt = checkpoint.empty() ? r.config.output_dir / "latest.ckpt" : checkpoint;
  if (!fs::exists(ckpt)) throw IoError("no such checkpoint " + ckpt.string());
  r.ckpt = train::load_checkpoint(ckpt, r.data.vocab.hash());
  r.model = r.ckpt.model_config();
  return r;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// A path to an existing file yields its non-empty lines; anything else is
// taken as literal sentence text.
std::vector<corpus::Sentence> sentences_from(const std::string& arg) {
  std::vector<corpus::Sentence> out;
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) {
    for (const auto& line : corpus::read_lines(arg)) {
      auto toks = corpus::tokenize(line);
      if (!toks.empty()) out.push_back(std::move(toks));
    }
    if (out.empty()) throw ConfigError("no sentences in " + arg);
  } else {
    out.push_back(corpus::tokenize(arg));
  }
  return out;
}

corpus::Sentence single_sentence(const std::string& arg, const char* flag) {
  auto all = sentences_from(arg);
  if (all.size() != 1) throw ConfigError(std::string(flag) + " expects a single sentence");
  return all.front();
}

std::size_t worker_cap() {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MUFORGE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v < 1) throw ConfigError("MUFORGE_THREADS must be >= 1");
      cap = static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("MUFORGE_THREADS is not a number: ") + env);
    }
  }
  return cap;
}

void write_eval(const fs::path& dir, const train::FullEval& ev) {
  write_file(dir / "eval_report.json", ev.report.to_json_line() + "\n");
  write_file(dir / "eval_report.csv", eval::EvalReport::csv_header() + "\n" + ev.report.to_csv_row() + "\n");
  write_file(dir / "mu_histogram.csv", ev.histogram.to_csv());
  write_file(dir / "mu_dims.csv", ev.histogram.dim_stats_csv());
}

}  // namespace

void run_train(const TrainArgs& args) {
  const RunConfig config = parse_config(args.config);
  train::TrainOptions opts;
  opts.resume = args.resume;
  if (args.stop_at > 0) opts.stop_at = args.stop_at;
  opts.on_eval = [](const train::EvalRecord& e) {
    std::cerr << "step " << e.step << "  recon " << e.held_out.recon_sum << "  per-token " << e.held_out.recon_per_token
              << "  kl " << e.held_out.kl << '\n';
  };
  const auto summary = train::run_training(config, opts);
  std::cout << "trained " << summary.steps << " steps; checkpoint " << summary.latest.string() << '\n';
}

void run_eval(const EvalArgs& args) {
  const LoadedRun r = load_run(args.config, args.checkpoint);
  const auto ev = train::full_evaluation(r.config, r.data, r.ckpt.params, r.model);
  write_eval(args.out.empty() ? r.config.output_dir : args.out, ev);
  std::cout << ev.report.to_json_line() << '\n';
}

void run_sample(const SampleArgs& args) {
  const LoadedRun r = load_run(args.config, args.checkpoint);
  if (args.count < 1) throw ConfigError("--count must be >= 1");
  const auto mode = args.temperature > 0 ? model::DecodeMode::sample(args.temperature) : model::DecodeMode::argmax();
  const auto samples =
      eval::sample_from_prior(r.ckpt.params, r.model, r.data.vocab, args.count, r.config.data.max_len, mode, args.seed);
  std::ostringstream os;
  for (const auto& s : samples) os << corpus::detokenize(s) << '\n';
  write_file(args.out.empty() ? r.config.output_dir / "samples.txt" : args.out, os.str());
}

void run_interpolate(const InterpolateArgs& args) {
  const LoadedRun r = load_run(args.config, args.checkpoint);
  const std::size_t max_len = r.config.data.max_len;
  const auto z1 = latent::encode_to_latent(r.ckpt.params, r.model, r.data.vocab, single_sentence(args.a, "--a"), max_len);
  const auto z2 = latent::encode_to_latent(r.ckpt.params, r.model, r.data.vocab, single_sentence(args.b, "--b"), max_len);
  const auto steps = latent::interpolate(r.ckpt.params, r.model, r.data.vocab, z1, z2, args.steps, max_len);
  write_file(args.out.empty() ? r.config.output_dir / "homotopy.tsv" : args.out, latent::homotopy_table(steps));
}

void run_transfer(const TransferArgs& args) {
  const LoadedRun r = load_run(args.config, args.checkpoint);
  const std::size_t max_len = r.config.data.max_len;
  auto enc = [&](const corpus::Sentence& s) {
    return latent::encode_to_latent(r.ckpt.params, r.model, r.data.vocab, s, max_len);
  };
  const auto z_p = enc(single_sentence(args.p, "--p"));
  const auto z_q = enc(single_sentence(args.q, "--q"));
  std::vector<std::pair<corpus::Sentence, corpus::Sentence>> rows;
  for (const auto& a : sentences_from(args.a)) {
    auto res = latent::attribute_transfer(r.ckpt.params, r.model, r.data.vocab, enc(a), z_p, z_q, max_len);
    rows.emplace_back(a, std::move(res.sentence));
  }
  write_file(args.out.empty() ? r.config.output_dir / "transfer.tsv" : args.out, latent::transfer_table(rows));
}

void run_sweep(const SweepArgs& args) {
  if (args.betas.empty()) throw ConfigError("--beta needs at least one value");
  const RunConfig base = parse_config(args.config);
  const train::Dataset data = train::prepare_dataset(base);

  std::vector<RunConfig> runs;
  for (const double b : args.betas) {
    RunConfig c = base;
    c.reg.beta = b;
    c.output_dir = base.output_dir / ("beta_" + format_real(b));
    c.validate();
    runs.push_back(std::move(c));
  }

  std::vector<std::optional<train::FullEval>> results(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::mutex next_mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        std::lock_guard lock(next_mu);
        if (next == runs.size()) return;
        i = next++;
      }
      try {
        train::run_training(runs[i], data);
        const auto ckpt = train::load_checkpoint(runs[i].output_dir / "latest.ckpt", data.vocab.hash());
        results[i] = train::full_evaluation(runs[i], data, ckpt.params, ckpt.model_config());
        write_eval(runs[i].output_dir, *results[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(worker_cap(), runs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::ostringstream os;
  os << "beta,rec,rec_per_token,kl,bleu4,bleu5,sleu4,sleu5\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = results[i]->report;
    os << format_real(runs[i].reg.beta) << ',' << format_real(r.recon_sum) << ',' << format_real(r.recon_per_token)
       << ',' << format_real(r.kl) << ',' << format_real(r.bleu.at(4)) << ',' << format_real(r.bleu.at(5)) << ','
       << format_real(r.self_bleu.at(4)) << ',' << format_real(r.self_bleu.at(5)) << '\n';
  }
  write_file(base.output_dir / "sweep.csv", os.str());
  std::cout << os.str();
}

void run_synth(const SynthArgs& args) {
  if (args.count < 1) throw ConfigError("--count must be >= 1");
  const auto reviews = corpus::synthesize_reviews(args.count, args.seed);
  std::ostringstream text;
  std::ostringstream labels;
  for (const auto& r : reviews) {
    text << corpus::detokenize(r.tokens) << '\n';
    labels << r.polarity << '\n';
  }
  write_file(args.out, text.str());
  if (!args.labels.empty()) write_file(args.labels, labels.str());
}

}  // namespace muforge::cli
