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

#include "muforge/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "muforge/error.hpp"

namespace muforge::train {

namespace fs = std::filesystem;
using corpus::Batch;
using corpus::Sentence;

std::vector<Batch> Dataset::test_batches(std::size_t batch_size) const {
  if (test.empty()) throw Error("dataset: empty test split");
  return corpus::make_batches(test, batch_size, 0, corpus::BatchMode::kEval);
}

Dataset prepare_dataset(std::vector<Sentence> train, std::vector<Sentence> test, const RunConfig& config) {
  const std::size_t max_content = config.data.max_len - 2;
  train = corpus::filter_long(std::move(train), max_content);
  test = corpus::filter_long(std::move(test), max_content);
  if (train.empty()) throw Error("dataset: no training sentences within max_len");

  Dataset d;
  if (test.empty()) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seeds.data);
    std::shuffle(order.begin(), order.end(), rng);
    auto held = static_cast<std::size_t>(std::llround(config.data.holdout * static_cast<double>(train.size())));
    if (config.data.holdout > 0 && train.size() >= 2) held = std::clamp<std::size_t>(held, 1, train.size() - 1);
    std::vector<std::size_t> test_idx(order.end() - static_cast<std::ptrdiff_t>(held), order.end());
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(held));
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    for (auto i : train_idx) d.train_sentences.push_back(train[i]);
    for (auto i : test_idx) d.test_sentences.push_back(train[i]);
  } else {
    d.train_sentences = std::move(train);
    d.test_sentences = std::move(test);
  }
  d.vocab = corpus::Vocabulary::build(d.train_sentences, config.data.min_freq, config.data.max_vocab);
  d.train = corpus::encode_all(d.train_sentences, d.vocab, config.data.max_len);
  d.test = corpus::encode_all(d.test_sentences, d.vocab, config.data.max_len);
  return d;
}

Dataset prepare_dataset(const RunConfig& config) {
  auto train = corpus::load_corpus(config.data.train);
  std::vector<Sentence> test;
  if (!config.data.test.empty()) test = corpus::load_corpus(config.data.test);
  return prepare_dataset(std::move(train), std::move(test), config);
}

std::string LogRecord::csv_header() {
  return "step,recon,recon_per_token,kl,mu_reg,bow,kl_weight,grad_norm,mu_var_term,ms";
}

std::string LogRecord::csv_row() const {
  std::ostringstream os;
  os << step << ',' << format_real(loss.recon) << ',' << format_real(loss.recon_per_token) << ','
     << format_real(loss.kl) << ',' << format_real(loss.mu_reg) << ',' << format_real(loss.bow) << ','
     << format_real(loss.kl_weight) << ',' << format_real(grad_norm) << ',' << format_real(loss.mu_var_term) << ','
     << format_real(ms);
  return os.str();
}

std::string EvalRecord::csv_header() { return "step,recon,recon_per_token,kl,mu_var_term,total"; }

std::string EvalRecord::csv_row() const {
  std::ostringstream os;
  os << step << ',' << format_real(held_out.recon_sum) << ',' << format_real(held_out.recon_per_token) << ','
     << format_real(held_out.kl) << ',' << format_real(held_out.mu_var_term) << ',' << format_real(total());
  return os.str();
}

Trainer::Trainer(RunConfig config, Dataset data)
    : config_(std::move(config)),
      data_(std::move(data)),
      model_(config_.resolved_model(data_.vocab.size())),
      params_(model::init_params(model_, config_.seeds.init)),
      optim_(OptimState::zeros_like(params_, AdamHyper{.lr = config_.trainer.lr})),
      rng_(config_.seeds.sample) {
  config_.validate();
  if (data_.train.size() < config_.trainer.batch_size) {
    throw ConfigError("trainer: " + std::to_string(data_.train.size()) + " training sentences is fewer than one batch of " +
                      std::to_string(config_.trainer.batch_size));
  }
  if (!data_.test.empty()) test_batches_ = data_.test_batches(config_.trainer.batch_size);
}

Trainer::Trainer(RunConfig config, Dataset data, const Checkpoint& from) : Trainer(std::move(config), std::move(data)) {
  if (from.vocab_hash != data_.vocab.hash() || from.vocab_size != data_.vocab.size()) {
    throw IoError("checkpoint: vocabulary hash mismatch");
  }
  if (from.params.size() != params_.size()) throw IoError("checkpoint: parameter table does not match the model");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& want = params_.entries()[i];
    const auto& got = from.params.entries()[i];
    if (want.name != got.name || !want.value.same_shape(got.value)) {
      throw IoError("checkpoint: parameter '" + got.name + "' does not match the model");
    }
  }
  params_ = from.params;
  optim_ = from.optim;
  step_ = from.step;
  std::istringstream in(from.rng_state);
  in >> rng_;
  if (!in) throw IoError("checkpoint: malformed RNG state");
  if (from.has_best) best_metric = from.best_metric;
}

const Batch& Trainer::next_batch() {
  const std::size_t per_epoch = data_.train.size() / config_.trainer.batch_size;
  const std::size_t epoch = step_ / per_epoch;
  if (epoch != epoch_) {
    epoch_batches_ =
        corpus::make_batches(data_.train, config_.trainer.batch_size, config_.seeds.data + epoch, corpus::BatchMode::kTrain);
    epoch_ = epoch;
  }
  return epoch_batches_[step_ % per_epoch];
}

LogRecord Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const Batch& batch = next_batch();
  const model::Rng rng_before = rng_;
  LogRecord rec;
  try {
    ad::Tape t;
    const model::BoundParams p(t, params_, true);
    const auto post = model::encode(t, p, model_, batch);
    const ad::NodeId z = model::reparameterize(t, post, rng_);
    const auto logits = model::decode_teacher_forced(t, p, model_, z, batch, config_.reg.word_dropout, rng_);

    objectives::LossComponents parts;
    parts.recon = objectives::recon_loss(t, logits, batch);
    parts.kl = objectives::kl_loss(t, post);
    parts.mu = post.mu;
    if (config_.reg.bow_weight > 0) parts.bow = objectives::bow_loss(t, p, z, batch);
    parts.batch = &batch;
    const auto total = objectives::total_loss(t, parts, config_.reg, step_);
    t.backward(total.total);

    Gradients grads;
    grads.reserve(p.nodes().size());
    for (const auto n : p.nodes()) grads.push_back(t.grad(n));
    rec.grad_norm = global_norm(grads);
    clip_gradients(grads, config_.trainer.clip);
    rec.grad_norm_clipped = global_norm(grads);
    adam_step(params_, grads, optim_);

    rec.loss = total.breakdown;
    rec.mu_mean = static_cast<double>(t.value(post.mu).mat().mean());
  } catch (...) {
    rng_ = rng_before;
    throw;
  }
  ++step_;
  rec.step = step_;
  if (config_.trainer.log_timing) {
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

EvalRecord Trainer::evaluate() const {
  EvalRecord r;
  r.step = step_;
  r.held_out = eval::held_out_metrics(params_, model_, test_batches_, config_.trainer.eval_mc_samples,
                                      config_.seeds.sample + step_);
  return r;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config_text = echo_config(config_);
  c.vocab_size = data_.vocab.size();
  c.vocab_hash = data_.vocab.hash();
  c.step = step_;
  std::ostringstream os;
  os << rng_;
  c.rng_state = os.str();
  c.has_best = best_metric.has_value();
  c.best_metric = best_metric.value_or(0.0);
  c.params = params_;
  c.optim = optim_;
  return c;
}

namespace {

// Keeps the header and every row whose leading step is <= `step`.
void truncate_csv(const fs::path& path, const std::string& header, std::size_t step) {
  std::vector<std::string> keep{header};
  if (fs::exists(path)) {
    auto lines = corpus::read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto comma = lines[i].find(',');
      if (comma == std::string::npos) continue;
      if (std::stoull(lines[i].substr(0, comma)) <= step) keep.push_back(lines[i]);
    }
  }
  corpus::write_lines(path, keep);
}

std::ofstream open_append(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

TrainSummary run_training(const RunConfig& config, const TrainOptions& options) {
  return run_training(config, prepare_dataset(config), options);
}

TrainSummary run_training(const RunConfig& config, Dataset data, const TrainOptions& options) {
  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  TrainSummary summary;
  summary.latest = dir / "latest.ckpt";
  summary.best = dir / "best.ckpt";
  const fs::path log_path = dir / "log.csv";
  const fs::path eval_path = dir / "eval.csv";

  {
    std::ofstream echo(dir / "config.ini", std::ios::binary | std::ios::trunc);
    if (!echo) throw IoError("cannot write " + (dir / "config.ini").string());
    echo << echo_config(config);
  }
  data.vocab.save(dir / "vocab.txt");

  std::optional<Trainer> trainer;
  if (options.resume) {
    const Checkpoint ckpt = load_checkpoint(summary.latest, data.vocab.hash());
    trainer.emplace(config, std::move(data), ckpt);
  } else {
    trainer.emplace(config, std::move(data));
  }
  truncate_csv(log_path, LogRecord::csv_header(), trainer->global_step());
  truncate_csv(eval_path, EvalRecord::csv_header(), trainer->global_step());
  auto log = open_append(log_path);
  auto evals = open_append(eval_path);

  const std::size_t total_steps = config.trainer.steps;
  const std::size_t end = std::min(total_steps, options.stop_at.value_or(total_steps));
  const std::size_t every = config.trainer.eval_every;
  while (trainer->global_step() < end) {
    LogRecord rec;
    try {
      rec = trainer->step();
    } catch (const NumericError&) {
      log.flush();
      save_checkpoint(dir / "emergency.ckpt", trainer->checkpoint());
      throw;
    }
    log << rec.csv_row() << '\n';
    if (options.on_step) options.on_step(rec);

    const std::size_t s = trainer->global_step();
    if ((every > 0 && s % every == 0) || s == total_steps) {
      EvalRecord ev = trainer->evaluate();
      evals << ev.csv_row() << '\n';
      if (!trainer->best_metric || ev.total() < *trainer->best_metric) {
        trainer->best_metric = ev.total();
        save_checkpoint(summary.best, trainer->checkpoint());
      }
      save_checkpoint(summary.latest, trainer->checkpoint());
      log.flush();
      evals.flush();
      if (options.on_eval) options.on_eval(ev);
      summary.last_eval = ev;
    }
  }
  save_checkpoint(summary.latest, trainer->checkpoint());
  log.flush();
  evals.flush();
  if (!log || !evals) throw IoError("write failed under " + dir.string());
  summary.steps = trainer->global_step();
  return summary;
}

FullEval full_evaluation(const RunConfig& config, const Dataset& data, const model::Params& params,
                         const model::ModelConfig& model_config) {
  FullEval out;
  const auto batches = data.test_batches(config.trainer.batch_size);
  const auto held = eval::held_out_metrics(params, model_config, batches, config.trainer.eval_mc_samples,
                                           config.seeds.sample);
  eval::EvalReport& r = out.report;
  r.recon_sum = held.recon_sum;
  r.recon_per_token = held.recon_per_token;
  r.kl = held.kl;
  r.mu_var_term = held.mu_var_term;
  r.seed = config.seeds.sample;
  r.sample_count = config.eval.samples;

  out.samples = eval::sample_from_prior(params, model_config, data.vocab, config.eval.samples, config.data.max_len,
                                        model::DecodeMode::argmax(), config.seeds.sample);
  const std::size_t refs = std::min(config.eval.bleu_refs, data.test_sentences.size());
  const std::span<const corpus::Sentence> references(data.test_sentences.data(), refs);
  for (int n : {4, 5}) {
    r.bleu[n] = eval::bleu(out.samples, references, static_cast<std::size_t>(n));
    r.self_bleu[n] = eval::self_bleu(out.samples, static_cast<std::size_t>(n));
  }
  out.histogram = eval::mu_histogram(params, model_config, batches, config.eval.hist_bins);
  return out;
}

}  // namespace muforge::train
