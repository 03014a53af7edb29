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

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "muforge/error.hpp"

int main(int argc, char** argv) {
  using namespace muforge;
  CLI::App app{"muforge: variational recurrent autoencoders with mu-forcing"};
  app.require_subcommand(1);

  cli::TrainArgs train;
  auto* t = app.add_subcommand("train", "train a model; writes checkpoints and log.csv");
  t->add_option("--config", train.config, "run configuration")->required();
  t->add_flag("--resume", train.resume, "continue from <output_dir>/latest.ckpt");
  t->add_option("--stop-at", train.stop_at, "halt after this many steps");

  cli::EvalArgs ev;
  auto* e = app.add_subcommand("eval", "held-out metrics, BLEU/Self-BLEU and the mu histogram");
  e->add_option("--config", ev.config)->required();
  e->add_option("--checkpoint", ev.checkpoint);
  e->add_option("--out", ev.out, "output directory");

  cli::SampleArgs sample;
  auto* s = app.add_subcommand("sample", "decode sentences from z ~ N(0, I)");
  s->add_option("--config", sample.config)->required();
  s->add_option("--checkpoint", sample.checkpoint);
  s->add_option("--out", sample.out, "sentence file");
  s->add_option("--count", sample.count)->check(CLI::PositiveNumber);
  s->add_option("--seed", sample.seed);
  s->add_option("--temperature", sample.temperature, "0 for greedy")->check(CLI::NonNegativeNumber);

  cli::InterpolateArgs interp;
  auto* i = app.add_subcommand("interpolate", "homotopy between two sentences");
  i->add_option("--config", interp.config)->required();
  i->add_option("--checkpoint", interp.checkpoint);
  i->add_option("--out", interp.out);
  i->add_option("--a", interp.a, "sentence or file")->required();
  i->add_option("--b", interp.b, "sentence or file")->required();
  i->add_option("--steps", interp.steps)->check(CLI::Range(2, 1000));

  cli::TransferArgs transfer;
  auto* x = app.add_subcommand("transfer", "decode z_a + z_q - z_p");
  x->add_option("--config", transfer.config)->required();
  x->add_option("--checkpoint", transfer.checkpoint);
  x->add_option("--out", transfer.out);
  x->add_option("--a", transfer.a, "sentence or file of sentences")->required();
  x->add_option("--p", transfer.p, "source-attribute sentence")->required();
  x->add_option("--q", transfer.q, "target-attribute sentence")->required();

  cli::SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "train and evaluate one run per beta");
  w->add_option("--config", sweep.config)->required();
  w->add_option("--beta", sweep.betas, "comma-separated margins")->required()->delimiter(',');

  cli::SynthArgs synth;
  auto* y = app.add_subcommand("synth", "write the synthetic review corpus");
  y->add_option("--out", synth.out)->required();
  y->add_option("--count", synth.count)->check(CLI::PositiveNumber);
  y->add_option("--seed", synth.seed);
  y->add_option("--labels", synth.labels, "polarity per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*t) cli::run_train(train);
    else if (*e) cli::run_eval(ev);
    else if (*s) cli::run_sample(sample);
    else if (*i) cli::run_interpolate(interp);
    else if (*x) cli::run_transfer(transfer);
    else if (*w) cli::run_sweep(sweep);
    else if (*y) cli::run_synth(synth);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return static_cast<int>(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  }
  return 0;
}
