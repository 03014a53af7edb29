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

#include "muforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "muforge/error.hpp"

namespace muforge::model {

using ad::NodeId;
using ad::Tape;
using corpus::Vocabulary;

std::string to_string(CellKind c) { return c == CellKind::kLstm ? "lstm" : "gru"; }

std::string to_string(LatentWiring w) { return w == LatentWiring::kInitOnly ? "init" : "init+step"; }

CellKind parse_cell(std::string_view s) {
  if (s == "lstm") return CellKind::kLstm;
  if (s == "gru") return CellKind::kGru;
  throw ConfigError("unknown cell '" + std::string(s) + "' (expected lstm or gru)");
}

LatentWiring parse_wiring(std::string_view s) {
  if (s == "init") return LatentWiring::kInitOnly;
  if (s == "init+step") return LatentWiring::kInitAndStep;
  throw ConfigError("unknown z wiring '" + std::string(s) + "' (expected init or init+step)");
}

void ModelConfig::validate() const {
  if (vocab_size <= Vocabulary::kReserved) throw ConfigError("model: vocab_size must exceed the 4 reserved ids");
  if (embed_dim == 0 || enc_hidden == 0 || dec_hidden == 0 || latent_dim == 0) {
    throw ConfigError("model: all dimensions must be positive");
  }
  if (latent_dim > 2 * enc_hidden) throw ConfigError("model: latent_dim must be <= 2 * enc_hidden");
}

void Params::add(std::string name, Array value) {
  if (contains(name)) throw Error("params: duplicate name " + name);
  entries_.push_back({std::move(name), std::move(value)});
}

bool Params::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

std::size_t Params::index(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw Error("params: no parameter named " + std::string(name));
}

Array& Params::at(std::string_view name) { return entries_[index(name)].value; }
const Array& Params::at(std::string_view name) const { return entries_[index(name)].value; }

std::size_t Params::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

Real glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return static_cast<Real>(std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
}

namespace {

std::size_t gate_count(CellKind c) { return c == CellKind::kLstm ? 4 : 3; }

Array uniform(std::size_t rows, std::size_t cols, Real bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  Array a(rows, cols);
  for (auto& v : a.data()) v = static_cast<Real>(dist(rng));
  return a;
}

Array glorot(std::size_t rows, std::size_t cols, Rng& rng) { return uniform(rows, cols, glorot_bound(rows, cols), rng); }

void add_cell(Params& p, const std::string& prefix, const ModelConfig& cfg, std::size_t in, std::size_t hidden,
              Rng& rng) {
  const std::size_t g = gate_count(cfg.cell) * hidden;
  p.add(prefix + ".w_x", glorot(in, g, rng));
  p.add(prefix + ".w_h", glorot(hidden, g, rng));
  p.add(prefix + ".b", Array(1, g));
  if (cfg.layer_norm) {
    p.add(prefix + ".ln_x", Array(1, g, 1));
    p.add(prefix + ".ln_h", Array(1, g, 1));
  }
}

std::size_t decoder_input(const ModelConfig& cfg) {
  return cfg.embed_dim + (cfg.wiring == LatentWiring::kInitAndStep ? cfg.latent_dim : 0);
}

}  // namespace

Params init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Params p;
  const std::size_t enc_out = 2 * cfg.enc_hidden;
  p.add("embedding", glorot(cfg.vocab_size, cfg.embed_dim, rng));
  add_cell(p, "enc.fwd", cfg, cfg.embed_dim, cfg.enc_hidden, rng);
  add_cell(p, "enc.bwd", cfg, cfg.embed_dim, cfg.enc_hidden, rng);
  p.add("latent.mu.w", glorot(enc_out, cfg.latent_dim, rng));
  p.add("latent.mu.b", Array(1, cfg.latent_dim));
  // Small logvar weights put the initial posterior variance near 1.
  p.add("latent.logvar.w", uniform(enc_out, cfg.latent_dim, Real(0.01) * glorot_bound(enc_out, cfg.latent_dim), rng));
  p.add("latent.logvar.b", Array(1, cfg.latent_dim));
  p.add("dec.init.w", glorot(cfg.latent_dim, cfg.dec_hidden, rng));
  p.add("dec.init.b", Array(1, cfg.dec_hidden));
  add_cell(p, "dec.cell", cfg, decoder_input(cfg), cfg.dec_hidden, rng);
  p.add("out.w", glorot(cfg.dec_hidden, cfg.vocab_size, rng));
  p.add("out.b", Array(1, cfg.vocab_size));
  if (cfg.bow_hidden > 0) {
    p.add("bow.hidden.w", glorot(cfg.latent_dim, cfg.bow_hidden, rng));
    p.add("bow.hidden.b", Array(1, cfg.bow_hidden));
    p.add("bow.out.w", glorot(cfg.bow_hidden, cfg.vocab_size, rng));
    p.add("bow.out.b", Array(1, cfg.vocab_size));
  }
  return p;
}

BoundParams::BoundParams(Tape& tape, const Params& params, bool trainable) : params_(&params) {
  nodes_.reserve(params.size());
  for (const auto& e : params.entries()) {
    nodes_.push_back(trainable ? tape.leaf(e.value, e.name) : tape.constant(e.value));
  }
}

NodeId BoundParams::operator[](std::string_view name) const { return nodes_[params_->index(name)]; }

namespace {

struct CellNodes {
  NodeId w_x, w_h, b, ln_x, ln_h;
  bool layer_norm = false;
  CellKind kind = CellKind::kLstm;
  std::size_t hidden = 0;
};

CellNodes cell_nodes(const BoundParams& p, const std::string& prefix, const ModelConfig& cfg, std::size_t hidden) {
  CellNodes c;
  c.w_x = p[prefix + ".w_x"];
  c.w_h = p[prefix + ".w_h"];
  c.b = p[prefix + ".b"];
  c.layer_norm = cfg.layer_norm;
  if (cfg.layer_norm) {
    c.ln_x = p[prefix + ".ln_x"];
    c.ln_h = p[prefix + ".ln_h"];
  }
  c.kind = cfg.cell;
  c.hidden = hidden;
  return c;
}

struct State {
  NodeId h;
  NodeId c;  // LSTM only
};

NodeId project(Tape& t, NodeId x, NodeId w, NodeId ln_gain, bool layer_norm) {
  NodeId y = t.matmul(x, w);
  if (layer_norm) y = t.mul(t.layer_norm(y), ln_gain);
  return y;
}

State cell_step(Tape& t, const CellNodes& c, NodeId x, State s) {
  const std::size_t h = c.hidden;
  const NodeId gx = project(t, x, c.w_x, c.ln_x, c.layer_norm);
  const NodeId gh = project(t, s.h, c.w_h, c.ln_h, c.layer_norm);
  if (c.kind == CellKind::kLstm) {
    const NodeId pre = t.add(t.add(gx, gh), c.b);
    const NodeId i = t.sigmoid(t.slice(pre, 0, h));
    const NodeId f = t.sigmoid(t.slice(pre, h, 2 * h));
    const NodeId o = t.sigmoid(t.slice(pre, 2 * h, 3 * h));
    const NodeId g = t.tanh(t.slice(pre, 3 * h, 4 * h));
    const NodeId cell = t.add(t.mul(f, s.c), t.mul(i, g));
    return {t.mul(o, t.tanh(cell)), cell};
  }
  // GRU: h' = n + u * (h - n)
  const NodeId gxb = t.add(gx, c.b);
  const NodeId u = t.sigmoid(t.add(t.slice(gxb, 0, h), t.slice(gh, 0, h)));
  const NodeId r = t.sigmoid(t.add(t.slice(gxb, h, 2 * h), t.slice(gh, h, 2 * h)));
  const NodeId n = t.tanh(t.add(t.slice(gxb, 2 * h, 3 * h), t.mul(r, t.slice(gh, 2 * h, 3 * h))));
  return {t.add(n, t.mul(u, t.sub(s.h, n))), NodeId{}};
}

State zero_state(Tape& t, std::size_t rows, std::size_t hidden, CellKind kind) {
  const NodeId zero = t.constant(Array(rows, hidden));
  return {zero, kind == CellKind::kLstm ? zero : NodeId{}};
}

State masked(Tape& t, State next, State prev, const std::vector<std::uint8_t>& keep) {
  if (std::all_of(keep.begin(), keep.end(), [](std::uint8_t k) { return k != 0; })) return next;
  State out;
  out.h = t.row_select(next.h, prev.h, keep);
  if (next.c.valid()) out.c = t.row_select(next.c, prev.c, keep);
  return out;
}

}  // namespace

PosteriorNodes encode(Tape& t, const BoundParams& p, const ModelConfig& cfg, const corpus::Batch& batch) {
  if (batch.rows == 0 || batch.steps < 2) throw Error("encode: empty batch");
  const NodeId emb = p["embedding"];
  const CellNodes fwd = cell_nodes(p, "enc.fwd", cfg, cfg.enc_hidden);
  const CellNodes bwd = cell_nodes(p, "enc.bwd", cfg, cfg.enc_hidden);

  std::vector<NodeId> inputs(batch.steps);
  for (std::size_t s = 0; s < batch.steps; ++s) inputs[s] = t.gather_rows(emb, batch.column(s));

  State f = zero_state(t, batch.rows, cfg.enc_hidden, cfg.cell);
  for (std::size_t s = 0; s < batch.steps; ++s) {
    f = masked(t, cell_step(t, fwd, inputs[s], f), f, batch.mask_column(s));
  }
  // Padded positions leave the state at zero, so each row's reverse pass
  // effectively starts at its own last token.
  State b = zero_state(t, batch.rows, cfg.enc_hidden, cfg.cell);
  for (std::size_t s = batch.steps; s-- > 0;) {
    b = masked(t, cell_step(t, bwd, inputs[s], b), b, batch.mask_column(s));
  }
  const NodeId summary = t.concat(f.h, b.h);
  PosteriorNodes post;
  post.mu = t.add(t.matmul(summary, p["latent.mu.w"]), p["latent.mu.b"]);
  post.logvar =
      t.clamp(t.add(t.matmul(summary, p["latent.logvar.w"]), p["latent.logvar.b"]), kLogvarMin, kLogvarMax);
  return post;
}

GaussianPosterior encode(const Params& params, const ModelConfig& cfg, const corpus::Batch& batch) {
  Tape t;
  BoundParams p(t, params, false);
  const auto post = encode(t, p, cfg, batch);
  return {t.value(post.mu), t.value(post.logvar)};
}

Array standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Array a(rows, cols);
  for (auto& v : a.data()) v = static_cast<Real>(dist(rng));
  return a;
}

NodeId reparameterize(Tape& t, const PosteriorNodes& post, const Array& eps) {
  const Array& mu = t.value(post.mu);
  if (!mu.same_shape(eps)) throw ShapeError("reparameterize: eps " + eps.shape_string() + " vs mu " + mu.shape_string());
  const NodeId sigma = t.exp(t.scale(post.logvar, Real(0.5)));
  return t.add(post.mu, t.mul(sigma, t.constant(eps)));
}

NodeId reparameterize(Tape& t, const PosteriorNodes& post, Rng& rng) {
  const Array& mu = t.value(post.mu);
  return reparameterize(t, post, standard_normal(mu.rows(), mu.cols(), rng));
}

Array reparameterize(const GaussianPosterior& post, std::uint64_t seed) {
  Tape t;
  Rng rng(seed);
  const PosteriorNodes nodes{t.constant(post.mu), t.constant(post.logvar)};
  return t.value(reparameterize(t, nodes, rng));
}

namespace {

struct DecoderNodes {
  NodeId emb, init_w, init_b, out_w, out_b;
  CellNodes cell;
};

DecoderNodes decoder_nodes(const BoundParams& p, const ModelConfig& cfg) {
  return {p["embedding"], p["dec.init.w"], p["dec.init.b"], p["out.w"], p["out.b"],
          cell_nodes(p, "dec.cell", cfg, cfg.dec_hidden)};
}

State decoder_start(Tape& t, const DecoderNodes& d, const ModelConfig& cfg, NodeId z, std::size_t rows) {
  State s;
  s.h = t.tanh(t.add(t.matmul(z, d.init_w), d.init_b));
  if (cfg.cell == CellKind::kLstm) s.c = t.constant(Array(rows, cfg.dec_hidden));
  return s;
}

NodeId decoder_input(Tape& t, const DecoderNodes& d, const ModelConfig& cfg, NodeId z,
                     std::span<const TokenId> tokens) {
  const NodeId x = t.gather_rows(d.emb, tokens);
  return cfg.wiring == LatentWiring::kInitAndStep ? t.concat(x, z) : x;
}

}  // namespace

std::vector<NodeId> decode_teacher_forced(Tape& t, const BoundParams& p, const ModelConfig& cfg, NodeId z,
                                          const corpus::Batch& batch, double word_dropout, Rng& rng) {
  const Array& zv = t.value(z);
  if (zv.rows() != batch.rows || zv.cols() != cfg.latent_dim) {
    throw ShapeError("decode: z " + zv.shape_string() + " for a batch of " + std::to_string(batch.rows) +
                     " rows and latent_dim " + std::to_string(cfg.latent_dim));
  }
  if (!(word_dropout >= 0 && word_dropout <= 1)) throw Error("decode: word_dropout must lie in [0, 1]");

  const DecoderNodes d = decoder_nodes(p, cfg);
  State s = decoder_start(t, d, cfg, z, batch.rows);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<NodeId> logits;
  logits.reserve(batch.steps - 1);
  for (std::size_t step = 0; step + 1 < batch.steps; ++step) {
    auto tokens = batch.column(step);
    if (word_dropout > 0) {
      for (auto& tok : tokens) {
        if (coin(rng) < word_dropout) tok = Vocabulary::kUnk;
      }
    }
    s = cell_step(t, d.cell, decoder_input(t, d, cfg, z, tokens), s);
    logits.push_back(t.add(t.matmul(s.h, d.out_w), d.out_b));
  }
  return logits;
}

std::vector<std::vector<TokenId>> generate(const Params& params, const ModelConfig& cfg, const Array& z,
                                           std::size_t max_len, DecodeMode mode, Rng& rng) {
  if (max_len < 2) throw Error("generate: max_len must be >= 2");
  if (!mode.greedy && !(mode.temperature > 0)) throw Error("generate: temperature must be positive");
  if (z.cols() != cfg.latent_dim) throw ShapeError("generate: z has " + std::to_string(z.cols()) + " columns");

  const std::size_t rows = z.rows();
  Tape t;
  BoundParams p(t, params, false);
  const DecoderNodes d = decoder_nodes(p, cfg);
  const NodeId zn = t.constant(z);
  State s = decoder_start(t, d, cfg, zn, rows);

  std::vector<std::vector<TokenId>> out(rows, std::vector<TokenId>{Vocabulary::kBos});
  std::vector<std::uint8_t> done(rows, 0);
  std::vector<TokenId> prev(rows, Vocabulary::kBos);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  for (std::size_t len = 1; len + 1 < max_len; ++len) {
    s = cell_step(t, d.cell, decoder_input(t, d, cfg, zn, prev), s);
    const Array& logits = t.value(t.add(t.matmul(s.h, d.out_w), d.out_b));
    for (std::size_t r = 0; r < rows; ++r) {
      if (done[r]) continue;
      TokenId next = 0;
      if (mode.greedy) {
        Real best = logits(r, 0);
        for (std::size_t v = 1; v < logits.cols(); ++v) {
          if (logits(r, v) > best) {
            best = logits(r, v);
            next = static_cast<TokenId>(v);
          }
        }
      } else {
        std::vector<double> w(logits.cols());
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < w.size(); ++v) mx = std::max(mx, static_cast<double>(logits(r, v)) / mode.temperature);
        double total = 0;
        for (std::size_t v = 0; v < w.size(); ++v) {
          w[v] = std::exp(static_cast<double>(logits(r, v)) / mode.temperature - mx);
          total += w[v];
        }
        double u = coin(rng) * total;
        next = static_cast<TokenId>(w.size() - 1);
        for (std::size_t v = 0; v < w.size(); ++v) {
          if (u < w[v]) {
            next = static_cast<TokenId>(v);
            break;
          }
          u -= w[v];
        }
      }
      out[r].push_back(next);
      prev[r] = next;
      if (next == Vocabulary::kEos) done[r] = 1;
    }
    if (std::all_of(done.begin(), done.end(), [](std::uint8_t x) { return x != 0; })) break;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (!done[r]) out[r].push_back(Vocabulary::kEos);
  }
  return out;
}

std::vector<std::vector<TokenId>> generate(const Params& params, const ModelConfig& cfg, const Array& z,
                                           std::size_t max_len, DecodeMode mode, std::uint64_t seed) {
  Rng rng(seed);
  return generate(params, cfg, z, max_len, mode, rng);
}

}  // namespace muforge::model
