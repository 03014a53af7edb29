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

#include "muforge/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "muforge/error.hpp"

namespace muforge {

namespace {

namespace pt = boost::property_tree;

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double parse_real(const std::string& s, const std::string& at) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw ConfigError("type mismatch for " + at + ": expected a real number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, const std::string& at) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError("type mismatch for " + at + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s, const std::string& at) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("type mismatch for " + at + ": expected true or false, got '" + s + "'");
}

struct Key {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MUFORGE_REAL(sec, name, member)                                                              \
  Key {                                                                                              \
    sec, name, [](RunConfig& c, const std::string& v, const std::string& at) { c.member = parse_real(v, at); }, \
        [](const RunConfig& c) { return format_real(c.member); }                                     \
  }
#define MUFORGE_UINT(sec, name, member)                                                              \
  Key {                                                                                              \
    sec, name,                                                                                       \
        [](RunConfig& c, const std::string& v, const std::string& at) {                              \
          c.member = static_cast<decltype(c.member)>(parse_uint(v, at));                             \
        },                                                                                           \
        [](const RunConfig& c) { return std::to_string(c.member); }                                  \
  }
#define MUFORGE_BOOL(sec, name, member)                                                              \
  Key {                                                                                              \
    sec, name, [](RunConfig& c, const std::string& v, const std::string& at) { c.member = parse_bool(v, at); }, \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }                  \
  }
#define MUFORGE_PATH(sec, name, member)                                                              \
  Key {                                                                                              \
    sec, name, [](RunConfig& c, const std::string& v, const std::string&) { c.member = v; },       \
        [](const RunConfig& c) { return c.member.string(); }                                         \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      MUFORGE_PATH("data", "train", data.train),
      MUFORGE_PATH("data", "test", data.test),
      MUFORGE_REAL("data", "holdout", data.holdout),
      MUFORGE_UINT("data", "min_freq", data.min_freq),
      MUFORGE_UINT("data", "max_vocab", data.max_vocab),
      MUFORGE_UINT("data", "max_len", data.max_len),

      MUFORGE_UINT("model", "embed_dim", model.embed_dim),
      MUFORGE_UINT("model", "enc_hidden", model.enc_hidden),
      MUFORGE_UINT("model", "dec_hidden", model.dec_hidden),
      MUFORGE_UINT("model", "latent_dim", model.latent_dim),
      MUFORGE_BOOL("model", "layer_norm", model.layer_norm),
      Key{"model", "cell", [](RunConfig& c, const std::string& v, const std::string&) { c.model.cell = model::parse_cell(v); },
          [](const RunConfig& c) { return model::to_string(c.model.cell); }},
      Key{"model", "z_wiring",
          [](RunConfig& c, const std::string& v, const std::string&) { c.model.wiring = model::parse_wiring(v); },
          [](const RunConfig& c) { return model::to_string(c.model.wiring); }},
      MUFORGE_UINT("model", "bow_hidden", bow_hidden),

      MUFORGE_REAL("regularizer", "beta", reg.beta),
      MUFORGE_UINT("regularizer", "kl_anneal_steps", reg.kl_anneal_steps),
      Key{"regularizer", "kl_anneal_shape",
          [](RunConfig& c, const std::string& v, const std::string&) {
            c.reg.anneal_shape = objectives::parse_anneal_shape(v);
          },
          [](const RunConfig& c) { return objectives::to_string(c.reg.anneal_shape); }},
      MUFORGE_REAL("regularizer", "fb_per_dim", reg.free_bits_per_dim),
      Key{"regularizer", "fb_total_bits",
          [](RunConfig& c, const std::string& v, const std::string& at) {
            c.fb_total_bits = parse_real(v, at);
            c.reg.free_bits_total = c.fb_total_bits * std::numbers::ln2;
          },
          [](const RunConfig& c) { return format_real(c.fb_total_bits); }},
      MUFORGE_REAL("regularizer", "kl_lambda", reg.kl_lambda),
      MUFORGE_REAL("regularizer", "bow_weight", reg.bow_weight),
      MUFORGE_REAL("regularizer", "word_dropout", reg.word_dropout),
      Key{"regularizer", "kl_reduction",
          [](RunConfig& c, const std::string& v, const std::string&) {
            c.reg.kl_reduction = objectives::parse_kl_reduction(v);
          },
          [](const RunConfig& c) { return objectives::to_string(c.reg.kl_reduction); }},

      MUFORGE_REAL("trainer", "lr", trainer.lr),
      MUFORGE_UINT("trainer", "batch_size", trainer.batch_size),
      MUFORGE_UINT("trainer", "steps", trainer.steps),
      MUFORGE_REAL("trainer", "clip", trainer.clip),
      MUFORGE_UINT("trainer", "eval_every", trainer.eval_every),
      MUFORGE_UINT("trainer", "eval_mc_samples", trainer.eval_mc_samples),
      MUFORGE_BOOL("trainer", "log_timing", trainer.log_timing),

      MUFORGE_UINT("seeds", "init", seeds.init),
      MUFORGE_UINT("seeds", "data", seeds.data),
      MUFORGE_UINT("seeds", "sample", seeds.sample),

      MUFORGE_UINT("eval", "samples", eval.samples),
      MUFORGE_UINT("eval", "bleu_refs", eval.bleu_refs),
      MUFORGE_UINT("eval", "hist_bins", eval.hist_bins),

      MUFORGE_PATH("output", "dir", output_dir),
  };
  return k;
}

#undef MUFORGE_REAL
#undef MUFORGE_UINT
#undef MUFORGE_BOOL
#undef MUFORGE_PATH

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute()) return p;
  return (base / p).lexically_normal();
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

model::ModelConfig RunConfig::resolved_model(std::size_t vocab_size) const {
  model::ModelConfig m = model;
  m.vocab_size = vocab_size;
  m.bow_hidden = reg.bow_weight > 0 ? bow_hidden : 0;
  return m;
}

void RunConfig::validate() const {
  reg.validate();
  if (data.train.empty()) throw ConfigError("missing required key [data] train");
  if (!(data.holdout >= 0 && data.holdout < 1)) throw ConfigError("[data] holdout must lie in [0, 1)");
  if (data.min_freq < 1) throw ConfigError("[data] min_freq must be >= 1");
  if (data.max_vocab < 5) throw ConfigError("[data] max_vocab must be >= 5");
  if (data.max_len < 3) throw ConfigError("[data] max_len must be >= 3");
  if (model.embed_dim == 0 || model.enc_hidden == 0 || model.dec_hidden == 0 || model.latent_dim == 0) {
    throw ConfigError("[model] dimensions must be positive");
  }
  if (model.latent_dim > 2 * model.enc_hidden) throw ConfigError("[model] latent_dim must be <= 2 * enc_hidden");
  if (reg.bow_weight > 0 && bow_hidden == 0) throw ConfigError("[model] bow_hidden must be positive when bow_weight > 0");
  if (!(fb_total_bits >= 0)) throw ConfigError("[regularizer] fb_total_bits must be >= 0");
  if (!(trainer.lr > 0)) throw ConfigError("[trainer] lr must be positive");
  if (trainer.batch_size < 2) throw ConfigError("[trainer] batch_size must be >= 2");
  if (!(trainer.clip > 0)) throw ConfigError("[trainer] clip must be positive");
  if (trainer.eval_mc_samples < 1) throw ConfigError("[trainer] eval_mc_samples must be >= 1");
  if (eval.hist_bins < 10) throw ConfigError("[eval] hist_bins must be >= 10");
  if (eval.samples < 2) throw ConfigError("[eval] samples must be >= 2");
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir, bool check_paths) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' outside of any [section]");
    }
    for (const auto& [key, value] : body) {
      const auto& all = keys();
      auto it = std::find_if(all.begin(), all.end(), [&](const Key& k) { return k.section == section && k.key == key; });
      if (it == all.end()) throw ConfigError("unknown key " + where(section, key));
      it->set(cfg, value.data(), where(section, key));
    }
  }
  if (cfg.data.train.empty()) throw ConfigError("missing required key [data] train");
  cfg.data.train = resolve(cfg.data.train, base_dir);
  cfg.data.test = resolve(cfg.data.test, base_dir);
  cfg.output_dir = resolve(cfg.output_dir, base_dir);
  cfg.validate();
  if (check_paths) {
    if (!std::filesystem::exists(cfg.data.train)) throw ConfigError("[data] train: no such file " + cfg.data.train.string());
    if (!cfg.data.test.empty() && !std::filesystem::exists(cfg.data.test)) {
      throw ConfigError("[data] test: no such file " + cfg.data.test.string());
    }
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::filesystem::absolute(path).parent_path());
}

std::string echo_config(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const Key& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << k.key << " = " << k.get(config) << '\n';
  }
  return os.str();
}

}  // namespace muforge
