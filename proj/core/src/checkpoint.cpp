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

#include "muforge/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "muforge/error.hpp"

namespace muforge::train {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'U', 'F', 'O', 'R', 'G', 'E', '\0'};

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  void array(const Array& a) {
    u64(a.rows());
    u64(a.cols());
    for (const Real v : a.data()) f64(static_cast<double>(v));
  }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    return std::string(take(n));
  }
  std::string_view take(std::uint64_t n) {
    if (n > in_.size() - at_) throw IoError("checkpoint: truncated file");
    auto s = in_.substr(at_, n);
    at_ += n;
    return s;
  }
  Array array() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (cols != 0 && rows > (in_.size() - at_) / 8 / cols) throw IoError("checkpoint: truncated array");
    Array a(rows, cols);
    for (Real& v : a.data()) v = static_cast<Real>(f64());
    return a;
  }
  bool done() const { return at_ == in_.size(); }

 private:
  std::uint64_t le(int bytes) {
    const auto s = take(static_cast<std::uint64_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::string_view in_;
  std::size_t at_ = 0;
};

void write_table(Writer& w, const model::Params& names, const std::vector<Array>& values) {
  w.u64(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    w.str(names.entries()[i].name);
    w.array(values[i]);
  }
}

std::vector<Array> read_table(Reader& r, const model::Params& names) {
  const std::uint64_t n = r.u64();
  if (n != names.size()) throw IoError("checkpoint: moment table size does not match the parameter table");
  std::vector<Array> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::string name = r.str();
    if (name != names.entries()[i].name) throw IoError("checkpoint: moment table entry '" + name + "' out of order");
    out.push_back(r.array());
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

RunConfig Checkpoint::run_config() const { return parse_config_text(config_text, {}, false); }

model::ModelConfig Checkpoint::model_config() const { return run_config().resolved_model(vocab_size); }

std::string serialize_checkpoint(const Checkpoint& c) {
  Writer w;
  w.raw(std::string_view(kMagic.data(), kMagic.size()));
  w.u32(c.version);
  w.u64(fnv1a(c.config_text));
  w.str(c.config_text);
  w.u64(c.vocab_size);
  w.u64(c.vocab_hash);
  w.u64(c.step);
  w.str(c.rng_state);
  w.u32(c.has_best ? 1 : 0);
  w.f64(c.best_metric);

  w.u64(c.params.size());
  for (const auto& e : c.params.entries()) {
    w.str(e.name);
    w.array(e.value);
  }
  const AdamHyper& h = c.optim.hyper;
  w.u64(c.optim.t);
  w.f64(h.lr);
  w.f64(h.beta1);
  w.f64(h.beta2);
  w.f64(h.eps);
  write_table(w, c.params, c.optim.m);
  write_table(w, c.params, c.optim.v);
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != std::string_view(kMagic.data(), kMagic.size())) {
    throw IoError("checkpoint: bad magic, not a muforge checkpoint");
  }
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion) {
    throw IoError("checkpoint: version " + std::to_string(c.version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t digest = r.u64();
  c.config_text = r.str();
  if (fnv1a(c.config_text) != digest) throw IoError("checkpoint: config digest mismatch");
  c.vocab_size = r.u64();
  c.vocab_hash = r.u64();
  c.step = r.u64();
  c.rng_state = r.str();
  c.has_best = r.u32() != 0;
  c.best_metric = r.f64();

  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = r.str();
    c.params.add(std::move(name), r.array());
  }
  c.optim.t = r.u64();
  c.optim.hyper.lr = r.f64();
  c.optim.hyper.beta1 = r.f64();
  c.optim.hyper.beta2 = r.f64();
  c.optim.hyper.eps = r.f64();
  c.optim.m = read_table(r, c.params);
  c.optim.v = read_table(r, c.params);
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    if (!c.optim.m[i].same_shape(c.params.entries()[i].value) || !c.optim.v[i].same_shape(c.params.entries()[i].value)) {
      throw IoError("checkpoint: moment shape mismatch for " + c.params.entries()[i].name);
    }
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Checkpoint c = deserialize_checkpoint(ss.str());
  if (expected_vocab_hash && *expected_vocab_hash != c.vocab_hash) {
    throw IoError("checkpoint " + path.string() + ": vocabulary hash mismatch");
  }
  return c;
}

}  // namespace muforge::train
