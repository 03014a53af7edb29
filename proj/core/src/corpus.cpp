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

#include "muforge/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "muforge/error.hpp"

namespace muforge::corpus {

namespace {

const char* const kReservedSurface[] = {"<pad>", "<s>", "</s>", "<unk>"};

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

Sentence tokenize(std::string_view line) {
  Sentence out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : line) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* s : kReservedSurface) {
    index_.emplace(s, static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(s);
  }
}

Vocabulary Vocabulary::build(std::span<const Sentence> sentences, std::size_t min_freq, std::size_t max_size) {
  if (min_freq < 1) throw Error("build_vocab: min_freq must be >= 1");
  if (max_size < kReserved) throw Error("build_vocab: max_size must be >= 4");
  std::map<std::string, std::size_t> freq;
  std::size_t total = 0;
  for (const auto& s : sentences) {
    for (const auto& t : s) {
      ++freq[t];
      ++total;
    }
  }
  if (total == 0) throw Error("build_vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : freq) {
    if (n >= min_freq) ranked.emplace_back(tok, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (auto& [tok, n] : ranked) {
    if (v.size() >= max_size) break;
    if (v.contains(tok)) continue;
    v.index_.emplace(tok, static_cast<TokenId>(v.tokens_.size()));
    v.tokens_.push_back(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (auto& t : tokens) {
    if (t.empty()) throw Error("vocabulary: empty token");
    if (v.contains(t)) throw Error("vocabulary: duplicate token '" + t + "'");
    v.index_.emplace(t, static_cast<TokenId>(v.tokens_.size()));
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return from_tokens(read_lines(path)); }

void Vocabulary::save(const std::filesystem::path& path) const {
  std::vector<std::string> body(tokens_.begin() + kReserved, tokens_.end());
  write_lines(path, body);
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(std::string(token)); }

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> sentence, std::size_t max_len) const {
  if (max_len < 3) throw Error("encode: max_len must be >= 3");
  const std::size_t keep = std::min(sentence.size(), max_len - 2);
  std::vector<TokenId> out;
  out.reserve(keep + 2);
  out.push_back(kBos);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(id(sentence[i]));
  out.push_back(kEos);
  return out;
}

Sentence Vocabulary::decode(std::span<const TokenId> ids) const {
  Sentence out;
  for (TokenId t : ids) {
    if (t == kEos) break;
    if (t == kBos || t == kPad) continue;
    out.push_back(token(t));
  }
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<TokenId> Batch::column(std::size_t t) const {
  std::vector<TokenId> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, t);
  return out;
}

std::vector<std::uint8_t> Batch::mask_column(std::size_t t) const {
  std::vector<std::uint8_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = mask[r * steps + t];
  return out;
}

std::size_t Batch::token_count() const {
  std::size_t n = 0;
  for (auto len : lengths) n += len - 1;
  return n;
}

Batch make_batch(std::span<const std::vector<TokenId>> rows, std::size_t steps, std::span<const std::size_t> source) {
  if (rows.empty()) throw Error("make_batch: no rows");
  std::size_t longest = 0;
  for (const auto& r : rows) {
    if (r.size() < 2 || r.front() != Vocabulary::kBos || r.back() != Vocabulary::kEos) {
      throw Error("make_batch: rows must be BOS ... EOS");
    }
    longest = std::max(longest, r.size());
  }
  if (steps == 0) steps = longest;
  if (steps < longest) throw Error("make_batch: steps shorter than longest row");

  Batch b;
  b.rows = rows.size();
  b.steps = steps;
  b.ids.assign(b.rows * steps, Vocabulary::kPad);
  b.mask.assign(b.rows * steps, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    b.lengths.push_back(rows[i].size());
    for (std::size_t t = 0; t < rows[i].size(); ++t) {
      b.ids[i * steps + t] = rows[i][t];
      b.mask[i * steps + t] = 1;
    }
    b.source.push_back(source.empty() ? i : source[i]);
  }
  return b;
}

std::vector<Batch> make_batches(std::span<const std::vector<TokenId>> encoded, std::size_t batch_size,
                                std::uint64_t seed, BatchMode mode) {
  if (batch_size < 2) throw Error("make_batches: batch_size must be >= 2");
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (mode == BatchMode::kTrain) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> out;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    const std::size_t n = std::min(batch_size, order.size() - at);
    if (n < batch_size && mode == BatchMode::kTrain) break;
    std::vector<std::vector<TokenId>> rows;
    std::vector<std::size_t> source;
    for (std::size_t k = 0; k < n; ++k) {
      rows.push_back(encoded[order[at + k]]);
      source.push_back(order[at + k]);
    }
    out.push_back(make_batch(rows, 0, source));
  }
  return out;
}

std::vector<std::vector<TokenId>> encode_all(std::span<const Sentence> sentences, const Vocabulary& vocab,
                                             std::size_t max_len) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(vocab.encode(s, max_len));
  return out;
}

std::vector<Batch> make_batches(std::span<const Sentence> sentences, const Vocabulary& vocab, std::size_t batch_size,
                                std::size_t max_len, std::uint64_t seed, BatchMode mode) {
  const auto encoded = encode_all(sentences, vocab, max_len);
  return make_batches(encoded, batch_size, seed, mode);
}

std::vector<Sentence> filter_long(std::vector<Sentence> sentences, std::size_t max_content) {
  std::erase_if(sentences, [&](const Sentence& s) { return s.size() > max_content; });
  return sentences;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Sentence> load_corpus(const std::filesystem::path& path) {
  std::vector<Sentence> out;
  for (const auto& line : read_lines(path)) {
    auto toks = tokenize(line);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

}  // namespace muforge::corpus
