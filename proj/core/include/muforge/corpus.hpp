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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace muforge::corpus {

using TokenId = std::int32_t;
using Sentence = std::vector<std::string>;

/// Lowercases ASCII letters, splits on whitespace and detaches ASCII
/// punctuation into single-character tokens.
Sentence tokenize(std::string_view line);
std::string detokenize(std::span<const std::string> tokens);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();

  /// Keeps tokens seen at least `min_freq` times, ordered by (frequency desc,
  /// token asc), until the total size including reserved ids is `max_size`.
  static Vocabulary build(std::span<const Sentence> sentences, std::size_t min_freq, std::size_t max_size);
  /// Tokens in id order, starting at id 4.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;

  /// BOS + ids (content truncated to max_len - 2) + EOS.
  std::vector<TokenId> encode(std::span<const std::string> sentence, std::size_t max_len) const;
  /// Drops BOS/PAD and stops at the first EOS.
  Sentence decode(std::span<const TokenId> ids) const;

  /// FNV-1a over the id-ordered token list.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Padded N x T id matrix. Row i holds BOS ... EOS followed by PAD.
struct Batch {
  std::size_t rows = 0;
  std::size_t steps = 0;
  std::vector<TokenId> ids;
  std::vector<std::size_t> lengths;
  std::vector<std::uint8_t> mask;
  // Index of each row's sentence in the source corpus.
  std::vector<std::size_t> source;

  TokenId at(std::size_t r, std::size_t t) const { return ids[r * steps + t]; }
  std::vector<TokenId> column(std::size_t t) const;
  std::vector<std::uint8_t> mask_column(std::size_t t) const;
  std::size_t token_count() const;  // targets = positions 1..length-1
};

/// Pads encoded rows to `steps` (0 means the longest row).
Batch make_batch(std::span<const std::vector<TokenId>> rows, std::size_t steps = 0,
                 std::span<const std::size_t> source = {});

enum class BatchMode { kTrain, kEval };

/// Training mode shuffles with `seed` and drops the final partial batch;
/// evaluation mode keeps corpus order and every row.
std::vector<Batch> make_batches(std::span<const std::vector<TokenId>> encoded, std::size_t batch_size,
                                std::uint64_t seed, BatchMode mode);
std::vector<Batch> make_batches(std::span<const Sentence> sentences, const Vocabulary& vocab,
                                std::size_t batch_size, std::size_t max_len, std::uint64_t seed, BatchMode mode);

std::vector<std::vector<TokenId>> encode_all(std::span<const Sentence> sentences, const Vocabulary& vocab,
                                             std::size_t max_len);

/// Drops sentences with more than `max_content` tokens (BOS/EOS not counted).
std::vector<Sentence> filter_long(std::vector<Sentence> sentences, std::size_t max_content);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);
std::vector<Sentence> load_corpus(const std::filesystem::path& path);

}  // namespace muforge::corpus
