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

// Brute-force BLEU used as a test oracle. Counts n-grams by direct
// comparison, with no hashing and no shared code with the library.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace muforge::testing {

using Tokens = std::vector<std::string>;

inline bool same_ngram(const Tokens& a, std::size_t i, const Tokens& b, std::size_t j, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (a[i + k] != b[j + k]) return false;
  }
  return true;
}

inline std::size_t occurrences(const Tokens& hay, const Tokens& needle, std::size_t at, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t j = 0; j + n <= hay.size(); ++j) c += same_ngram(hay, j, needle, at, n) ? 1 : 0;
  return c;
}

inline double oracle_bleu(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs, std::size_t max_n) {
  std::vector<double> match(max_n, 0.0);
  std::vector<double> total(max_n, 0.0);
  double c_len = 0;
  double r_len = 0;
  for (const Tokens& c : cands) {
    c_len += static_cast<double>(c.size());
    std::size_t best = refs[0].size();
    for (const Tokens& r : refs) {
      const long d = std::labs(static_cast<long>(r.size()) - static_cast<long>(c.size()));
      const long bd = std::labs(static_cast<long>(best) - static_cast<long>(c.size()));
      if (d < bd || (d == bd && r.size() < best)) best = r.size();
    }
    r_len += static_cast<double>(best);
    for (std::size_t n = 1; n <= max_n; ++n) {
      for (std::size_t i = 0; i + n <= c.size(); ++i) {
        // Count each distinct n-gram once, at its first occurrence.
        bool first = true;
        for (std::size_t j = 0; j < i; ++j) {
          if (same_ngram(c, j, c, i, n)) first = false;
        }
        if (!first) continue;
        const std::size_t count = occurrences(c, c, i, n);
        std::size_t cap = 0;
        for (const Tokens& r : refs) {
          const std::size_t in_ref = occurrences(r, c, i, n);
          if (in_ref > cap) cap = in_ref;
        }
        match[n - 1] += static_cast<double>(count < cap ? count : cap);
        total[n - 1] += static_cast<double>(count);
      }
    }
  }
  if (c_len == 0 || match[0] == 0) return 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < max_n; ++n) zero = zero || (total[n] > 0 && match[n] == 0);
  double logs = 0;
  double used = 0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (total[n] == 0) continue;
    const double add = (zero && n > 0) ? 1.0 : 0.0;
    logs += std::log((match[n] + add) / (total[n] + add));
    used += 1;
  }
  const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  return 100.0 * bp * std::exp(logs / used);
}

inline double oracle_self_bleu(const std::vector<Tokens>& cands, std::size_t max_n) {
  double sum = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    std::vector<Tokens> others;
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (j != i) others.push_back(cands[j]);
    }
    sum += oracle_bleu({cands[i]}, others, max_n);
  }
  return sum / static_cast<double>(cands.size());
}

}  // namespace muforge::testing
