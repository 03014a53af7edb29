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

#include "muforge/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "muforge/error.hpp"

namespace muforge::corpus {

namespace {

enum class Slot { kAdjective, kVerb, kAdverb };

struct Template {
  std::vector<std::string> pattern;  // "{P}", "{I}", "{S}" are slots
  Slot slot;
};

const std::vector<Template>& templates() {
  static const std::vector<Template> t = {
      {{"the", "{P}", "is", "{I}", "{S}", "."}, Slot::kAdjective},
      {{"this", "{P}", "is", "{I}", "{S}", "."}, Slot::kAdjective},
      {{"i", "{S}", "this", "{P}", "."}, Slot::kVerb},
      {{"the", "{P}", "works", "{I}", "{S}", "."}, Slot::kAdverb},
      {{"overall", ",", "a", "{I}", "{S}", "{P}", "."}, Slot::kAdjective},
      {{"my", "new", "{P}", "is", "{I}", "{S}", "!"}, Slot::kAdjective},
  };
  return t;
}

const std::vector<std::string> kProducts = {
    "phone", "camera", "laptop", "tablet", "keyboard", "mouse", "monitor", "charger", "speaker", "headset",
    "printer", "router", "blender", "toaster", "kettle", "lamp", "watch", "backpack", "jacket", "blanket"};

const std::vector<std::string> kIntensity = {"very", "really", "quite", "so", "extremely", "truly"};

const std::vector<std::string> kPosAdj = {"good", "great",   "excellent", "nice",    "perfect",
                                          "wonderful", "awesome", "amazing", "solid", "lovely"};
const std::vector<std::string> kNegAdj = {"bad",   "terrible", "awful",  "poor",   "horrible",
                                          "cheap", "useless",  "broken", "flimsy", "disappointing"};
const std::vector<std::string> kPosVerb = {"love", "like", "enjoy", "recommend"};
const std::vector<std::string> kNegVerb = {"hate", "dislike", "regret", "returned"};
const std::vector<std::string> kPosAdv = {"well", "perfectly", "smoothly", "reliably"};
const std::vector<std::string> kNegAdv = {"badly", "poorly", "terribly", "slowly"};

const std::vector<std::string>& lexicon(Slot slot, int polarity) {
  switch (slot) {
    case Slot::kAdjective: return polarity > 0 ? kPosAdj : kNegAdj;
    case Slot::kVerb: return polarity > 0 ? kPosVerb : kNegVerb;
    case Slot::kAdverb: return polarity > 0 ? kPosAdv : kNegAdv;
  }
  return kPosAdj;
}

std::vector<std::string> collect(int polarity) {
  std::vector<std::string> out;
  for (Slot s : {Slot::kAdjective, Slot::kVerb, Slot::kAdverb}) {
    const auto& l = lexicon(s, polarity);
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

}  // namespace

std::size_t review_template_count() { return templates().size(); }
std::size_t review_product_count() { return kProducts.size(); }
std::size_t review_intensity_count() { return kIntensity.size(); }

Review render_review(std::size_t templ, std::size_t product, std::size_t intensity, std::size_t word, int polarity) {
  if (templ >= templates().size() || product >= kProducts.size() || intensity >= kIntensity.size()) {
    throw Error("render_review: slot index out of range");
  }
  const Template& t = templates()[templ];
  const auto& words = lexicon(t.slot, polarity);
  Review r;
  r.polarity = polarity > 0 ? 1 : -1;
  r.templ = templ;
  r.product = product;
  r.intensity = intensity;
  r.word = word % words.size();
  for (const auto& piece : t.pattern) {
    if (piece == "{P}") r.tokens.push_back(kProducts[product]);
    else if (piece == "{I}") r.tokens.push_back(kIntensity[intensity]);
    else if (piece == "{S}") r.tokens.push_back(words[r.word]);
    else r.tokens.push_back(piece);
  }
  return r;
}

std::vector<Review> synthesize_reviews(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::vector<Review> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t templ = pick(templates().size());
    const std::size_t product = pick(kProducts.size());
    const std::size_t intensity = pick(kIntensity.size());
    const int polarity = pick(2) == 0 ? 1 : -1;
    const std::size_t word = pick(lexicon(templates()[templ].slot, polarity).size());
    out.push_back(render_review(templ, product, intensity, word, polarity));
  }
  return out;
}

std::span<const std::string> positive_words() {
  static const std::vector<std::string> words = collect(1);
  return words;
}

std::span<const std::string> negative_words() {
  static const std::vector<std::string> words = collect(-1);
  return words;
}

int polarity_of(std::span<const std::string> tokens) {
  auto has_any = [&](std::span<const std::string> lex) {
    return std::any_of(tokens.begin(), tokens.end(),
                       [&](const std::string& t) { return std::find(lex.begin(), lex.end(), t) != lex.end(); });
  };
  const bool pos = has_any(positive_words());
  const bool neg = has_any(negative_words());
  if (pos == neg) return 0;
  return pos ? 1 : -1;
}

}  // namespace muforge::corpus
