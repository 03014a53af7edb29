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
#include <span>
#include <string>
#include <vector>

#include "muforge/corpus.hpp"

namespace muforge::corpus {

// Template-grammar product reviews. Each sentence is built from a template, a
// product noun, an intensity adverb and one sentiment-bearing word, so the
// latent factors of every sentence are known by construction.
struct Review {
  Sentence tokens;
  int polarity = 0;  // +1 or -1
  std::size_t templ = 0;
  std::size_t product = 0;
  std::size_t intensity = 0;
  std::size_t word = 0;
};

std::size_t review_template_count();
std::size_t review_product_count();
std::size_t review_intensity_count();

/// Renders one review. `word` indexes the sentiment slot of the template and
/// is paired across polarities, so flipping `polarity` yields the same review
/// with opposite sentiment.
Review render_review(std::size_t templ, std::size_t product, std::size_t intensity, std::size_t word, int polarity);

std::vector<Review> synthesize_reviews(std::size_t count, std::uint64_t seed);

std::span<const std::string> positive_words();
std::span<const std::string> negative_words();

/// +1 if the sentence contains positive words only, -1 for negative only,
/// 0 for neither or both.
int polarity_of(std::span<const std::string> tokens);

}  // namespace muforge::corpus
