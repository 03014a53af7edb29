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

#include "muforge/latent.hpp"

#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "muforge/error.hpp"
#include "muforge/evaluation.hpp"

namespace muforge::latent {

namespace {

// Wide enough to hold the exact sum of any handful of doubles.
using Exact = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<2400, boost::multiprecision::digit_base_2, void, std::int32_t, -4000, 4000>,
    boost::multiprecision::et_off>;

void check_dims(const LatentPoint& a, const LatentPoint& b, const char* what) {
  if (a.z.rows() != 1 || b.z.rows() != 1 || a.dim() != b.dim()) {
    throw ShapeError(std::string(what) + ": latent dimensions differ, " + a.z.shape_string() + " vs " +
                     b.z.shape_string());
  }
}

Array round_terms(const std::vector<LatentPoint::Term>& terms, std::size_t dim) {
  Array out(1, dim);
  for (std::size_t k = 0; k < dim; ++k) {
    Exact sum = 0;
    for (const auto& t : terms) {
      if (t.sign > 0) sum += Exact(t.value[k]);
      else sum -= Exact(t.value[k]);
    }
    out(0, k) = sum.convert_to<Real>();
  }
  return out;
}

void append(std::vector<LatentPoint::Term>& out, const LatentPoint& p, int sign) {
  for (const auto& t : p.terms) out.push_back({t.sign * sign, t.value});
}

}  // namespace

LatentPoint LatentPoint::from(const Array& z, Provenance provenance, std::string source) {
  if (z.rows() != 1 || z.cols() == 0) throw ShapeError("latent point must be a 1 x K row, got " + z.shape_string());
  if (!z.all_finite()) throw NumericError("latent point has non-finite entries");
  LatentPoint p;
  p.z = z;
  p.provenance = provenance;
  p.source = std::move(source);
  std::vector<double> v(z.cols());
  for (std::size_t k = 0; k < z.cols(); ++k) v[k] = static_cast<double>(z(0, k));
  p.terms.push_back({1, std::move(v)});
  return p;
}

LatentPoint encode_to_latent(const model::Params& params, const model::ModelConfig& config,
                             const corpus::Vocabulary& vocab, const Sentence& sentence, std::size_t max_len) {
  const std::vector<std::vector<corpus::TokenId>> rows{vocab.encode(sentence, max_len)};
  const auto batch = corpus::make_batch(rows);
  const auto post = model::encode(params, config, batch);
  std::string text;
  for (const auto& tok : sentence) text += (text.empty() ? "" : " ") + tok;
  return LatentPoint::from(post.mu, Provenance::kEncoded, std::move(text));
}

Sentence decode_greedy(const model::Params& params, const model::ModelConfig& config, const corpus::Vocabulary& vocab,
                       const Array& z, std::size_t max_len) {
  const auto rows = model::generate(params, config, z, max_len, model::DecodeMode::argmax(), std::uint64_t{0});
  return eval::to_sentence(rows.front(), vocab);
}

Array interpolate_point(const Array& z1, const Array& z2, double t) {
  if (!z1.same_shape(z2)) throw ShapeError("interpolate: " + z1.shape_string() + " vs " + z2.shape_string());
  const auto tr = static_cast<Real>(t);
  const Real tc = static_cast<Real>(1.0 - t);
  Array out(z1.rows(), z1.cols());
  for (std::size_t k = 0; k < z1.size(); ++k) {
    // Two separate roundings; a fused multiply-add would break the endpoints.
    volatile Real a = z1.data()[k] * tr;
    volatile Real b = z2.data()[k] * tc;
    out.data()[k] = a + b;
  }
  return out;
}

std::vector<HomotopyStep> interpolate(const model::Params& params, const model::ModelConfig& config,
                                      const corpus::Vocabulary& vocab, const LatentPoint& z1, const LatentPoint& z2,
                                      std::size_t steps, std::size_t max_len) {
  check_dims(z1, z2, "interpolate");
  if (steps < 2) throw Error("interpolate: steps must be >= 2");
  std::vector<HomotopyStep> out;
  for (std::size_t i = 0; i < steps; ++i) {
    HomotopyStep s;
    s.t = static_cast<double>(i) / static_cast<double>(steps - 1);
    s.point = LatentPoint::from(interpolate_point(z1.z, z2.z, s.t), Provenance::kArithmetic);
    s.sentence = decode_greedy(params, config, vocab, s.point.z, max_len);
    out.push_back(std::move(s));
  }
  return out;
}

LatentPoint transfer_vector(const LatentPoint& z_a, const LatentPoint& z_p, const LatentPoint& z_q) {
  check_dims(z_a, z_p, "attribute_transfer");
  check_dims(z_a, z_q, "attribute_transfer");
  LatentPoint out;
  out.provenance = Provenance::kArithmetic;
  append(out.terms, z_a, 1);
  append(out.terms, z_q, 1);
  append(out.terms, z_p, -1);
  out.z = round_terms(out.terms, z_a.dim());
  if (!out.z.all_finite()) throw NumericError("attribute_transfer: result overflows");
  return out;
}

TransferResult attribute_transfer(const model::Params& params, const model::ModelConfig& config,
                                  const corpus::Vocabulary& vocab, const LatentPoint& z_a, const LatentPoint& z_p,
                                  const LatentPoint& z_q, std::size_t max_len) {
  TransferResult r;
  r.point = transfer_vector(z_a, z_p, z_q);
  r.sentence = decode_greedy(params, config, vocab, r.point.z, max_len);
  return r;
}

std::string homotopy_table(const std::vector<HomotopyStep>& steps) {
  std::ostringstream os;
  for (const auto& s : steps) os << s.t << '\t' << corpus::detokenize(s.sentence) << '\n';
  return os.str();
}

std::string transfer_table(const std::vector<std::pair<Sentence, Sentence>>& rows) {
  std::ostringstream os;
  for (const auto& [a, b] : rows) os << corpus::detokenize(a) << '\t' << corpus::detokenize(b) << '\n';
  return os.str();
}

}  // namespace muforge::latent
