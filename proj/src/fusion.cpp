// Copyright 2026 The TAAF-SNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taaf/fusion.hpp"

#include <cmath>

#include <fmt/format.h>

#include "taaf/error.hpp"

namespace taaf {

const char* fusion_name(FusionKind kind) {
  return kind == FusionKind::kConcatenation ? "concatenation" : "summation";
}

FusionKind parse_fusion(const std::string& s) {
  if (s == "concatenation" || s == "concat") return FusionKind::kConcatenation;
  if (s == "summation" || s == "sum") return FusionKind::kSummation;
  throw ConfigError(fmt::format("unknown fusion strategy '{}'", s));
}

const char* pathway_name(Pathway p) {
  switch (p) {
    case Pathway::kM1: return "m1";
    case Pathway::kM2: return "m2";
    case Pathway::kFused: return "f";
  }
  return "?";
}

Var fuse(const Var& h_m1, const Var& h_m2, FusionKind kind) {
  const Shape& a = h_m1.shape();
  const Shape& b = h_m2.shape();
  if (a.size() != 3 || b.size() != 3 || a[0] != b[0] || a[1] != b[1]) {
    throw DimensionError(fmt::format("fuse: batch/time extents differ: {} vs {}", shape_str(a),
                                     shape_str(b)));
  }
  if (kind == FusionKind::kConcatenation) return concat(h_m1, h_m2, 2);
  if (a[2] != b[2]) {
    throw DimensionError(fmt::format("fuse: summation needs equal widths, got {} and {}", a[2], b[2]));
  }
  return add(h_m1, h_m2);
}

namespace {

Var per_timestep_affine(const Var& h, const Var& weight, const Var& bias) {
  const Shape& sh = h.shape();
  if (sh.size() != 3 || weight.shape().size() != 2 || sh[2] != weight.shape()[0]) {
    throw DimensionError(fmt::format("classifier: features {} vs weight {}", shape_str(sh),
                                     shape_str(weight.shape())));
  }
  const std::size_t classes = weight.shape()[1];
  Var flat = reshape(h, Shape{sh[0] * sh[1], sh[2]});
  Var out = add(matmul(flat, weight), bias);
  return reshape(out, Shape{sh[0], sh[1], classes});
}

}  // namespace

Var classify_multimodal(const Var& fused, const Var& weight, const Var& bias, std::size_t d_m1,
                        FusionKind kind) {
  if (kind == FusionKind::kConcatenation) return per_timestep_affine(fused, weight, bias);
  const std::size_t rows = weight.shape().at(0);
  if (d_m1 * 2 != rows) {
    throw DimensionError(fmt::format("summation fusion needs equal blocks, W has {} rows, m1 {}",
                                     rows, d_m1));
  }
  Var w_sum = add(slice(weight, 0, 0, d_m1), slice(weight, 0, d_m1, d_m1));
  return per_timestep_affine(fused, w_sum, bias);
}

Var classify_unimodal(const Var& h, const Var& weight, const Var& bias, std::size_t d_m1,
                      Modality u) {
  const std::size_t rows = weight.shape().at(0);
  if (d_m1 > rows) throw DimensionError("classify_unimodal: m1 block exceeds weight rows");
  Var block = u == Modality::kM1 ? slice(weight, 0, 0, d_m1) : slice(weight, 0, d_m1, rows - d_m1);
  return per_timestep_affine(h, block, scale(bias, 0.5));
}

Var temporal_attention_per_sample(const Var& logits, const Var& w_query, const Var& w_key) {
  const Shape& sh = logits.shape();
  if (sh.size() != 3) {
    throw DimensionError(fmt::format("temporal_attention: expected [batch x T x C], got {}",
                                     shape_str(sh)));
  }
  if (sh[1] == 0) throw DomainError("temporal_attention: zero timesteps");
  if (!logits.value().all_finite()) throw NumericError("temporal_attention: non-finite logits");
  const Shape& wq = w_query.shape();
  if (wq.size() != 2 || wq[0] != sh[2] || w_key.shape() != wq) {
    throw DimensionError(fmt::format("temporal_attention: heads {} / {} vs logits {}",
                                     shape_str(wq), shape_str(w_key.shape()), shape_str(sh)));
  }
  const std::size_t batch = sh[0], steps = sh[1], classes = sh[2], width = wq[1];
  Var flat = reshape(logits, Shape{batch * steps, classes});
  Var q = reshape(matmul(flat, w_query), Shape{batch, steps, width});
  Var k = reshape(matmul(flat, w_key), Shape{batch, steps, width});
  Var sim = scale(batched_matmul(q, transpose_last(k)), 1.0 / std::sqrt(static_cast<double>(width)));
  Var attn = softmax(sim, 2);
  return mean(attn, 1);
}

Var temporal_attention(const Var& logits, const Var& w_query, const Var& w_key) {
  return mean(temporal_attention_per_sample(logits, w_query, w_key), 0);
}

Var attention_weighted_logits(const Var& logits, const Var& alpha) {
  const Shape& sh = logits.shape();
  const Shape& as = alpha.shape();
  if (sh.size() != 3) {
    throw DimensionError(fmt::format("attention_weighted_logits: logits {}", shape_str(sh)));
  }
  const std::size_t batch = sh[0], steps = sh[1], classes = sh[2];
  Tape& tape = logits.tape();
  Var ones = tape.constant(Tensor(Shape{1, classes}, 1.0));
  if (as == Shape{steps}) {
    Var wide = matmul(reshape(alpha, Shape{steps, 1}), ones);  // [T x C]
    return mul(logits, wide);
  }
  if (as == Shape{batch, steps}) {
    Var wide = matmul(reshape(alpha, Shape{batch * steps, 1}), ones);
    return mul(logits, reshape(wide, Shape{batch, steps, classes}));
  }
  throw DimensionError(fmt::format("attention_weighted_logits: alpha {} does not match {} steps",
                                   shape_str(as), steps));
}

Tensor aggregate_logits(const Tensor& logits, const Tensor& alpha) {
  const Shape& sh = logits.shape();
  if (sh.size() != 3) throw DimensionError("aggregate_logits: expected [batch x T x C]");
  const std::size_t batch = sh[0], steps = sh[1], classes = sh[2];
  const bool shared = alpha.shape() == Shape{steps};
  if (!shared && alpha.shape() != Shape{batch, steps}) {
    throw DimensionError(fmt::format("aggregate_logits: alpha {} vs logits {}",
                                     shape_str(alpha.shape()), shape_str(sh)));
  }
  Tensor out(Shape{batch, classes});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < steps; ++t) {
      const double a = shared ? alpha[t] : alpha[b * steps + t];
      for (std::size_t c = 0; c < classes; ++c)
        out[b * classes + c] += a * logits[(b * steps + t) * classes + c];
    }
  return out;
}

std::vector<int> argmax_rows(const Tensor& rows) {
  if (rows.rank() != 2) throw DimensionError("argmax_rows: expected a matrix");
  const std::size_t n = rows.extent(0), c = rows.extent(1);
  std::vector<int> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (rows[i * c + j] > rows[i * c + best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

SharedClassifier::SharedClassifier(std::size_t d_m1, std::size_t d_m2, std::size_t classes,
                                   std::mt19937_64& rng)
    : d_m1_(d_m1),
      d_m2_(d_m2),
      weight_("classifier.weight",
              glorot_uniform(Shape{d_m1 + d_m2, classes}, d_m1 + d_m2, classes, rng)),
      bias_("classifier.bias", Tensor(Shape{classes})) {
  if (classes < 2) throw ConfigError("classifier needs at least two classes");
}

Var SharedClassifier::multimodal(Tape& tape, const Var& fused, FusionKind kind) {
  return classify_multimodal(fused, tape.bind(weight_), tape.bind(bias_), d_m1_, kind);
}

Var SharedClassifier::unimodal(Tape& tape, const Var& h, Modality u) {
  return classify_unimodal(h, tape.bind(weight_), tape.bind(bias_), d_m1_, u);
}

AttentionHead::AttentionHead(std::string name, std::size_t classes, std::size_t width,
                             std::mt19937_64& rng)
    : w_query_(name + ".wq", Tensor(Shape{classes, width})),
      w_key_(name + ".wk", glorot_uniform(Shape{classes, width}, classes, width, rng)) {
  if (width == 0) throw ConfigError("attention width must be >= 1");
}

Var AttentionHead::scores(Tape& tape, const Var& logits) {
  return temporal_attention(logits, tape.bind(w_query_), tape.bind(w_key_));
}

Var AttentionHead::scores_per_sample(Tape& tape, const Var& logits) {
  return temporal_attention_per_sample(logits, tape.bind(w_query_), tape.bind(w_key_));
}

}  // namespace taaf
