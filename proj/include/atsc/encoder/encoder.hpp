/*
 * Copyright 2026 The ATSC Lab Authors
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

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "atsc/nn/ops.hpp"
#include "atsc/nn/parameters.hpp"
#include "atsc/nn/tensor.hpp"

namespace atsc::encoder {

using nn::Index;
using nn::Mask;
using nn::Matrix;
using nn::Shape;
using nn::Tape;
using nn::Tensor;

enum class Pooling { Mean, First };

struct EncoderConfig {
  Index obs_dim = 0;
  Index d_model = 64;
  Index heads = 4;
  Index d_ff = 128;
  Index blocks = 2;
  Index max_history = 20;
  Pooling pooling = Pooling::Mean;
  double ln_eps = 1e-5;

  void validate() const;
};

inline void EncoderConfig::validate() const {
  if (obs_dim <= 0 || d_model <= 0 || d_ff <= 0 || blocks < 0 || max_history <= 0 || heads <= 0) {
    throw std::invalid_argument("encoder: all sizes must be positive");
  }
  if (d_model % heads != 0) throw std::invalid_argument("encoder: d_model must be divisible by heads");
  if (d_model % 2 != 0) throw std::invalid_argument("encoder: d_model must be even for the sinusoidal code");
}

template <typename S>
struct AttentionParams {
  Tensor<S> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename S>
struct BlockParams {
  AttentionParams<S> attn;
  Tensor<S> ln1_gain, ln1_bias;
  Tensor<S> ff1_w, ff1_b, ff2_w, ff2_b;
  Tensor<S> ln2_gain, ln2_bias;
};

template <typename S>
struct EncoderParams {
  EncoderConfig config;
  Tensor<S> embed_w, embed_b;
  std::vector<BlockParams<S>> blocks;

  /// Every trainable tensor under a stable dotted name.
  nn::ParameterList<S> parameters() const {
    nn::ParameterList<S> out{{"embed.w", embed_w}, {"embed.b", embed_b}};
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i) + ".";
      const auto& b = blocks[i];
      out.insert(out.end(), {{p + "attn.wq", b.attn.wq},   {p + "attn.bq", b.attn.bq},   {p + "attn.wk", b.attn.wk},
                             {p + "attn.bk", b.attn.bk},   {p + "attn.wv", b.attn.wv},   {p + "attn.bv", b.attn.bv},
                             {p + "attn.wo", b.attn.wo},   {p + "attn.bo", b.attn.bo},   {p + "ln1.gain", b.ln1_gain},
                             {p + "ln1.bias", b.ln1_bias}, {p + "ff1.w", b.ff1_w},       {p + "ff1.b", b.ff1_b},
                             {p + "ff2.w", b.ff2_w},       {p + "ff2.b", b.ff2_b},       {p + "ln2.gain", b.ln2_gain},
                             {p + "ln2.bias", b.ln2_bias}});
    }
    return out;
  }

  EncoderParams clone() const {
    EncoderParams c = *this;
    c.embed_w = embed_w.clone();
    c.embed_b = embed_b.clone();
    for (auto& b : c.blocks) {
      for (Tensor<S>* t : {&b.attn.wq, &b.attn.bq, &b.attn.wk, &b.attn.bk, &b.attn.wv, &b.attn.bv, &b.attn.wo,
                           &b.attn.bo, &b.ln1_gain, &b.ln1_bias, &b.ff1_w, &b.ff1_b, &b.ff2_w, &b.ff2_b,
                           &b.ln2_gain, &b.ln2_bias}) {
        *t = t->clone();
      }
    }
    return c;
  }
};

template <typename S>
EncoderParams<S> init_encoder(const EncoderConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const Index d = cfg.d_model;
  EncoderParams<S> p;
  p.config = cfg;
  p.embed_w = nn::uniform_parameter<S>({cfg.obs_dim, d}, cfg.obs_dim, rng);
  p.embed_b = nn::uniform_parameter<S>({d}, cfg.obs_dim, rng);
  for (Index i = 0; i < cfg.blocks; ++i) {
    BlockParams<S> b;
    auto lin = [&](Tensor<S>& w, Tensor<S>& bias, Index in, Index out) {
      w = nn::uniform_parameter<S>({in, out}, in, rng);
      bias = nn::uniform_parameter<S>({out}, in, rng);
    };
    lin(b.attn.wq, b.attn.bq, d, d);
    lin(b.attn.wk, b.attn.bk, d, d);
    lin(b.attn.wv, b.attn.bv, d, d);
    lin(b.attn.wo, b.attn.bo, d, d);
    b.ln1_gain = nn::constant_parameter<S>({d}, S(1));
    b.ln1_bias = nn::constant_parameter<S>({d}, S(0));
    lin(b.ff1_w, b.ff1_b, d, cfg.d_ff);
    lin(b.ff2_w, b.ff2_b, cfg.d_ff, d);
    b.ln2_gain = nn::constant_parameter<S>({d}, S(1));
    b.ln2_bias = nn::constant_parameter<S>({d}, S(0));
    p.blocks.push_back(std::move(b));
  }
  return p;
}

/// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(same angle).
template <typename S>
Matrix<S> positional_encoding(Index len, Index d) {
  if (d % 2 != 0) throw std::invalid_argument("positional_encoding: d must be even, got " + std::to_string(d));
  Matrix<S> pe(len, d);
  for (Index pos = 0; pos < len; ++pos) {
    for (Index i = 0; i < d / 2; ++i) {
      const double angle = static_cast<double>(pos) / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
      pe(pos, 2 * i) = static_cast<S>(std::sin(angle));
      pe(pos, 2 * i + 1) = static_cast<S>(std::cos(angle));
    }
  }
  return pe;
}

/// Observation history ordered current-first, zero rows for padding.
template <typename S>
struct PaddedHistory {
  Matrix<S> tokens;  // [L x obs_dim]
  std::vector<bool> mask;
  std::size_t true_length = 0;
};

/// Checks the reversed-then-padded layout: a non-empty prefix of trues.
template <typename S>
void validate_history(const PaddedHistory<S>& h) {
  if (h.mask.empty() || !h.mask[0]) throw std::invalid_argument("history: the current observation must be present");
  if (static_cast<Index>(h.mask.size()) != h.tokens.rows()) throw nn::ShapeError("history: mask length != token rows");
  std::size_t n = 0;
  while (n < h.mask.size() && h.mask[n]) ++n;
  for (std::size_t i = n; i < h.mask.size(); ++i) {
    if (h.mask[i]) throw std::invalid_argument("history: mask is not a prefix of trues");
  }
  if (n != h.true_length) throw std::invalid_argument("history: true_length disagrees with mask");
}

/// Key-masked multi-head self attention over B sequences stacked as
/// [(B*L) x d], followed by the output projection.
template <typename S>
Tensor<S> multi_head_attention(Tape<S>& tape, const Tensor<S>& x, const Mask& mask, const AttentionParams<S>& p,
                               Index heads) {
  const auto q = nn::affine(tape, x, p.wq, p.bq);
  const auto k = nn::affine(tape, x, p.wk, p.bk);
  const auto v = nn::affine(tape, x, p.wv, p.bv);
  return nn::affine(tape, nn::batched_attention(tape, q, k, v, mask, heads), p.wo, p.bo);
}

/// Post-norm block: LN(x + attn(x)), then LN(h + FF(h)).
template <typename S>
Tensor<S> transformer_block(Tape<S>& tape, const Tensor<S>& x, const Mask& mask, const BlockParams<S>& p,
                            const EncoderConfig& cfg) {
  const S eps = static_cast<S>(cfg.ln_eps);
  const auto a = multi_head_attention(tape, x, mask, p.attn, cfg.heads);
  const auto h = nn::layer_norm(tape, nn::add(tape, x, a), p.ln1_gain, p.ln1_bias, eps);
  const auto f = nn::affine(tape, nn::relu(tape, nn::affine(tape, h, p.ff1_w, p.ff1_b)), p.ff2_w, p.ff2_b);
  return nn::layer_norm(tape, nn::add(tape, h, f), p.ln2_gain, p.ln2_bias, eps);
}

template <typename S>
Tensor<S> masked_mean_pool(Tape<S>& tape, const Tensor<S>& x, const Mask& mask) {
  return nn::masked_mean_rows(tape, x, mask);
}

/// Embeds [(B*L) x obs] tokens and adds the positional code of each slot.
template <typename S>
Tensor<S> embed_with_position(Tape<S>& tape, const Tensor<S>& tokens, Index len, const EncoderParams<S>& p) {
  const auto e = nn::affine(tape, tokens, p.embed_w, p.embed_b);
  const Matrix<S> pe = positional_encoding<S>(len, p.config.d_model);
  Matrix<S> tiled(e.rows(), e.cols());
  for (Index r = 0; r < e.rows(); ++r) tiled.row(r) = pe.row(r % len);
  return nn::add(tape, e, Tensor<S>(e.shape(), std::move(tiled)));
}

/// B histories of length L stacked as [(B*L) x obs] with a [B x L] mask.
/// Returns the [B x d] messages.
template <typename S>
Tensor<S> encode_batch(Tape<S>& tape, const Tensor<S>& tokens, const Mask& mask, const EncoderParams<S>& p) {
  const Index len = mask.cols();
  if (tokens.rows() != mask.rows() * len || tokens.cols() != p.config.obs_dim) {
    throw nn::ShapeError("encode_batch: tokens " + nn::shape_string(tokens.shape()) + " do not match mask " +
                         std::to_string(mask.rows()) + "x" + std::to_string(len));
  }
  // Padded rows are cleared so that even non-finite filler cannot leak
  // through a zero attention weight (0 * inf is NaN).
  Tensor<S> clean = tokens;
  if (!mask.all()) {
    Matrix<S> v = tokens.value();
    for (Index r = 0; r < v.rows(); ++r) {
      if (!mask(r / len, r % len)) v.row(r).setZero();
    }
    clean = Tensor<S>(tokens.shape(), std::move(v));
  }
  auto x = embed_with_position(tape, clean, len, p);
  for (const auto& b : p.blocks) x = transformer_block(tape, x, mask, b, p.config);
  if (p.config.pooling == Pooling::First) {
    Mask first = Mask::Constant(mask.rows(), len, false);
    first.col(0).setConstant(true);
    return masked_mean_pool(tape, x, first);
  }
  return masked_mean_pool(tape, x, mask);
}

template <typename S>
Mask history_mask(const PaddedHistory<S>& h) {
  Mask m(1, static_cast<Index>(h.mask.size()));
  for (std::size_t i = 0; i < h.mask.size(); ++i) m(0, static_cast<Index>(i)) = h.mask[i];
  return m;
}

/// Message of one history, shape [1 x d].
template <typename S>
Tensor<S> encode(Tape<S>& tape, const PaddedHistory<S>& h, const EncoderParams<S>& p) {
  validate_history(h);
  return encode_batch(tape, Tensor<S>(h.tokens), history_mask(h), p);
}

}  // namespace atsc::encoder
