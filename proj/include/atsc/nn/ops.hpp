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

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "atsc/nn/tensor.hpp"

namespace atsc::nn {

namespace detail {

template <typename S>
bool any_requires_grad(std::initializer_list<const Tensor<S>*> inputs) {
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<S>* t) { return t->requires_grad(); });
}

template <typename S>
Tensor<S> make_output(Tape<S>& tape, Shape shape, Matrix<S> value, bool needs_grad) {
  return Tensor<S>(std::move(shape), std::move(value), tape.recording() && needs_grad);
}

inline Shape with_last(Shape s, Index last) {
  if (s.empty()) return {last};
  s.back() = last;
  return s;
}

inline Shape with_rows(const Shape& s, Index rows) {
  if (s.size() <= 1) return s;
  return {rows, s.back()};
}

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

}  // namespace detail

/// C = A·B over the last axis of A. B must be rank 2.
template <typename S>
Tensor<S> matmul(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  if (b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Matrix<S> c(a.rows(), b.cols());
  c.noalias() = a.value() * b.value();
  auto out = detail::make_output(tape, detail::with_last(a.shape(), b.cols()), std::move(c),
                                 detail::any_requires_grad<S>({&a, &b}));
  if (out.requires_grad()) {
    tape.record(out, [a, b, out] {
      if (a.requires_grad()) a.grad_mut().noalias() += out.grad() * b.value().transpose();
      if (b.requires_grad()) b.grad_mut().noalias() += a.value().transpose() * out.grad();
    });
  }
  return out;
}

template <typename S>
Tensor<S> transpose(Tape<S>& tape, const Tensor<S>& a) {
  if (a.rank() != 2) throw ShapeError("transpose needs a rank-2 tensor, got " + shape_string(a.shape()));
  auto out = detail::make_output(tape, Shape{a.cols(), a.rows()}, Matrix<S>(a.value().transpose()), a.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [a, out] { a.grad_mut() += out.grad().transpose(); });
  }
  return out;
}

template <typename S>
Tensor<S> add(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_same_shape(a, b, "add");
  auto out = detail::make_output(tape, a.shape(), Matrix<S>(a.value() + b.value()),
                                 detail::any_requires_grad<S>({&a, &b}));
  if (out.requires_grad()) {
    tape.record(out, [a, b, out] {
      if (a.requires_grad()) a.grad_mut() += out.grad();
      if (b.requires_grad()) b.grad_mut() += out.grad();
    });
  }
  return out;
}

template <typename S>
Tensor<S> sub(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_same_shape(a, b, "sub");
  auto out = detail::make_output(tape, a.shape(), Matrix<S>(a.value() - b.value()),
                                 detail::any_requires_grad<S>({&a, &b}));
  if (out.requires_grad()) {
    tape.record(out, [a, b, out] {
      if (a.requires_grad()) a.grad_mut() += out.grad();
      if (b.requires_grad()) b.grad_mut() -= out.grad();
    });
  }
  return out;
}

/// Elementwise product.
template <typename S>
Tensor<S> mul(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_same_shape(a, b, "mul");
  auto out = detail::make_output(tape, a.shape(), Matrix<S>(a.value().cwiseProduct(b.value())),
                                 detail::any_requires_grad<S>({&a, &b}));
  if (out.requires_grad()) {
    tape.record(out, [a, b, out] {
      if (a.requires_grad()) a.grad_mut() += out.grad().cwiseProduct(b.value());
      if (b.requires_grad()) b.grad_mut() += out.grad().cwiseProduct(a.value());
    });
  }
  return out;
}

template <typename S>
Tensor<S> scale(Tape<S>& tape, const Tensor<S>& a, S factor) {
  auto out = detail::make_output(tape, a.shape(), Matrix<S>(a.value() * factor), a.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [a, out, factor] { a.grad_mut() += out.grad() * factor; });
  }
  return out;
}

/// Adds a [n] bias to every row of a [... x n] tensor.
template <typename S>
Tensor<S> add_bias(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not fit " + shape_string(a.shape()));
  }
  Matrix<S> v = a.value();
  v.rowwise() += bias.value().row(0);
  auto out = detail::make_output(tape, a.shape(), std::move(v), detail::any_requires_grad<S>({&a, &bias}));
  if (out.requires_grad()) {
    tape.record(out, [a, bias, out] {
      if (a.requires_grad()) a.grad_mut() += out.grad();
      if (bias.requires_grad()) bias.grad_mut() += out.grad().colwise().sum();
    });
  }
  return out;
}

/// x·W + b.
template <typename S>
Tensor<S> affine(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  return add_bias(tape, matmul(tape, x, w), b);
}

template <typename S>
Tensor<S> relu(Tape<S>& tape, const Tensor<S>& a) {
  auto out = detail::make_output(tape, a.shape(), Matrix<S>(a.value().cwiseMax(S(0))), a.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [a, out] {
      a.grad_mut().array() += (a.value().array() > S(0)).select(out.grad().array(), S(0));
    });
  }
  return out;
}

template <typename S>
Tensor<S> sum(Tape<S>& tape, const Tensor<S>& a) {
  Matrix<S> v(1, 1);
  v(0, 0) = a.value().sum();
  auto out = detail::make_output(tape, Shape{}, std::move(v), a.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [a, out] { a.grad_mut().array() += out.grad()(0, 0); });
  }
  return out;
}

template <typename S>
Tensor<S> mean(Tape<S>& tape, const Tensor<S>& a) {
  return scale(tape, sum(tape, a), S(1) / static_cast<S>(a.size()));
}

/// Concatenates along the last axis; all parts need the same row count.
template <typename S>
Tensor<S> concat(Tape<S>& tape, std::span<const Tensor<S>> parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  const Index rows = parts.front().rows();
  Index cols = 0;
  bool needs_grad = false;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat: row counts differ");
    cols += p.cols();
    needs_grad = needs_grad || p.requires_grad();
  }
  Matrix<S> v(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  auto out = detail::make_output(tape, detail::with_last(parts.front().shape(), cols), std::move(v), needs_grad);
  if (out.requires_grad()) {
    std::vector<Tensor<S>> held(parts.begin(), parts.end());
    tape.record(out, [held = std::move(held), out] {
      Index at = 0;
      for (const auto& p : held) {
        if (p.requires_grad()) p.grad_mut() += out.grad().middleCols(at, p.cols());
        at += p.cols();
      }
    });
  }
  return out;
}

template <typename S>
Tensor<S> concat(Tape<S>& tape, std::initializer_list<Tensor<S>> parts) {
  std::vector<Tensor<S>> v(parts);
  return concat<S>(tape, std::span<const Tensor<S>>(v));
}

template <typename S>
Tensor<S> slice_cols(Tape<S>& tape, const Tensor<S>& a, Index begin, Index count) {
  if (begin < 0 || count <= 0 || begin + count > a.cols()) throw ShapeError("slice_cols out of range");
  auto out = detail::make_output(tape, detail::with_last(a.shape(), count),
                                 Matrix<S>(a.value().middleCols(begin, count)), a.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [a, out, begin, count] { a.grad_mut().middleCols(begin, count) += out.grad(); });
  }
  return out;
}

template <typename S>
Tensor<S> slice_rows(Tape<S>& tape, const Tensor<S>& a, Index begin, Index count) {
  if (begin < 0 || count <= 0 || begin + count > a.rows()) throw ShapeError("slice_rows out of range");
  const Shape shape = a.rank() <= 1 ? a.shape() : Shape{count, a.cols()};
  auto out = detail::make_output(tape, shape, Matrix<S>(a.value().middleRows(begin, count)), a.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [a, out, begin, count] { a.grad_mut().middleRows(begin, count) += out.grad(); });
  }
  return out;
}

namespace detail {

// Softmax of one row restricted to mask; masked entries are exactly 0 and do
// not influence the unmasked ones.
template <typename S, typename Row, typename MaskRow, typename OutRow>
void masked_softmax_row(const Row& x, const MaskRow& m, OutRow&& out) {
  S mx = -std::numeric_limits<S>::infinity();
  for (Index c = 0; c < x.size(); ++c) {
    if (m(c)) mx = std::max(mx, x(c));
  }
  S total = 0;
  for (Index c = 0; c < x.size(); ++c) {
    const S e = m(c) ? std::exp(x(c) - mx) : S(0);
    out(c) = e;
    total += e;
  }
  out /= total;
}

}  // namespace detail

/// Row-wise softmax over the last axis restricted to `mask`. A fully masked
/// row throws instead of producing a uniform distribution.
template <typename S>
Tensor<S> masked_softmax(Tape<S>& tape, const Tensor<S>& logits, const Mask& mask) {
  if (mask.rows() != logits.rows() || mask.cols() != logits.cols()) throw ShapeError("masked_softmax: mask shape");
  Matrix<S> p(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    if (!mask.row(r).any()) throw std::invalid_argument("masked_softmax: row " + std::to_string(r) + " is fully masked");
    detail::masked_softmax_row<S>(logits.value().row(r), mask.row(r), p.row(r));
  }
  auto out = detail::make_output(tape, logits.shape(), std::move(p), logits.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [logits, out] {
      const auto& p = out.value();
      const auto& g = out.grad();
      const auto dot = (g.cwiseProduct(p)).rowwise().sum();
      logits.grad_mut() += (p.array() * (g.colwise() - dot).array()).matrix();
    });
  }
  return out;
}

/// Per last-axis slice: (x - mean) / sqrt(var + eps) * gain + bias, with the
/// population variance.
template <typename S>
Tensor<S> layer_norm(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias, S eps) {
  const Index d = x.cols();
  if (gain.size() != d || bias.size() != d) throw ShapeError("layer_norm: gain/bias size");
  Matrix<S> xhat(x.rows(), d);
  RowVector<S> inv(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const auto row = x.value().row(r);
    const S mu = row.mean();
    const S var = (row.array() - mu).square().mean();
    inv(r) = S(1) / std::sqrt(var + eps);
    xhat.row(r) = (row.array() - mu) * inv(r);
  }
  Matrix<S> y = xhat.array().rowwise() * gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  auto out = detail::make_output(tape, x.shape(), std::move(y), detail::any_requires_grad<S>({&x, &gain, &bias}));
  if (out.requires_grad()) {
    tape.record(out, [x, gain, bias, out, xhat = std::move(xhat), inv = std::move(inv)] {
      const auto& g = out.grad();
      if (gain.requires_grad()) gain.grad_mut() += g.cwiseProduct(xhat).colwise().sum();
      if (bias.requires_grad()) bias.grad_mut() += g.colwise().sum();
      if (x.requires_grad()) {
        const Index d = xhat.cols();
        Matrix<S> dxhat = g.array().rowwise() * gain.value().row(0).array();
        for (Index r = 0; r < dxhat.rows(); ++r) {
          const S s1 = dxhat.row(r).sum();
          const S s2 = dxhat.row(r).dot(xhat.row(r));
          x.grad_mut().row(r).array() +=
              (inv(r) / static_cast<S>(d)) * (static_cast<S>(d) * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2);
        }
      }
    });
  }
  return out;
}

/// Mean Huber loss over all elements.
template <typename S>
Tensor<S> huber_loss(Tape<S>& tape, const Tensor<S>& pred, const Tensor<S>& target, S delta = S(1)) {
  if (pred.size() != target.size()) throw ShapeError("huber_loss: size mismatch");
  const auto r = (pred.value().reshaped() - target.value().reshaped()).eval();
  S total = 0;
  for (Index i = 0; i < r.size(); ++i) {
    const S a = std::abs(r(i));
    total += a <= delta ? S(0.5) * r(i) * r(i) : delta * (a - S(0.5) * delta);
  }
  Matrix<S> v(1, 1);
  v(0, 0) = total / static_cast<S>(r.size());
  auto out = detail::make_output(tape, Shape{}, std::move(v), detail::any_requires_grad<S>({&pred, &target}));
  if (out.requires_grad()) {
    tape.record(out, [pred, target, out, r, delta] {
      const S scale = out.grad()(0, 0) / static_cast<S>(r.size());
      const auto d = (r.array().min(delta).max(-delta) * scale).eval();
      if (pred.requires_grad()) pred.grad_mut().reshaped() += d.matrix();
      if (target.requires_grad()) target.grad_mut().reshaped() -= d.matrix();
    });
  }
  return out;
}

/// Picks a[r, index[r]] for every row; the result has shape [rows].
template <typename S>
Tensor<S> gather(Tape<S>& tape, const Tensor<S>& a, std::span<const std::size_t> index) {
  if (static_cast<Index>(index.size()) != a.rows()) throw ShapeError("gather: one index per row required");
  Matrix<S> v(1, a.rows());
  for (Index r = 0; r < a.rows(); ++r) {
    if (static_cast<Index>(index[r]) >= a.cols()) throw ShapeError("gather: index out of range");
    v(0, r) = a.value()(r, static_cast<Index>(index[r]));
  }
  auto out = detail::make_output(tape, Shape{a.rows()}, std::move(v), a.requires_grad());
  if (out.requires_grad()) {
    std::vector<std::size_t> idx(index.begin(), index.end());
    tape.record(out, [a, out, idx = std::move(idx)] {
      for (Index r = 0; r < a.rows(); ++r) a.grad_mut()(r, static_cast<Index>(idx[r])) += out.grad()(0, r);
    });
  }
  return out;
}

/// Mean over the unmasked rows of each of the B segments of a [(B*L) x d]
/// tensor; mask is [B x L]. Result is [B x d].
template <typename S>
Tensor<S> masked_mean_rows(Tape<S>& tape, const Tensor<S>& x, const Mask& mask) {
  const Index batch = mask.rows();
  const Index len = mask.cols();
  if (batch * len != x.rows()) throw ShapeError("masked_mean_rows: mask does not tile the rows");
  Matrix<S> v = Matrix<S>::Zero(batch, x.cols());
  RowVector<S> count(batch);
  for (Index b = 0; b < batch; ++b) {
    count(b) = static_cast<S>(mask.row(b).count());
    if (count(b) == S(0)) throw std::invalid_argument("masked_mean_rows: segment " + std::to_string(b) + " is fully masked");
    for (Index l = 0; l < len; ++l) {
      if (mask(b, l)) v.row(b) += x.value().row(b * len + l);
    }
    v.row(b) /= count(b);
  }
  auto out = detail::make_output(tape, Shape{batch, x.cols()}, std::move(v), x.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [x, out, mask, count] {
      const Index len = mask.cols();
      for (Index b = 0; b < mask.rows(); ++b) {
        for (Index l = 0; l < len; ++l) {
          if (mask(b, l)) x.grad_mut().row(b * len + l) += out.grad().row(b) / count(b);
        }
      }
    });
  }
  return out;
}

/// Scaled dot-product attention for B independent sequences of length L with
/// `heads` heads. Q, K, V are [(B*L) x d]; key_mask is [B x L]. Padded keys get
/// weight exactly 0. Returns the concatenated head outputs, [(B*L) x d].
template <typename S>
Tensor<S> batched_attention(Tape<S>& tape, const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v,
                            const Mask& key_mask, Index heads) {
  const Index batch = key_mask.rows();
  const Index len = key_mask.cols();
  const Index d = q.cols();
  if (heads <= 0 || d % heads != 0) throw ShapeError("batched_attention: model width not divisible by heads");
  if (q.rows() != batch * len || k.rows() != q.rows() || v.rows() != q.rows() || k.cols() != d || v.cols() != d) {
    throw ShapeError("batched_attention: operand shapes disagree");
  }
  const Index dh = d / heads;
  const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
  Matrix<S> o(q.rows(), d);
  std::vector<Matrix<S>> probs(static_cast<std::size_t>(batch * heads));
  for (Index b = 0; b < batch; ++b) {
    if (!key_mask.row(b).any()) throw std::invalid_argument("batched_attention: sequence " + std::to_string(b) + " is fully masked");
    for (Index h = 0; h < heads; ++h) {
      const auto qb = q.value().block(b * len, h * dh, len, dh);
      const auto kb = k.value().block(b * len, h * dh, len, dh);
      const auto vb = v.value().block(b * len, h * dh, len, dh);
      Matrix<S> scores(len, len);
      scores.noalias() = (qb * kb.transpose()) * inv_sqrt;
      Matrix<S>& p = probs[static_cast<std::size_t>(b * heads + h)];
      p.resize(len, len);
      for (Index r = 0; r < len; ++r) detail::masked_softmax_row<S>(scores.row(r), key_mask.row(b), p.row(r));
      o.block(b * len, h * dh, len, dh).noalias() = p * vb;
    }
  }
  auto out = detail::make_output(tape, Shape{q.rows(), d}, std::move(o), detail::any_requires_grad<S>({&q, &k, &v}));
  if (out.requires_grad()) {
    tape.record(out, [q, k, v, out, probs = std::move(probs), batch, len, heads, dh, inv_sqrt] {
      for (Index b = 0; b < batch; ++b) {
        for (Index h = 0; h < heads; ++h) {
          const Matrix<S>& p = probs[static_cast<std::size_t>(b * heads + h)];
          const auto go = out.grad().block(b * len, h * dh, len, dh);
          const auto qb = q.value().block(b * len, h * dh, len, dh);
          const auto kb = k.value().block(b * len, h * dh, len, dh);
          const auto vb = v.value().block(b * len, h * dh, len, dh);
          if (v.requires_grad()) v.grad_mut().block(b * len, h * dh, len, dh).noalias() += p.transpose() * go;
          if (!q.requires_grad() && !k.requires_grad()) continue;
          Matrix<S> dp(len, len);
          dp.noalias() = go * vb.transpose();
          const auto dot = dp.cwiseProduct(p).rowwise().sum().eval();
          Matrix<S> ds = (p.array() * (dp.colwise() - dot).array()).matrix() * inv_sqrt;
          if (q.requires_grad()) q.grad_mut().block(b * len, h * dh, len, dh).noalias() += ds * kb;
          if (k.requires_grad()) k.grad_mut().block(b * len, h * dh, len, dh).noalias() += ds.transpose() * qb;
        }
      }
    });
  }
  return out;
}

/// Index of the largest entry among mask-true positions; ties go to the lowest
/// index. Throws when nothing is unmasked.
template <typename Row, typename MaskRow>
std::size_t masked_argmax(const Row& values, const MaskRow& mask) {
  std::size_t best = 0;
  bool found = false;
  for (std::size_t i = 0; i < static_cast<std::size_t>(values.size()); ++i) {
    if (!mask[i]) continue;
    if (!found || values[i] > values[best]) {
      best = i;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("masked_argmax: no valid entry");
  return best;
}

}  // namespace atsc::nn
