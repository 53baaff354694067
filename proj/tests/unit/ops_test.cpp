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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "atsc/nn/adam.hpp"
#include "atsc/nn/ops.hpp"
#include "atsc/nn/parameters.hpp"
#include "grad_check.hpp"

namespace atsc::nn {
namespace {

using M = Matrix<double>;
using T = Tensor<double>;

M mat(Index r, Index c, std::initializer_list<double> v) {
  M m(r, c);
  Index i = 0;
  for (double x : v) m.data()[i++] = x;
  return m;
}

T random_leaf(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  M m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return T(m, true);
}

Mask random_mask(Index r, Index c, std::mt19937_64& rng) {
  Mask m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = (rng() % 3) != 0;
    m(i, static_cast<Index>(rng() % static_cast<std::uint64_t>(c))) = true;
  }
  return m;
}

void expect_grads_match(const ParameterList<double>& params, const std::function<T(Tape<double>&)>& f,
                        std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const auto r = testing::check_gradients(params, f, 60, rng);
  EXPECT_LT(r.max_rel_error, 1e-5) << r.worst;
}

TEST(Matmul, IdentityAndHandExample) {
  Tape<double> tape;
  const T eye(M::Identity(2, 2));
  const T b(mat(2, 3, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(matmul(tape, eye, b).value(), b.value());
  const auto c = matmul(tape, T(mat(2, 2, {1, 2, 3, 4})), T(mat(2, 1, {5, 6})));
  EXPECT_EQ(c.value(), mat(2, 1, {17, 39}));
  EXPECT_THROW(matmul(tape, b, b), ShapeError);
}

TEST(Matmul, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  const auto a = random_leaf(3, 4, rng);
  const auto b = random_leaf(4, 2, rng);
  expect_grads_match({{"a", a}, {"b", b}}, [&](Tape<double>& t) { return sum(t, matmul(t, a, b)); });
  expect_grads_match({{"a", a}, {"b", b}},
                     [&](Tape<double>& t) { return testing::random_projection(t, matmul(t, a, b), 5); });
}

TEST(MaskedSoftmax, Definition) {
  Tape<double> tape;
  Mask m(1, 3);
  m << true, true, false;
  const auto p = masked_softmax(tape, T(mat(1, 3, {0.5, -1.0, 40.0})), m).value();
  const double z = std::exp(0.5) + std::exp(-1.0);
  EXPECT_NEAR(p(0, 0), std::exp(0.5) / z, 1e-15);
  EXPECT_NEAR(p(0, 1), std::exp(-1.0) / z, 1e-15);
  EXPECT_EQ(p(0, 2), 0.0);
}

TEST(MaskedSoftmax, EqualLogitsAreUniform) {
  Tape<double> tape;
  Mask m(1, 5);
  m << true, false, true, true, false;
  const auto p = masked_softmax(tape, T(M::Constant(1, 5, 3.0)), m).value();
  EXPECT_NEAR(p(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(p(0, 1), 0.0);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(MaskedSoftmax, FullyMaskedRowThrows) {
  Tape<double> tape;
  Mask m = Mask::Constant(2, 3, false);
  m(0, 1) = true;
  EXPECT_THROW(masked_softmax(tape, T(M::Zero(2, 3)), m), std::invalid_argument);
}

TEST(MaskedSoftmax, LargeLogitsStayFinite) {
  Tape<double> tape;
  const Mask m = Mask::Constant(1, 2, true);
  const auto p = masked_softmax(tape, T(mat(1, 2, {1000.0, 999.0})), m).value();
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(MaskedSoftmaxProperty, MaskedLogitsHaveNoInfluence) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index r = 1 + static_cast<Index>(rng() % 4);
    const Index c = 1 + static_cast<Index>(rng() % 7);
    const auto mask = random_mask(r, c, rng);
    M x(r, c);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    M y = x;
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < c; ++j) {
        if (!mask(i, j)) y(i, j) = n(rng) * 100;
      }
    }
    Tape<double> tape(false);
    const auto px = masked_softmax(tape, T(x), mask).value();
    const auto py = masked_softmax(tape, T(y), mask).value();
    ASSERT_EQ(px, py);
    for (Index i = 0; i < r; ++i) ASSERT_NEAR(px.row(i).sum(), 1.0, 1e-12);
  }
}

TEST(MaskedSoftmax, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  const auto x = random_leaf(3, 5, rng);
  const auto mask = random_mask(3, 5, rng);
  expect_grads_match({{"x", x}}, [&](Tape<double>& t) { return testing::random_projection(t, masked_softmax(t, x, mask), 9); });
}

TEST(LayerNorm, Examples) {
  Tape<double> tape;
  const T gain(M::Ones(1, 2));
  const T bias(M::Zero(1, 2));
  const auto y = layer_norm(tape, T(mat(1, 2, {1, 3})), gain, bias, 1e-12).value();
  EXPECT_NEAR(y(0, 0), -1.0, 1e-9);
  EXPECT_NEAR(y(0, 1), 1.0, 1e-9);
  const auto c = layer_norm(tape, T(M::Constant(1, 4, 7.0)), T(M::Ones(1, 4)), T(M::Zero(1, 4)), 1e-5).value();
  EXPECT_LE(c.cwiseAbs().maxCoeff(), std::sqrt(1e-5));
  EXPECT_TRUE(c.allFinite());
}

TEST(LayerNorm, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  const auto x = random_leaf(4, 6, rng);
  const auto g = random_leaf(1, 6, rng);
  const auto b = random_leaf(1, 6, rng);
  expect_grads_match({{"x", x}, {"gain", g}, {"bias", b}},
                     [&](Tape<double>& t) { return testing::random_projection(t, layer_norm(t, x, g, b, 1e-5), 11); });
}

TEST(Backward, SumAndSquare) {
  const T w(mat(1, 3, {1, 2, 3}), true);
  Tape<double> tape;
  tape.backward(sum(tape, w));
  EXPECT_EQ(w.grad(), M::Ones(1, 3));
  w.zero_grad();
  Tape<double> tape2;
  tape2.backward(sum(tape2, mul(tape2, w, w)));
  EXPECT_EQ(w.grad(), mat(1, 3, {2, 4, 6}));
}

TEST(Backward, RepeatedCallsAccumulate) {
  const T w(mat(1, 2, {1, 2}), true);
  Tape<double> tape;
  const auto loss = sum(tape, scale(tape, w, 3.0));
  tape.backward(loss);
  tape.backward(loss);
  EXPECT_EQ(w.grad(), M::Constant(1, 2, 6.0));
}

TEST(Backward, FanOutAccumulates) {
  const T w(mat(1, 2, {1, 2}), true);
  Tape<double> tape;
  const auto y = add(tape, w, w);
  tape.backward(sum(tape, mul(tape, y, w)));  // sum(2 w^2)
  EXPECT_EQ(w.grad(), mat(1, 2, {4, 8}));
}

TEST(Backward, NonScalarLossThrows) {
  const T w(mat(1, 2, {1, 2}), true);
  Tape<double> tape;
  EXPECT_THROW(tape.backward(scale(tape, w, 2.0)), ShapeError);
}

TEST(Backward, NonRecordingTapeStoresNothing) {
  const T w(mat(1, 2, {1, 2}), true);
  Tape<double> tape(false);
  const auto y = sum(tape, w);
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_FALSE(y.requires_grad());
}

TEST(ElementwiseOps, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  const auto a = random_leaf(3, 4, rng);
  const auto b = random_leaf(3, 4, rng);
  const auto bias = random_leaf(1, 4, rng);
  const auto w = random_leaf(4, 2, rng);
  const auto wb = random_leaf(1, 2, rng);
  const ParameterList<double> ps{{"a", a}, {"b", b}, {"bias", bias}, {"w", w}, {"wb", wb}};
  expect_grads_match(ps, [&](Tape<double>& t) {
    auto x = add(t, a, b);
    x = sub(t, x, mul(t, a, b));
    x = scale(t, x, 0.7);
    x = add_bias(t, x, bias);
    x = relu(t, x);
    x = affine(t, x, w, wb);
    x = transpose(t, x);
    return add(t, testing::random_projection(t, x, 3), mean(t, x));
  });
}

TEST(ShapeOps, ConcatAndSlice) {
  Tape<double> tape;
  const T a(mat(2, 2, {1, 2, 3, 4}));
  const T b(mat(2, 1, {5, 6}));
  const auto c = concat(tape, {a, b});
  EXPECT_EQ(c.value(), mat(2, 3, {1, 2, 5, 3, 4, 6}));
  EXPECT_EQ(slice_cols(tape, c, 1, 2).value(), mat(2, 2, {2, 5, 4, 6}));
  EXPECT_EQ(slice_rows(tape, c, 1, 1).value(), mat(1, 3, {3, 4, 6}));
  EXPECT_THROW(slice_cols(tape, c, 2, 2), ShapeError);
}

TEST(ShapeOps, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  const auto a = random_leaf(3, 2, rng);
  const auto b = random_leaf(3, 3, rng);
  expect_grads_match({{"a", a}, {"b", b}}, [&](Tape<double>& t) {
    const auto c = concat(t, {a, b});
    const auto s = concat(t, {slice_cols(t, c, 1, 3), slice_rows(t, c, 0, 3)});
    return testing::random_projection(t, s, 4);
  });
}

TEST(Huber, ValuesAndGradients) {
  Tape<double> tape;
  const T pred(mat(1, 3, {0.5, 3.0, -2.0}), true);
  const T target(mat(1, 3, {0.0, 0.0, 0.0}));
  const auto loss = huber_loss(tape, pred, target, 1.0);
  EXPECT_NEAR(loss.item(), (0.125 + 2.5 + 1.5) / 3.0, 1e-15);
  tape.backward(loss);
  EXPECT_EQ(pred.grad(), mat(1, 3, {0.5 / 3, 1.0 / 3, -1.0 / 3}));
  std::mt19937_64 rng(7);
  const auto p = random_leaf(1, 8, rng);
  const auto y = random_leaf(1, 8, rng);
  expect_grads_match({{"p", p}, {"y", y}}, [&](Tape<double>& t) { return huber_loss(t, p, y, 0.8); });
}

TEST(Gather, PicksOneEntryPerRow) {
  Tape<double> tape;
  const T q(mat(3, 2, {1, 2, 3, 4, 5, 6}), true);
  const std::vector<std::size_t> idx{1, 0, 1};
  const auto g = gather(tape, q, idx);
  EXPECT_EQ(g.value(), mat(1, 3, {2, 3, 6}));
  EXPECT_EQ(g.shape(), (Shape{3}));
  tape.backward(sum(tape, g));
  EXPECT_EQ(q.grad(), mat(3, 2, {0, 1, 1, 0, 0, 1}));
  const std::vector<std::size_t> bad{2, 0, 0};
  EXPECT_THROW(gather(tape, q, bad), ShapeError);
}

TEST(MaskedArgmax, IgnoresMaskedAndBreaksTiesLow) {
  const Eigen::RowVector3d v(5.0, 1.0, 5.0);
  EXPECT_EQ(masked_argmax(v, std::vector<bool>{true, true, true}), 0u);
  EXPECT_EQ(masked_argmax(v, std::vector<bool>{false, true, true}), 2u);
  EXPECT_EQ(masked_argmax(v, std::vector<bool>{false, true, false}), 1u);
  EXPECT_THROW(masked_argmax(v, std::vector<bool>{false, false, false}), std::invalid_argument);
}

TEST(MaskedMeanRows, AveragesValidRowsOnly) {
  Tape<double> tape;
  Mask m(2, 2);
  m << true, true, true, false;
  const auto y = masked_mean_rows(tape, T(mat(4, 1, {1, 3, 10, 99})), m);
  EXPECT_EQ(y.value(), mat(2, 1, {2, 10}));
  std::mt19937_64 rng(8);
  const auto x = random_leaf(6, 3, rng);
  const auto mask = random_mask(2, 3, rng);
  expect_grads_match({{"x", x}}, [&](Tape<double>& t) { return testing::random_projection(t, masked_mean_rows(t, x, mask), 2); });
}

TEST(BatchedAttention, MatchesCompositionalReference) {
  std::mt19937_64 rng(9);
  const Index len = 5;
  const Index d = 6;
  const Index heads = 3;
  const auto q = random_leaf(2 * len, d, rng);
  const auto k = random_leaf(2 * len, d, rng);
  const auto v = random_leaf(2 * len, d, rng);
  const auto mask = random_mask(2, len, rng);
  Tape<double> tape(false);
  const auto fused = batched_attention(tape, q, k, v, mask, heads).value();
  for (Index b = 0; b < 2; ++b) {
    const auto rows = [&](const T& x) { return T(M(x.value().middleRows(b * len, len))); };
    const Mask km = mask.row(b);
    const auto ref = testing::compositional_attention(tape, rows(q), rows(k), rows(v), km, heads).value();
    EXPECT_LT((fused.middleRows(b * len, len) - ref).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(BatchedAttention, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(10);
  const auto q = random_leaf(8, 4, rng);
  const auto k = random_leaf(8, 4, rng);
  const auto v = random_leaf(8, 4, rng);
  const auto mask = random_mask(2, 4, rng);
  expect_grads_match({{"q", q}, {"k", k}, {"v", v}},
                     [&](Tape<double>& t) { return testing::random_projection(t, batched_attention(t, q, k, v, mask, 2), 6); });
}

TEST(OpsProperty, FiniteInputsGiveFiniteOutputs) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    M x(4, 6);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    Tape<double> tape(false);
    const T t(x);
    const auto mask = random_mask(4, 6, rng);
    ASSERT_TRUE(masked_softmax(tape, t, mask).value().allFinite());
    ASSERT_TRUE(layer_norm(tape, t, T(M::Ones(1, 6)), T(M::Zero(1, 6)), 1e-5).value().allFinite());
    ASSERT_TRUE(batched_attention(tape, t, t, t, random_mask(1, 4, rng), 2).value().allFinite());
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  const T p(mat(1, 3, {1, -2, 3}), true);
  std::vector<T> params{p};
  auto opt = make_optimizer<double>(params);
  const M before = p.value();
  for (int i = 0; i < 5; ++i) adam_step<double>(params, opt);
  EXPECT_EQ(p.value(), before);
  EXPECT_EQ(opt.step, 5u);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  const T p(mat(1, 1, {0}), true);
  std::vector<T> params{p};
  AdamConfig c;
  c.learning_rate = 0.01;
  auto opt = make_optimizer<double>(params, c);
  double last = 0;
  for (int i = 0; i < 200; ++i) {
    p.grad_mut().setConstant(0.3);
    const double before = p.value()(0, 0);
    adam_step<double>(params, opt);
    last = before - p.value()(0, 0);
    ASSERT_EQ(opt.step, static_cast<std::uint64_t>(i + 1));
  }
  EXPECT_NEAR(last, 0.01, 1e-8);
}

TEST(Adam, ShapeMismatchThrows) {
  const T p(mat(1, 2, {1, 2}), true);
  std::vector<T> params{p};
  auto opt = make_optimizer<double>(params);
  std::vector<M> grads{M::Zero(2, 2)};
  EXPECT_THROW(adam_step<double>(params, std::span<const M>(grads), opt), ShapeError);
}

TEST(Adam, ClipGradNormRescales) {
  const T p(mat(1, 2, {0, 0}), true);
  p.grad_mut() = mat(1, 2, {3, 4});
  std::vector<T> params{p};
  EXPECT_DOUBLE_EQ(clip_grad_norm<double>(params, 1.0), 5.0);
  EXPECT_NEAR(p.grad().norm(), 1.0, 1e-15);
}

TEST(Parameters, UniformInitWithinFanInBound) {
  std::mt19937_64 rng(1);
  const auto w = uniform_parameter<double>({16, 8}, 16, rng);
  EXPECT_LE(w.value().cwiseAbs().maxCoeff(), 0.25);
  EXPECT_TRUE(w.requires_grad());
  std::mt19937_64 again(1);
  EXPECT_EQ(uniform_parameter<double>({16, 8}, 16, again).value(), w.value());
}

TEST(TensorType, ShapeValidationAndGradAllocation) {
  EXPECT_THROW(T({2, 3}, M::Zero(3, 2)), ShapeError);
  const auto s = T::scalar(2.5);
  EXPECT_EQ(s.rank(), 0u);
  EXPECT_EQ(s.item(), 2.5);
  const auto z = T::zeros({2, 3}, true);
  EXPECT_EQ(z.grad().rows(), 2);
  EXPECT_EQ(T::zeros({2, 3}).grad().size(), 0);
  const auto d = z.detach();
  EXPECT_FALSE(d.requires_grad());
  EXPECT_FALSE(d.same_as(z));
}

}  // namespace
}  // namespace atsc::nn
