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
#include <cstdint>
#include <span>
#include <vector>

#include "atsc/nn/parameters.hpp"
#include "atsc/nn/tensor.hpp"

namespace atsc::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive moment estimation state, one moment pair per parameter.
template <typename S>
struct OptimizerState {
  AdamConfig config;
  std::vector<Matrix<S>> first_moment;
  std::vector<Matrix<S>> second_moment;
  std::uint64_t step = 0;
};

template <typename S>
OptimizerState<S> make_optimizer(std::span<const Tensor<S>> params, AdamConfig config = {}) {
  OptimizerState<S> opt;
  opt.config = config;
  for (const auto& p : params) {
    opt.first_moment.push_back(Matrix<S>::Zero(p.rows(), p.cols()));
    opt.second_moment.push_back(Matrix<S>::Zero(p.rows(), p.cols()));
  }
  return opt;
}

/// One bias-corrected update: p -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename S>
void adam_step(std::span<const Tensor<S>> params, std::span<const Matrix<S>> grads, OptimizerState<S>& opt) {
  if (params.size() != grads.size() || params.size() != opt.first_moment.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i].value();
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() || opt.first_moment[i].rows() != p.rows() ||
        opt.first_moment[i].cols() != p.cols()) {
      throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
  }
  ++opt.step;
  const auto& c = opt.config;
  const S b1 = static_cast<S>(c.beta1);
  const S b2 = static_cast<S>(c.beta2);
  const S corr1 = static_cast<S>(1.0 - std::pow(c.beta1, static_cast<double>(opt.step)));
  const S corr2 = static_cast<S>(1.0 - std::pow(c.beta2, static_cast<double>(opt.step)));
  const S lr = static_cast<S>(c.learning_rate);
  const S eps = static_cast<S>(c.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = opt.first_moment[i];
    auto& v = opt.second_moment[i];
    const auto& g = grads[i];
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
    params[i].value_mut().array() -= lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
  }
}

/// Uses each parameter's own gradient buffer.
template <typename S>
void adam_step(std::span<const Tensor<S>> params, OptimizerState<S>& opt) {
  std::vector<Matrix<S>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.push_back(p.grad());
  adam_step<S>(params, std::span<const Matrix<S>>(grads), opt);
}

/// Rescales gradients so their global L2 norm is at most max_norm. Returns the
/// norm before clipping.
template <typename S>
S clip_grad_norm(std::span<const Tensor<S>> params, S max_norm) {
  S sq = 0;
  for (const auto& p : params) sq += p.grad().squaredNorm();
  const S norm = std::sqrt(sq);
  if (max_norm > S(0) && norm > max_norm) {
    const S f = max_norm / norm;
    for (const auto& p : params) p.grad_mut() *= f;
  }
  return norm;
}

}  // namespace atsc::nn
