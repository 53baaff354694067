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
#include <random>
#include <string>
#include <vector>

#include "atsc/nn/tensor.hpp"

namespace atsc::nn {

template <typename S>
struct NamedTensor {
  std::string name;
  Tensor<S> tensor;
};

template <typename S>
using ParameterList = std::vector<NamedTensor<S>>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) trainable tensor. Draws are taken
/// in double so both scalar profiles consume the generator identically.
template <typename S>
Tensor<S> uniform_parameter(Shape shape, Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  const Index cols = shape.empty() ? 1 : shape.back();
  Matrix<S> v(numel(shape) / cols, cols);
  for (Index r = 0; r < v.rows(); ++r) {
    for (Index c = 0; c < v.cols(); ++c) v(r, c) = static_cast<S>(dist(rng));
  }
  return Tensor<S>(std::move(shape), std::move(v), true);
}

template <typename S>
Tensor<S> constant_parameter(Shape shape, S value) {
  auto t = Tensor<S>::zeros(std::move(shape), true);
  t.value_mut().setConstant(value);
  return t;
}

template <typename S>
std::vector<Tensor<S>> tensors_of(const ParameterList<S>& params) {
  std::vector<Tensor<S>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

template <typename S>
void zero_grads(const ParameterList<S>& params) {
  for (const auto& p : params) p.tensor.zero_grad();
}

/// Copies values between two structurally identical parameter lists.
template <typename S>
void copy_values(const ParameterList<S>& from, const ParameterList<S>& to) {
  if (from.size() != to.size()) throw ShapeError("copy_values: parameter lists differ in length");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i].tensor.shape() != to[i].tensor.shape()) throw ShapeError("copy_values: shape mismatch at " + from[i].name);
    to[i].tensor.value_mut() = from[i].tensor.value();
  }
}

template <typename S>
Index parameter_count(const ParameterList<S>& params) {
  Index n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

}  // namespace atsc::nn
