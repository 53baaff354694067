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

#include <random>
#include <span>

#include "atsc/nn/ops.hpp"
#include "atsc/nn/parameters.hpp"

namespace atsc::agent {

using nn::Index;
using nn::Tape;
using nn::Tensor;

/// Neighbour slots per agent: main-street upstream, then downstream.
inline constexpr Index kNeighborSlots = 2;

template <typename S>
struct QHeadParams {
  Tensor<S> w1, b1, w2, b2;

  nn::ParameterList<S> parameters() const { return {{"w1", w1}, {"b1", b1}, {"w2", w2}, {"b2", b2}}; }
  QHeadParams clone() const { return {w1.clone(), b1.clone(), w2.clone(), b2.clone()}; }
  Index message_dim() const { return w1.rows() / (1 + kNeighborSlots); }
};

template <typename S>
QHeadParams<S> init_q_head(Index message_dim, Index hidden, Index actions, std::mt19937_64& rng) {
  const Index in = message_dim * (1 + kNeighborSlots);
  return {nn::uniform_parameter<S>({in, hidden}, in, rng), nn::uniform_parameter<S>({hidden}, in, rng),
          nn::uniform_parameter<S>({hidden, actions}, hidden, rng), nn::uniform_parameter<S>({actions}, hidden, rng)};
}

/// Q-values from [own | upstream | downstream] messages, each [B x d]. An
/// absent neighbour is passed as a zero tensor.
template <typename S>
Tensor<S> q_values(Tape<S>& tape, const Tensor<S>& own, std::span<const Tensor<S>> neighbors, const QHeadParams<S>& head) {
  if (static_cast<Index>(neighbors.size()) != kNeighborSlots) throw nn::ShapeError("q_values: expected two neighbour slots");
  for (const auto& n : neighbors) {
    if (n.rows() != own.rows() || n.cols() != own.cols()) throw nn::ShapeError("q_values: neighbour message shape mismatch");
  }
  if (own.cols() * (1 + kNeighborSlots) != head.w1.rows()) throw nn::ShapeError("q_values: message width does not fit the head");
  const auto x = nn::concat<S>(tape, {own, neighbors[0], neighbors[1]});
  return nn::affine(tape, nn::relu(tape, nn::affine(tape, x, head.w1, head.b1)), head.w2, head.b2);
}

/// Masked epsilon-greedy: with probability epsilon a uniform valid action,
/// otherwise the masked argmax with ties to the lowest index.
template <typename Row, typename MaskRow>
std::size_t select_action(const Row& q, const MaskRow& mask, double epsilon, std::mt19937_64& rng) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < static_cast<std::size_t>(q.size()); ++i) {
    if (mask[i]) valid.push_back(i);
  }
  if (valid.empty()) throw std::invalid_argument("select_action: no valid action");
  if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    return valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)];
  }
  return nn::masked_argmax(q, mask);
}

}  // namespace atsc::agent
