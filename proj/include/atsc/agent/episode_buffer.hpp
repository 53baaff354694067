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

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "atsc/encoder/encoder.hpp"

namespace atsc::agent {

/// One joint episode. Observation slots are indexed 0..steps (the final slot
/// follows the last action); transition slots 0..steps-1.
struct Episode {
  std::size_t agents = 0;
  std::size_t obs_dim = 0;
  std::size_t action_count = 0;
  std::size_t steps = 0;
  std::vector<float> features;        // [(steps+1) * agents * obs_dim]
  std::vector<std::uint8_t> masks;    // [(steps+1) * agents * action_count]
  std::vector<std::uint32_t> actions; // [steps * agents]
  std::vector<double> rewards;        // [steps * agents]
  std::vector<std::uint8_t> done;     // [steps]

  std::span<const float> observation(std::size_t t, std::size_t agent) const {
    return {features.data() + (t * agents + agent) * obs_dim, obs_dim};
  }
  std::span<const std::uint8_t> mask(std::size_t t, std::size_t agent) const {
    return {masks.data() + (t * agents + agent) * action_count, action_count};
  }
  std::uint32_t action(std::size_t t, std::size_t agent) const { return actions[t * agents + agent]; }
  double reward(std::size_t t, std::size_t agent) const { return rewards[t * agents + agent]; }

  friend bool operator==(const Episode&, const Episode&) = default;
};

class BufferError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Ring of completed joint episodes plus one episode being recorded.
class EpisodeBuffer {
 public:
  EpisodeBuffer(std::size_t capacity, std::size_t agents, std::size_t obs_dim, std::size_t action_count);

  /// Starts recording; `features` holds agents*obs_dim values, `masks`
  /// agents*action_count flags.
  void begin(std::span<const float> features, std::span<const std::uint8_t> masks);
  void record(std::span<const std::uint32_t> actions, std::span<const double> rewards, std::span<const float> next_features,
              std::span<const std::uint8_t> next_masks, bool done);
  /// Moves the staged episode into the ring, evicting the oldest when full.
  void finish();

  bool recording() const { return recording_; }
  const Episode& staging() const { return staging_; }
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Episode& episode(std::size_t e) const;
  std::size_t transitions() const;
  std::size_t agents() const { return agents_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_count() const { return action_count_; }

  /// Uniform episode, then uniform transition inside it.
  std::pair<std::size_t, std::size_t> sample_index(std::mt19937_64& rng) const;

  const std::deque<Episode>& episodes() const { return episodes_; }
  /// Restores a saved state (used by checkpoint resume).
  void restore(std::deque<Episode> episodes);

 private:
  std::size_t capacity_, agents_, obs_dim_, action_count_;
  std::deque<Episode> episodes_;
  Episode staging_;
  bool recording_ = false;
};

/// Observations t, t-1, ... of one agent, current first, zero padded to
/// max_len and never reaching before the episode start.
template <typename S>
encoder::PaddedHistory<S> sample_history(const Episode& ep, std::size_t t, std::size_t agent, std::size_t max_len) {
  if (t > ep.steps || agent >= ep.agents || max_len == 0) throw BufferError("sample_history: invalid (time, agent)");
  encoder::PaddedHistory<S> h;
  h.tokens = nn::Matrix<S>::Zero(static_cast<nn::Index>(max_len), static_cast<nn::Index>(ep.obs_dim));
  h.mask.assign(max_len, false);
  h.true_length = std::min(max_len, t + 1);
  for (std::size_t k = 0; k < h.true_length; ++k) {
    const auto o = ep.observation(t - k, agent);
    for (std::size_t c = 0; c < ep.obs_dim; ++c) h.tokens(static_cast<nn::Index>(k), static_cast<nn::Index>(c)) = static_cast<S>(o[c]);
    h.mask[k] = true;
  }
  return h;
}

template <typename S>
encoder::PaddedHistory<S> sample_history(const EpisodeBuffer& buffer, std::size_t e, std::size_t t, std::size_t agent,
                                         std::size_t max_len) {
  return sample_history<S>(buffer.episode(e), t, agent, max_len);
}

/// Writes the history of (t, agent) into rows [row0, row0+max_len) of a
/// stacked token matrix and the matching mask row. Same layout as
/// sample_history without the per-call allocation.
template <typename S>
void fill_history(const Episode& ep, std::size_t t, std::size_t agent, std::size_t max_len, nn::Matrix<S>& tokens,
                  nn::Index row0, nn::Mask& mask, nn::Index mask_row) {
  const std::size_t n = std::min(max_len, t + 1);
  for (std::size_t k = 0; k < max_len; ++k) {
    auto dst = tokens.row(row0 + static_cast<nn::Index>(k));
    if (k < n) {
      const auto o = ep.observation(t - k, agent);
      for (std::size_t c = 0; c < ep.obs_dim; ++c) dst(static_cast<nn::Index>(c)) = static_cast<S>(o[c]);
    } else {
      dst.setZero();
    }
    mask(mask_row, static_cast<nn::Index>(k)) = k < n;
  }
}

}  // namespace atsc::agent
