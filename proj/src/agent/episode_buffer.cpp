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

#include "atsc/agent/episode_buffer.hpp"

#include <string>

namespace atsc::agent {

EpisodeBuffer::EpisodeBuffer(std::size_t capacity, std::size_t agents, std::size_t obs_dim, std::size_t action_count)
    : capacity_(capacity), agents_(agents), obs_dim_(obs_dim), action_count_(action_count) {
  if (capacity == 0 || agents == 0 || obs_dim == 0 || action_count == 0) {
    throw std::invalid_argument("EpisodeBuffer: sizes must be positive");
  }
}

void EpisodeBuffer::begin(std::span<const float> features, std::span<const std::uint8_t> masks) {
  if (features.size() != agents_ * obs_dim_ || masks.size() != agents_ * action_count_) {
    throw BufferError("EpisodeBuffer::begin: record size mismatch");
  }
  staging_ = Episode{};
  staging_.agents = agents_;
  staging_.obs_dim = obs_dim_;
  staging_.action_count = action_count_;
  staging_.features.assign(features.begin(), features.end());
  staging_.masks.assign(masks.begin(), masks.end());
  recording_ = true;
}

void EpisodeBuffer::record(std::span<const std::uint32_t> actions, std::span<const double> rewards,
                           std::span<const float> next_features, std::span<const std::uint8_t> next_masks, bool done) {
  if (!recording_) throw BufferError("EpisodeBuffer::record before begin");
  if (actions.size() != agents_ || rewards.size() != agents_ || next_features.size() != agents_ * obs_dim_ ||
      next_masks.size() != agents_ * action_count_) {
    throw BufferError("EpisodeBuffer::record: record size mismatch");
  }
  staging_.actions.insert(staging_.actions.end(), actions.begin(), actions.end());
  staging_.rewards.insert(staging_.rewards.end(), rewards.begin(), rewards.end());
  staging_.features.insert(staging_.features.end(), next_features.begin(), next_features.end());
  staging_.masks.insert(staging_.masks.end(), next_masks.begin(), next_masks.end());
  staging_.done.push_back(done ? 1 : 0);
  ++staging_.steps;
}

void EpisodeBuffer::finish() {
  if (!recording_) throw BufferError("EpisodeBuffer::finish before begin");
  recording_ = false;
  if (staging_.steps == 0) return;
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(staging_));
  staging_ = Episode{};
}

const Episode& EpisodeBuffer::episode(std::size_t e) const {
  if (e >= episodes_.size()) throw BufferError("episode index " + std::to_string(e) + " out of range");
  return episodes_[e];
}

std::size_t EpisodeBuffer::transitions() const {
  std::size_t n = 0;
  for (const auto& e : episodes_) n += e.steps;
  return n;
}

std::pair<std::size_t, std::size_t> EpisodeBuffer::sample_index(std::mt19937_64& rng) const {
  if (episodes_.empty()) throw BufferError("sampling from an empty buffer");
  const std::size_t e = std::uniform_int_distribution<std::size_t>(0, episodes_.size() - 1)(rng);
  const std::size_t t = std::uniform_int_distribution<std::size_t>(0, episodes_[e].steps - 1)(rng);
  return {e, t};
}

void EpisodeBuffer::restore(std::deque<Episode> episodes) {
  for (const auto& e : episodes) {
    if (e.agents != agents_ || e.obs_dim != obs_dim_ || e.action_count != action_count_) {
      throw BufferError("restore: episode layout does not match the buffer");
    }
  }
  while (episodes.size() > capacity_) episodes.pop_front();
  episodes_ = std::move(episodes);
  recording_ = false;
}

}  // namespace atsc::agent
