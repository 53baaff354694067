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

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "atsc/agent/dqn.hpp"
#include "atsc/env/environment.hpp"
#include "atsc/harness/config.hpp"

namespace atsc::harness {

/// A joint signal policy over all intersections of an environment.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_episode(const env::Environment& env, const env::StepResult& first) = 0;
  virtual std::vector<std::size_t> act(const env::Environment& env, const env::StepResult& current) = 0;
  /// Called with the result of the step that followed act().
  virtual void observe(const env::StepResult& /*next*/, const std::vector<std::size_t>& /*actions*/) {}
};

/// Falls back to holding the current phase (or the first valid one) when the
/// preferred action is masked.
std::size_t nearest_valid(std::size_t preferred, const signal::ActionMask& mask, const signal::SignalInterval& interval);

std::unique_ptr<Controller> make_fixed_time(const ExperimentConfig& c);
std::unique_ptr<Controller> make_actuated(const ExperimentConfig& c);
std::unique_ptr<Controller> make_random(std::uint64_t seed);

/// Flattens a step result into agent-major feature and mask records.
void flatten_step(const env::StepResult& r, double count_scale, std::vector<float>& features,
                  std::vector<std::uint8_t>& masks);

/// True while every agent's held action is still valid under r's masks.
bool action_holds(const env::StepResult& r, const std::vector<std::size_t>& actions);

/// Greedy (or epsilon-greedy) rollout policy backed by a trained team. Keeps
/// its own episode record to build histories.
template <typename S>
class LearnedController : public Controller {
 public:
  LearnedController(const agent::Team<S>& team, std::size_t obs_dim, double epsilon = 0.0, std::uint64_t seed = 0)
      : team_(team),
        record_(1, team.agent_count(), obs_dim, team.action_count()),
        epsilon_(epsilon),
        rng_(sim::make_engine(seed, "learned-controller")) {}

  void begin_episode(const env::Environment&, const env::StepResult& first) override {
    flatten_step(first, team_.config().count_scale, features_, masks_);
    record_.begin(features_, masks_);
    t_ = 0;
    held_for_ = 0;
    reward_.clear();
  }

  std::vector<std::size_t> act(const env::Environment&, const env::StepResult&) override {
    if (held_for_ == 0) held_ = team_.act(record_.staging(), t_, epsilon_, rng_);
    return held_;
  }

  void observe(const env::StepResult& next, const std::vector<std::size_t>&) override {
    reward_.resize(next.rewards.size(), 0.0);
    for (std::size_t i = 0; i < reward_.size(); ++i) reward_[i] += next.rewards[i];
    ++held_for_;
    if (!next.done && held_for_ < team_.config().action_repeat && action_holds(next, held_)) return;
    flatten_step(next, team_.config().count_scale, features_, masks_);
    std::vector<std::uint32_t> a(held_.begin(), held_.end());
    record_.record(a, reward_, features_, masks_, next.done);
    std::fill(reward_.begin(), reward_.end(), 0.0);
    held_for_ = 0;
    ++t_;
  }

 private:
  const agent::Team<S>& team_;
  agent::EpisodeBuffer record_;
  double epsilon_;
  std::mt19937_64 rng_;
  std::size_t t_ = 0;
  std::size_t held_for_ = 0;
  std::vector<std::size_t> held_;
  std::vector<double> reward_;
  std::vector<float> features_;
  std::vector<std::uint8_t> masks_;
};

/// Rolls one episode to completion; returns per-intersection delay (s).
std::vector<double> run_episode(env::Environment& env, Controller& controller, std::uint64_t seed);

}  // namespace atsc::harness
