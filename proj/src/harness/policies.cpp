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

#include "atsc/harness/policies.hpp"

#include <algorithm>

namespace atsc::harness {

std::size_t nearest_valid(std::size_t preferred, const signal::ActionMask& mask, const signal::SignalInterval& interval) {
  if (preferred < mask.size() && mask[preferred]) return preferred;
  const std::size_t hold = interval.pending_phase.value_or(interval.current_phase);
  if (hold < mask.size() && mask[hold]) return hold;
  const auto it = std::find(mask.begin(), mask.end(), true);
  return static_cast<std::size_t>(it - mask.begin());
}

namespace {

class FixedTime : public Controller {
 public:
  FixedTime(signal::TimingPlan plan, double offset_step) : plan_(std::move(plan)), offset_step_(offset_step) {}

  void begin_episode(const env::Environment&, const env::StepResult&) override {}

  std::vector<std::size_t> act(const env::Environment& env, const env::StepResult& current) override {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < env.agent_count(); ++i) {
      const auto want = signal::fixed_time_controller(current.clock_s, plan_, offset_step_ * static_cast<double>(i));
      out.push_back(nearest_valid(want, current.masks[i], env.state().signals[i]));
    }
    return out;
  }

 private:
  signal::TimingPlan plan_;
  double offset_step_;
};

class Actuated : public Controller {
 public:
  Actuated(double gap, std::size_t recall) : gap_(gap), recall_(recall) {}

  void begin_episode(const env::Environment&, const env::StepResult&) override {}

  std::vector<std::size_t> act(const env::Environment& env, const env::StepResult&) override {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < env.agent_count(); ++i) {
      const auto det = env.detectors(i);
      out.push_back(signal::actuated_controller(env.state().signals[i], det, env.schemes()[i], gap_, recall_));
    }
    return out;
  }

 private:
  double gap_;
  std::size_t recall_;
};

class RandomValid : public Controller {
 public:
  explicit RandomValid(std::uint64_t seed) : rng_(sim::make_engine(seed, "random-policy")) {}

  void begin_episode(const env::Environment&, const env::StepResult&) override {}

  std::vector<std::size_t> act(const env::Environment& env, const env::StepResult& current) override {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < env.agent_count(); ++i) {
      std::vector<std::size_t> valid;
      for (std::size_t a = 0; a < current.masks[i].size(); ++a) {
        if (current.masks[i][a]) valid.push_back(a);
      }
      out.push_back(valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng_)]);
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::unique_ptr<Controller> make_fixed_time(const ExperimentConfig& c) {
  return std::make_unique<FixedTime>(c.fixed_plan, c.fixed_offset_s);
}

std::unique_ptr<Controller> make_actuated(const ExperimentConfig& c) {
  return std::make_unique<Actuated>(c.actuated_gap_s, c.actuated_recall);
}

std::unique_ptr<Controller> make_random(std::uint64_t seed) { return std::make_unique<RandomValid>(seed); }

bool action_holds(const env::StepResult& r, const std::vector<std::size_t>& actions) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!r.masks[i][actions[i]]) return false;
  }
  return true;
}

void flatten_step(const env::StepResult& r, double count_scale, std::vector<float>& features,
                  std::vector<std::uint8_t>& masks) {
  features.clear();
  masks.clear();
  for (std::size_t i = 0; i < r.observations.size(); ++i) {
    agent::append_features(r.observations[i], count_scale, features);
    agent::append_mask(r.masks[i], masks);
  }
}

std::vector<double> run_episode(env::Environment& env, Controller& controller, std::uint64_t seed) {
  auto r = env.reset(seed);
  controller.begin_episode(env, r);
  while (!r.done) {
    const auto actions = controller.act(env, r);
    r = env.step(actions);
    controller.observe(r, actions);
  }
  return r.intersection_delay_s;
}

}  // namespace atsc::harness
