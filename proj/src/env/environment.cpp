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

#include "atsc/env/environment.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "atsc/contract.hpp"

namespace atsc::env {

Environment::Environment(sim::NetworkTopology topo, std::vector<signal::PhaseScheme> schemes, EnvConfig config)
    : topo_(std::move(topo)), schemes_(std::move(schemes)), config_(config) {
  if (schemes_.size() == 1 && topo_.size() > 1) schemes_.assign(topo_.size(), schemes_.front());
  for (const auto& s : schemes_) signal::validate(s);
  contexts_ = make_contexts(topo_, schemes_, config_.detection_range_m);
  if (!(config_.episode_length_s > 0.0)) throw std::invalid_argument("episode length must be positive");
  state_ = sim::make_state(topo_, 0);
}

StepResult Environment::reset(std::uint64_t seed) {
  state_ = sim::make_state(topo_, seed);
  step_index_ = 0;
  sensed_ids_.assign(contexts_.size(), {});
  last_arrival_s_.assign(contexts_.size(), {});
  for (std::size_t a = 0; a < contexts_.size(); ++a) {
    sensed_ids_[a].assign(contexts_[a].lanes.size(), {});
    last_arrival_s_[a].assign(contexts_[a].lanes.size(), -std::numeric_limits<double>::infinity());
  }
  update_detectors();
  return snapshot();
}

StepResult Environment::step(std::span<const std::size_t> actions) {
  if (actions.size() != contexts_.size()) {
    throw ContractViolation("expected " + std::to_string(contexts_.size()) + " actions, got " +
                            std::to_string(actions.size()));
  }
  for (std::size_t a = 0; a < actions.size(); ++a) {
    try {
      state_.signals[a] = signal::apply_action(state_.signals[a], actions[a], schemes_[a]);
    } catch (const ContractViolation& e) {
      throw ContractViolation("agent " + std::to_string(a) + ": " + e.what());
    }
  }
  sim::step_sim(topo_, schemes_, state_, config_.sim);
  for (std::size_t a = 0; a < actions.size(); ++a) {
    state_.signals[a] = signal::advance_interval(state_.signals[a], config_.sim.dt_s, schemes_[a]);
  }
  ++step_index_;
  update_detectors();
  StepResult r = snapshot();
  if (log_) write_log(r, actions);
  return r;
}

StepResult Environment::snapshot() const {
  StepResult r;
  const double thr = config_.queue_speed_threshold_mps;
  for (std::size_t a = 0; a < contexts_.size(); ++a) {
    const auto& ctx = contexts_[a];
    r.observations.push_back(observe(topo_, state_, ctx, schemes_[a], thr));
    r.rewards.push_back(local_reward(topo_, state_, ctx, thr));
    r.masks.push_back(signal::valid_actions(state_.signals[a], schemes_[a]));
  }
  r.clock_s = state_.clock_s;
  r.done = state_.clock_s >= config_.episode_length_s - 1e-9;
  r.intersection_delay_s = state_.queued_vehicle_seconds;
  r.queue_totals.assign(topo_.size(), 0);
  for (std::size_t i = 0; i < topo_.size(); ++i) {
    for (const auto& link : topo_.incoming[i]) {
      if (!link) continue;
      for (const auto& lane : state_.lanes[*link]) r.queue_totals[i] += static_cast<int>(lane.queued);
    }
  }
  if (config_.reward == RewardSource::GroundTruth) {
    for (std::size_t a = 0; a < contexts_.size(); ++a) r.rewards[a] = -static_cast<double>(r.queue_totals[contexts_[a].intersection]);
  }
  return r;
}

void Environment::update_detectors() {
  for (std::size_t a = 0; a < contexts_.size(); ++a) {
    const auto& ctx = contexts_[a];
    for (std::size_t k = 0; k < ctx.lanes.size(); ++k) {
      const auto& ref = ctx.lanes[k];
      const auto& spec = topo_.links[ref.link];
      std::vector<std::uint64_t> ids;
      for (const auto& v : state_.lanes[ref.link][ref.lane].vehicles) {
        if (is_sensed(spec, v, ctx.detection_range_m)) ids.push_back(v.id);
      }
      std::sort(ids.begin(), ids.end());
      const auto& prev = sensed_ids_[a][k];
      const bool arrival = std::any_of(ids.begin(), ids.end(), [&](std::uint64_t id) {
        return !std::binary_search(prev.begin(), prev.end(), id);
      });
      if (arrival) last_arrival_s_[a][k] = state_.clock_s;
      sensed_ids_[a][k] = std::move(ids);
    }
  }
}

std::vector<signal::LaneDetector> Environment::detectors(std::size_t agent) const {
  const auto& ctx = contexts_.at(agent);
  std::vector<signal::LaneDetector> out;
  for (std::size_t k = 0; k < ctx.lanes.size(); ++k) {
    const auto& ref = ctx.lanes[k];
    signal::LaneDetector d;
    for (sim::Turn t : topo_.links[ref.link].lanes[ref.lane].turns) d.movements.push_back({ref.approach, t});
    d.vehicles = static_cast<int>(sensed_ids_[agent][k].size());
    d.since_last_arrival_s = state_.clock_s - last_arrival_s_[agent][k];
    out.push_back(std::move(d));
  }
  return out;
}

void Environment::write_log(const StepResult& r, std::span<const std::size_t> actions) const {
  for (std::size_t a = 0; a < contexts_.size(); ++a) {
    nlohmann::json rec;
    rec["step"] = step_index_;
    rec["clock"] = r.clock_s;
    rec["agent"] = a;
    rec["observation"] = r.observations[a].features();
    rec["action"] = actions[a];
    rec["reward"] = r.rewards[a];
    rec["delay"] = r.intersection_delay_s[a];
    rec["queue"] = r.queue_totals[a];
    *log_ << rec.dump() << '\n';
  }
}

}  // namespace atsc::env
