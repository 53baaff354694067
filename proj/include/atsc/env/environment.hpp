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
#include <iosfwd>
#include <span>
#include <vector>

#include "atsc/env/observation.hpp"
#include "atsc/signal/controllers.hpp"
#include "atsc/signal/phase.hpp"
#include "atsc/sim/network.hpp"
#include "atsc/sim/simulator.hpp"

namespace atsc::env {

/// Sensed: queued vehicles inside the detection range. GroundTruth: every
/// queued vehicle on the incoming lanes (training signal only; observations
/// stay range-limited).
enum class RewardSource : std::uint8_t { Sensed, GroundTruth };

struct EnvConfig {
  double detection_range_m = 50.0;
  double queue_speed_threshold_mps = 2.0;
  double episode_length_s = 3600.0;
  RewardSource reward = RewardSource::Sensed;
  sim::SimParams sim;
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> rewards;
  std::vector<signal::ActionMask> masks;
  bool done = false;
  double clock_s = 0.0;
  std::vector<double> intersection_delay_s;  // cumulative queued-vehicle-seconds
  std::vector<int> queue_totals;             // ground-truth queued vehicles now
};

/// Joint POMDP over all intersections of a network. One agent per
/// intersection; agent index equals intersection index.
class Environment {
 public:
  Environment(sim::NetworkTopology topo, std::vector<signal::PhaseScheme> schemes, EnvConfig config);

  StepResult reset(std::uint64_t seed);

  /// apply_action -> step_sim -> advance_interval, then sensing. Throws
  /// ContractViolation naming the agent when an action is masked.
  StepResult step(std::span<const std::size_t> actions);

  std::size_t agent_count() const { return contexts_.size(); }
  const sim::NetworkTopology& topology() const { return topo_; }
  const std::vector<signal::PhaseScheme>& schemes() const { return schemes_; }
  const std::vector<AgentContext>& contexts() const { return contexts_; }
  const EnvConfig& config() const { return config_; }
  const sim::SimState& state() const { return state_; }
  sim::SimState& mutable_state() { return state_; }
  std::size_t step_index() const { return step_index_; }

  /// Detector view for the actuated baseline.
  std::vector<signal::LaneDetector> detectors(std::size_t agent) const;

  /// Writes one JSON line per (step, agent) while set; nullptr disables.
  void set_episode_log(std::ostream* out) { log_ = out; }

 private:
  StepResult snapshot() const;
  void update_detectors();
  void write_log(const StepResult& r, std::span<const std::size_t> actions) const;

  sim::NetworkTopology topo_;
  std::vector<signal::PhaseScheme> schemes_;
  EnvConfig config_;
  std::vector<AgentContext> contexts_;
  sim::SimState state_;
  std::size_t step_index_ = 0;
  // [agent][lane]
  std::vector<std::vector<std::vector<std::uint64_t>>> sensed_ids_;
  std::vector<std::vector<double>> last_arrival_s_;
  std::ostream* log_ = nullptr;
};

}  // namespace atsc::env
