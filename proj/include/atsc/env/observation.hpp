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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "atsc/signal/phase.hpp"
#include "atsc/sim/network.hpp"
#include "atsc/sim/simulator.hpp"

namespace atsc::env {

/// Locally sensed record of one intersection.
struct Observation {
  std::vector<int> vehicle_count;  // per incoming lane, within detection range
  std::vector<int> queued_count;   // subset of vehicle_count below the speed threshold
  std::size_t phase = 0;           // current phase, or the pending one during a change
  std::size_t phase_count = 0;
  bool in_transition = false;
  double elapsed_green_s = 0.0;  // 0 during yellow/all-red
  double max_green_s = 1.0;

  /// [counts..., queued..., one-hot phase..., elapsed/max-green, in-transition].
  std::vector<double> features() const;
  std::size_t feature_size() const { return 2 * vehicle_count.size() + phase_count + 2; }
  int total_queued() const;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct LaneRef {
  std::size_t link = 0;
  std::size_t lane = 0;
  sim::Side approach = sim::Side::North;
};

/// Static wiring of one agent to its intersection and neighbours.
struct AgentContext {
  std::size_t agent = 0;
  std::size_t intersection = 0;
  double detection_range_m = 50.0;
  // Fixed order: main-street upstream (north), downstream (south).
  std::array<std::optional<std::size_t>, 2> neighbors;
  std::size_t action_count = 0;
  std::vector<LaneRef> lanes;  // incoming lanes in observation order (N, E, S, W)
};

std::vector<AgentContext> make_contexts(const sim::NetworkTopology& topo, std::span<const signal::PhaseScheme> schemes,
                                        double detection_range_m);

/// A vehicle is sensed when its footprint (one jam spacing behind the front
/// bumper, clipped to the link) lies inside the zone ending at the stop line.
bool is_sensed(const sim::LinkSpec& link, const sim::Vehicle& v, double detection_range_m);

/// Range-limited sensing; vehicles beyond the zone are invisible. Throws
/// std::invalid_argument for a non-positive speed threshold.
Observation observe(const sim::NetworkTopology& topo, const sim::SimState& state, const AgentContext& ctx,
                    const signal::PhaseScheme& scheme, double threshold_mps);

/// Negated sensed queue length at the intersection.
double local_reward(const sim::NetworkTopology& topo, const sim::SimState& state, const AgentContext& ctx,
                    double threshold_mps);

}  // namespace atsc::env
