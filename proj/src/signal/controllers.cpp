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

#include "atsc/signal/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atsc::signal {

std::size_t fixed_time_controller(double clock_s, const TimingPlan& plan, double offset_s) {
  if (plan.empty()) throw std::invalid_argument("fixed-time plan is empty");
  double cycle = 0.0;
  for (const auto& [phase, duration] : plan) {
    if (!(duration > 0.0)) throw std::invalid_argument("fixed-time plan durations must be positive");
    cycle += duration;
  }
  double t = std::fmod(clock_s + offset_s, cycle);
  if (t < 0.0) t += cycle;
  for (const auto& [phase, duration] : plan) {
    if (t < duration) return phase;
    t -= duration;
  }
  return plan.back().first;
}

namespace {

bool phase_serves_lane(const PhaseSpec& phase, const LaneDetector& lane) {
  return std::any_of(lane.movements.begin(), lane.movements.end(), [&](Movement m) { return phase.serves(m); });
}

}  // namespace

std::size_t actuated_controller(const SignalInterval& iv, std::span<const LaneDetector> lanes,
                                const PhaseScheme& scheme, double gap_s, std::size_t recall_phase) {
  if (iv.in_transition()) return iv.pending_phase.value_or(iv.current_phase);
  const std::size_t cur = iv.current_phase;
  const ActionMask mask = valid_actions(iv, scheme);
  if (iv.elapsed_s < scheme.min_green_s) return cur;

  const PhaseSpec& current = scheme.phases[cur];
  const bool gap_open = std::any_of(lanes.begin(), lanes.end(), [&](const LaneDetector& l) {
    return phase_serves_lane(current, l) && l.since_last_arrival_s < gap_s;
  });
  if (gap_open && mask[cur]) return cur;

  const auto has_demand = [&](std::size_t p) {
    if (p == recall_phase) return true;
    return std::any_of(lanes.begin(), lanes.end(), [&](const LaneDetector& l) {
      return l.vehicles > 0 && phase_serves_lane(scheme.phases[p], l);
    });
  };
  for (std::size_t k = 1; k < scheme.size(); ++k) {
    const std::size_t p = (cur + k) % scheme.size();
    if (mask[p] && has_demand(p)) return p;
  }
  // Resting in recall with nothing else waiting.
  if (mask[cur]) return cur;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask[p]) return p;
  }
  return cur;
}

}  // namespace atsc::signal
