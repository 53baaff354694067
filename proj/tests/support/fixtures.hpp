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

#include <vector>

#include "atsc/signal/phase.hpp"
#include "atsc/sim/network.hpp"
#include "atsc/sim/simulator.hpp"

namespace atsc::testing {

/// One four-approach intersection with no demand.
inline sim::NetworkTopology quiet_intersection(sim::CorridorParams p = {}) {
  p.intersections = 1;
  p.main_demand = sim::DemandProfile::constant(0.0);
  p.side_demand = sim::DemandProfile::constant(0.0);
  return sim::build_network(sim::corridor_config(p));
}

inline sim::NetworkTopology corridor(std::size_t n, sim::CorridorParams p = {}) {
  p.intersections = n;
  return sim::build_network(sim::corridor_config(p));
}

/// Link arriving at `intersection` from `side`.
inline std::size_t incoming(const sim::NetworkTopology& topo, std::size_t intersection, sim::Side side) {
  return *topo.incoming[intersection][static_cast<std::size_t>(side)];
}

inline signal::SignalInterval green(std::size_t phase, double elapsed = 0.0) {
  return {phase, signal::IntervalKind::Green, elapsed, std::nullopt};
}

inline signal::SignalInterval all_red_toward(std::size_t phase) {
  return {0, signal::IntervalKind::AllRed, 0.0, phase};
}

}  // namespace atsc::testing
