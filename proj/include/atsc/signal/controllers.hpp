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
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "atsc/signal/phase.hpp"

namespace atsc::signal {

/// Ordered (phase, duration s) list repeated cyclically.
using TimingPlan = std::vector<std::pair<std::size_t, double>>;

/// Phase scheduled at (clock + offset) mod cycle length. Throws
/// std::invalid_argument for an empty plan or non-positive durations.
std::size_t fixed_time_controller(double clock_s, const TimingPlan& plan, double offset_s = 0.0);

/// Detector view of one incoming lane, as used by the actuated baseline.
struct LaneDetector {
  std::vector<Movement> movements;
  int vehicles = 0;  // currently inside the detection zone
  double since_last_arrival_s = std::numeric_limits<double>::infinity();
};

/// Semi-actuated gap-out logic. Holds the current phase while a served lane
/// saw an arrival within `gap_s` and max green is not reached; otherwise moves
/// to the next allowed phase (cyclic order) with demand. The recall phase
/// always counts as having demand. The result is always valid under
/// valid_actions(interval, scheme).
std::size_t actuated_controller(const SignalInterval& interval, std::span<const LaneDetector> lanes,
                                const PhaseScheme& scheme, double gap_s, std::size_t recall_phase);

}  // namespace atsc::signal
