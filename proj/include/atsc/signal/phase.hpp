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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atsc/sim/network.hpp"

namespace atsc::signal {

using sim::Movement;

enum class IntervalKind : std::uint8_t { Green, Yellow, AllRed };

const char* to_string(IntervalKind kind);

struct PhaseSpec {
  std::string name;
  std::vector<Movement> movements;  // protected movements

  bool serves(Movement m) const;
};

class SchemeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Phase set plus timing constraints. transition_allowed[i][j] says whether a
/// change from phase i to phase j is permitted (the diagonal means EXTEND).
struct PhaseScheme {
  std::vector<PhaseSpec> phases;
  std::vector<std::vector<bool>> transition_allowed;
  double min_green_s = 10.0;
  double max_green_s = 60.0;
  double yellow_s = 3.0;
  double all_red_s = 2.0;

  std::size_t size() const { return phases.size(); }
};

/// Whether two movements may not be green together.
bool movements_conflict(Movement a, Movement b);

/// Throws SchemeError when a scheme breaks its invariants.
void validate(const PhaseScheme& scheme);

/// NS-through, NS-left, EW-through, EW-left with every transition allowed.
PhaseScheme four_phase_scheme();
/// Same phases restricted to a two-ring-two-barrier style sequence: left turns
/// lead, and the barrier is crossed only after the through phase.
PhaseScheme ring_barrier_scheme();
/// NS-through vs EW-through; for networks without left-turn movements.
PhaseScheme two_phase_scheme();

struct SignalInterval {
  std::size_t current_phase = 0;
  IntervalKind kind = IntervalKind::Green;
  double elapsed_s = 0.0;
  std::optional<std::size_t> pending_phase;

  bool in_transition() const { return kind != IntervalKind::Green; }
  friend bool operator==(const SignalInterval&, const SignalInterval&) = default;
};

using ActionMask = std::vector<bool>;

/// Phases an agent may request next. Never all-false.
ActionMask valid_actions(const SignalInterval& interval, const PhaseScheme& scheme);

/// EXTEND when the action equals the current green phase, otherwise start the
/// yellow change toward it. Throws ContractViolation for masked actions.
SignalInterval apply_action(const SignalInterval& interval, std::size_t action, const PhaseScheme& scheme);

/// Advances the interval clock by dt. Completed yellow becomes all-red and
/// completed all-red becomes green on the pending phase, both with elapsed 0.
/// Green never expires on its own.
SignalInterval advance_interval(const SignalInterval& interval, double dt, const PhaseScheme& scheme);

/// True when the movement has right of way under the interval.
bool is_green(const SignalInterval& interval, const PhaseScheme& scheme, Movement m);

}  // namespace atsc::signal
