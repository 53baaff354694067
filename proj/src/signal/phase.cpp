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

#include "atsc/signal/phase.hpp"

#include <algorithm>
#include <sstream>

#include "atsc/contract.hpp"

namespace atsc::signal {

using sim::Side;
using sim::Turn;

const char* to_string(IntervalKind kind) {
  switch (kind) {
    case IntervalKind::Green: return "green";
    case IntervalKind::Yellow: return "yellow";
    case IntervalKind::AllRed: return "all-red";
  }
  return "?";
}

bool PhaseSpec::serves(Movement m) const { return std::find(movements.begin(), movements.end(), m) != movements.end(); }

bool movements_conflict(Movement a, Movement b) {
  if (a.approach == b.approach) return false;
  if (a.approach == sim::opposite(b.approach)) {
    // Opposing left turns cross the oncoming through and right streams.
    const bool a_left = a.turn == Turn::Left;
    const bool b_left = b.turn == Turn::Left;
    return a_left != b_left;
  }
  return !(a.turn == Turn::Right && b.turn == Turn::Right);
}

void validate(const PhaseScheme& s) {
  const auto fail = [](const std::string& msg) { throw SchemeError(msg); };
  if (s.phases.empty()) fail("phase scheme has no phases");
  if (s.transition_allowed.size() != s.size()) fail("transition matrix row count differs from phase count");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.transition_allowed[i].size() != s.size()) fail("transition matrix is not square");
    if (!s.transition_allowed[i][i]) fail("transition matrix diagonal must allow EXTEND");
    const auto& mv = s.phases[i].movements;
    for (std::size_t a = 0; a < mv.size(); ++a) {
      for (std::size_t b = a + 1; b < mv.size(); ++b) {
        if (movements_conflict(mv[a], mv[b])) fail("phase " + s.phases[i].name + " holds conflicting movements");
      }
    }
  }
  if (!(s.min_green_s >= 0.0) || s.min_green_s > s.max_green_s) fail("need 0 <= min green <= max green");
  if (!(s.yellow_s > 0.0)) fail("yellow must be positive");
  if (!(s.all_red_s >= 0.0)) fail("all-red must be non-negative");
}

namespace {

Movement mv(Side s, Turn t) { return {s, t}; }

std::vector<PhaseSpec> four_phases() {
  return {
      {"NS-through", {mv(Side::North, Turn::Through), mv(Side::North, Turn::Right), mv(Side::South, Turn::Through),
                      mv(Side::South, Turn::Right)}},
      {"NS-left", {mv(Side::North, Turn::Left), mv(Side::South, Turn::Left)}},
      {"EW-through", {mv(Side::East, Turn::Through), mv(Side::East, Turn::Right), mv(Side::West, Turn::Through),
                      mv(Side::West, Turn::Right)}},
      {"EW-left", {mv(Side::East, Turn::Left), mv(Side::West, Turn::Left)}},
  };
}

}  // namespace

PhaseScheme four_phase_scheme() {
  PhaseScheme s;
  s.phases = four_phases();
  s.transition_allowed.assign(4, std::vector<bool>(4, true));
  return s;
}

PhaseScheme ring_barrier_scheme() {
  PhaseScheme s = four_phase_scheme();
  const std::vector<std::vector<bool>> allowed{
      // to:  NS-T   NS-L   EW-T   EW-L
      {true, false, true, true},    // from NS-through: cross the barrier
      {true, true, false, false},   // from NS-left: lead into NS-through
      {true, true, true, false},    // from EW-through: cross the barrier
      {false, false, true, true},   // from EW-left: lead into EW-through
  };
  s.transition_allowed = allowed;
  return s;
}

PhaseScheme two_phase_scheme() {
  PhaseScheme s;
  auto phases = four_phases();
  s.phases = {phases[0], phases[2]};
  s.transition_allowed.assign(2, std::vector<bool>(2, true));
  return s;
}

ActionMask valid_actions(const SignalInterval& iv, const PhaseScheme& s) {
  ActionMask mask(s.size(), false);
  if (iv.in_transition()) {
    mask[iv.pending_phase.value_or(iv.current_phase)] = true;
    return mask;
  }
  const std::size_t cur = iv.current_phase;
  if (iv.elapsed_s < s.min_green_s) {
    mask[cur] = true;
    return mask;
  }
  bool any_other = false;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (p != cur && s.transition_allowed[cur][p]) {
      mask[p] = true;
      any_other = true;
    }
  }
  // At max green the current phase is dropped unless nothing else is reachable.
  mask[cur] = iv.elapsed_s < s.max_green_s || !any_other;
  return mask;
}

SignalInterval apply_action(const SignalInterval& iv, std::size_t action, const PhaseScheme& s) {
  const ActionMask mask = valid_actions(iv, s);
  if (action >= mask.size() || !mask[action]) {
    std::ostringstream os;
    os << "action " << action << " is masked (interval " << to_string(iv.kind) << ", phase " << iv.current_phase
       << ", elapsed " << iv.elapsed_s << " s)";
    throw ContractViolation(os.str());
  }
  if (iv.in_transition() || action == iv.current_phase) return iv;
  SignalInterval next = iv;
  next.kind = IntervalKind::Yellow;
  next.elapsed_s = 0.0;
  next.pending_phase = action;
  return next;
}

SignalInterval advance_interval(const SignalInterval& iv, double dt, const PhaseScheme& s) {
  SignalInterval next = iv;
  next.elapsed_s += dt;
  constexpr double tol = 1e-9;
  if (next.kind == IntervalKind::Yellow && next.elapsed_s >= s.yellow_s - tol) {
    next.kind = IntervalKind::AllRed;
    next.elapsed_s = 0.0;
    if (s.all_red_s > tol) return next;
  }
  if (next.kind == IntervalKind::AllRed && next.elapsed_s >= s.all_red_s - tol) {
    next.kind = IntervalKind::Green;
    next.current_phase = next.pending_phase.value_or(next.current_phase);
    next.pending_phase.reset();
    next.elapsed_s = 0.0;
  }
  return next;
}

bool is_green(const SignalInterval& iv, const PhaseScheme& s, Movement m) {
  return iv.kind == IntervalKind::Green && s.phases[iv.current_phase].serves(m);
}

}  // namespace atsc::signal
