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
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "atsc/signal/phase.hpp"
#include "atsc/sim/network.hpp"
#include "atsc/sim/rng.hpp"

namespace atsc::sim {

struct Vehicle {
  std::uint64_t id = 0;
  std::size_t link = 0;
  double position_m = 0.0;  // front bumper, measured from the link entry
  double speed_mps = 0.0;   // 0 (queued) or the link free-flow speed
  double entry_time_s = 0.0;
  double link_entry_time_s = 0.0;
  double accumulated_delay_s = 0.0;  // seconds spent queued
  Turn turn = Turn::Through;         // movement at the end of the current link
  std::optional<Turn> next_turn;     // movement on the following link, drawn at discharge

  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

/// Runtime state of one lane. Vehicles are ordered nearest-to-stop-line first
/// and the first `queued` of them form the standing queue.
struct LaneState {
  std::deque<Vehicle> vehicles;
  std::size_t queued = 0;
  double service_credit = 0.0;  // fractional saturation service carried between steps

  friend bool operator==(const LaneState&, const LaneState&) = default;
};

enum class ArrivalProcess : std::uint8_t { Poisson, Deterministic };

struct SimParams {
  double dt_s = 1.0;
  ArrivalProcess arrivals = ArrivalProcess::Poisson;
};

/// Ground truth of the whole network (the hidden POMDP state).
struct SimState {
  double clock_s = 0.0;
  std::vector<std::vector<LaneState>> lanes;     // [link][lane]
  std::vector<signal::SignalInterval> signals;  // [intersection]
  std::vector<std::deque<Vehicle>> entry_backlog;  // [entry] arrivals waiting for storage
  std::vector<double> arrival_credit;              // [entry] deterministic arrivals only
  std::vector<double> queued_vehicle_seconds;      // [intersection]
  std::vector<double> vehicle_delay_s;             // [intersection] travel minus free-flow time
  std::uint64_t entered = 0;
  std::uint64_t exited = 0;
  std::uint64_t next_id = 0;
  RngStreams rng;

  std::size_t in_network() const;

  friend bool operator==(const SimState&, const SimState&) = default;
};

/// Empty network at clock 0 with every signal green on phase 0.
SimState make_state(const NetworkTopology& topo, std::uint64_t seed);

/// Draws the arrivals of one step for every entry. Each entry uses its own
/// named rng stream; Poisson counts have mean rate * dt. New vehicles sit at
/// the link entry at free-flow speed with their turn already drawn.
std::vector<std::vector<Vehicle>> spawn_arrivals(const NetworkTopology& topo, SimState& state,
                                                 const SimParams& params);

/// Puts a vehicle at the entry of `link`, bypassing demand. Returns false if
/// the lane serving `turn` is full.
bool place_vehicle(const NetworkTopology& topo, SimState& state, std::size_t link, Turn turn);

/// One simulation step: arrivals, movement, discharge, delay accounting, clock.
/// Signals are read from state.signals and must already reflect this step.
void step_sim(const NetworkTopology& topo, std::span<const signal::PhaseScheme> schemes, SimState& state,
              const SimParams& params);

/// Cumulative queued-vehicle-seconds on the incoming lanes of an intersection.
/// Throws std::out_of_range for an unknown intersection.
double intersection_delay(const SimState& state, std::size_t intersection);

}  // namespace atsc::sim
