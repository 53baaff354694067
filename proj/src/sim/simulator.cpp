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

#include "atsc/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace atsc::sim {
namespace {

constexpr double kEps = 1e-9;

Turn draw_turn(const std::array<double, kTurns>& ratios, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t t = 0; t < kTurns; ++t) {
    acc += ratios[t];
    if (u < acc) return static_cast<Turn>(t);
  }
  for (std::size_t t = kTurns; t-- > 0;) {
    if (ratios[t] > 0.0) return static_cast<Turn>(t);
  }
  return Turn::Through;
}

Turn draw_turn_on(const NetworkTopology& topo, std::size_t link, RngStreams& rng) {
  const LinkSpec& l = topo.links[link];
  return draw_turn(topo.intersections[l.to].turn_ratios[static_cast<std::size_t>(l.approach)], rng.stream("routing"));
}

// Least occupied lane serving the turn that still has storage.
std::optional<std::size_t> pick_lane(const NetworkTopology& topo, const SimState& state, std::size_t link, Turn turn) {
  const LinkSpec& l = topo.links[link];
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < l.lanes.size(); ++k) {
    if (!l.lanes[k].serves(turn)) continue;
    if (!best || state.lanes[link][k].vehicles.size() < state.lanes[link][*best].vehicles.size()) best = k;
  }
  if (best && state.lanes[link][*best].vehicles.size() >= l.lane_capacity()) return std::nullopt;
  return best;
}

void enter_link(const NetworkTopology& topo, SimState& state, Vehicle v, std::size_t lane) {
  v.position_m = 0.0;
  v.speed_mps = topo.links[v.link].free_flow_mps;
  state.lanes[v.link][lane].vehicles.push_back(std::move(v));
}

bool lane_has_green(const LaneSpec& spec, Side approach, const signal::SignalInterval& iv,
                    const signal::PhaseScheme& scheme) {
  return std::any_of(spec.turns.begin(), spec.turns.end(),
                     [&](Turn t) { return signal::is_green(iv, scheme, Movement{approach, t}); });
}

}  // namespace

std::size_t SimState::in_network() const {
  std::size_t n = 0;
  for (const auto& link : lanes) {
    for (const auto& lane : link) n += lane.vehicles.size();
  }
  return n;
}

SimState make_state(const NetworkTopology& topo, std::uint64_t seed) {
  SimState s;
  s.rng = RngStreams(seed);
  s.lanes.resize(topo.links.size());
  for (std::size_t l = 0; l < topo.links.size(); ++l) s.lanes[l].resize(topo.links[l].lanes.size());
  s.signals.assign(topo.size(), signal::SignalInterval{});
  s.entry_backlog.resize(topo.entries.size());
  s.arrival_credit.assign(topo.entries.size(), 0.0);
  s.queued_vehicle_seconds.assign(topo.size(), 0.0);
  s.vehicle_delay_s.assign(topo.size(), 0.0);
  return s;
}

std::vector<std::vector<Vehicle>> spawn_arrivals(const NetworkTopology& topo, SimState& state,
                                                 const SimParams& params) {
  std::vector<std::vector<Vehicle>> out(topo.entries.size());
  for (std::size_t e = 0; e < topo.entries.size(); ++e) {
    const EntrySpec& entry = topo.entries[e];
    const double mean = entry.demand.rate_at(state.clock_s) * params.dt_s;
    std::uint64_t count = 0;
    if (params.arrivals == ArrivalProcess::Deterministic) {
      state.arrival_credit[e] += mean;
      count = static_cast<std::uint64_t>(std::floor(state.arrival_credit[e] + kEps));
      state.arrival_credit[e] -= static_cast<double>(count);
    } else if (mean > 0.0) {
      auto& rng = state.rng.stream("arrivals/" + std::to_string(e));
      count = std::poisson_distribution<std::uint64_t>(mean)(rng);
    }
    for (std::uint64_t k = 0; k < count; ++k) {
      Vehicle v;
      v.id = state.next_id++;
      v.link = entry.link;
      v.speed_mps = topo.links[entry.link].free_flow_mps;
      v.turn = draw_turn_on(topo, entry.link, state.rng);
      out[e].push_back(v);
    }
  }
  return out;
}

bool place_vehicle(const NetworkTopology& topo, SimState& state, std::size_t link, Turn turn) {
  const auto lane = pick_lane(topo, state, link, turn);
  if (!lane) return false;
  Vehicle v;
  v.id = state.next_id++;
  v.link = link;
  v.turn = turn;
  v.entry_time_s = state.clock_s;
  v.link_entry_time_s = state.clock_s;
  enter_link(topo, state, std::move(v), *lane);
  ++state.entered;
  return true;
}

void step_sim(const NetworkTopology& topo, std::span<const signal::PhaseScheme> schemes, SimState& state,
              const SimParams& params) {
  const double dt = params.dt_s;
  const double t0 = state.clock_s;

  // Arrivals join their entry backlog and move in while storage allows.
  auto arrivals = spawn_arrivals(topo, state, params);
  for (std::size_t e = 0; e < topo.entries.size(); ++e) {
    auto& backlog = state.entry_backlog[e];
    for (auto& v : arrivals[e]) backlog.push_back(std::move(v));
    while (!backlog.empty()) {
      const auto lane = pick_lane(topo, state, backlog.front().link, backlog.front().turn);
      if (!lane) break;
      Vehicle v = std::move(backlog.front());
      backlog.pop_front();
      v.entry_time_s = t0;
      v.link_entry_time_s = t0;
      enter_link(topo, state, std::move(v), *lane);
      ++state.entered;
    }
  }

  // (1) Moving vehicles advance up to the back of the queue.
  for (std::size_t l = 0; l < topo.links.size(); ++l) {
    const LinkSpec& spec = topo.links[l];
    for (auto& lane : state.lanes[l]) {
      for (std::size_t k = lane.queued; k < lane.vehicles.size(); ++k) {
        Vehicle& v = lane.vehicles[k];
        const double back_of_queue = spec.length_m - static_cast<double>(lane.queued) * spec.jam_spacing_m;
        const double next = v.position_m + spec.free_flow_mps * dt;
        if (k == lane.queued && next >= back_of_queue - kEps) {
          v.position_m = back_of_queue;
          v.speed_mps = 0.0;
          ++lane.queued;
        } else {
          v.position_m = std::min(next, back_of_queue);
        }
      }
    }
  }

  // (2) Queue heads with right of way discharge at the saturation rate.
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto& iv = state.signals[i];
    const auto& scheme = schemes[i];
    for (std::size_t s = 0; s < kSides; ++s) {
      const auto link = topo.incoming[i][s];
      if (!link) continue;
      const LinkSpec& spec = topo.links[*link];
      const Side approach = static_cast<Side>(s);
      for (std::size_t k = 0; k < spec.lanes.size(); ++k) {
        LaneState& lane = state.lanes[*link][k];
        if (!lane_has_green(spec.lanes[k], approach, iv, scheme)) {
          lane.service_credit = 0.0;
          continue;
        }
        lane.service_credit += spec.saturation_vps * dt;
        while (lane.queued > 0 && lane.service_credit >= 1.0 - kEps) {
          Vehicle& head = lane.vehicles.front();
          if (!signal::is_green(iv, scheme, Movement{approach, head.turn})) break;
          const auto out = topo.outgoing[i][static_cast<std::size_t>(exit_side(approach, head.turn))];
          std::optional<std::size_t> target_lane;
          if (out) {
            if (!head.next_turn) head.next_turn = draw_turn_on(topo, *out, state.rng);
            target_lane = pick_lane(topo, state, *out, *head.next_turn);
            if (!target_lane) break;  // spillback: downstream storage full
          }
          Vehicle v = std::move(head);
          lane.vehicles.pop_front();
          --lane.queued;
          lane.service_credit -= 1.0;
          const double travel = t0 + dt - v.link_entry_time_s;
          state.vehicle_delay_s[i] += std::max(0.0, travel - spec.free_flow_time());
          if (out) {
            v.link = *out;
            v.turn = *v.next_turn;
            v.next_turn.reset();
            v.link_entry_time_s = t0 + dt;
            enter_link(topo, state, std::move(v), *target_lane);
          } else {
            ++state.exited;
          }
        }
        for (std::size_t q = 0; q < lane.queued; ++q) {
          lane.vehicles[q].position_m = spec.length_m - static_cast<double>(q) * spec.jam_spacing_m;
        }
        lane.service_credit = std::min(lane.service_credit, 1.0);
      }
    }
  }

  // (3) Delay accrues for every stopped vehicle.
  for (std::size_t i = 0; i < topo.size(); ++i) {
    for (std::size_t s = 0; s < kSides; ++s) {
      const auto link = topo.incoming[i][s];
      if (!link) continue;
      for (auto& lane : state.lanes[*link]) {
        state.queued_vehicle_seconds[i] += static_cast<double>(lane.queued) * dt;
        for (std::size_t q = 0; q < lane.queued; ++q) lane.vehicles[q].accumulated_delay_s += dt;
      }
    }
  }

  // (4)
  state.clock_s = t0 + dt;
}

double intersection_delay(const SimState& state, std::size_t intersection) {
  if (intersection >= state.queued_vehicle_seconds.size()) {
    throw std::out_of_range("unknown intersection " + std::to_string(intersection));
  }
  return state.queued_vehicle_seconds[intersection];
}

}  // namespace atsc::sim
