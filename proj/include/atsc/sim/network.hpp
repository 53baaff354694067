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
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace atsc::sim {

/// Compass side of an intersection. An approach is named by the side traffic
/// arrives from, so vehicles on the North approach head south.
enum class Side : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };
enum class Turn : std::uint8_t { Left = 0, Through = 1, Right = 2 };

inline constexpr std::size_t kSides = 4;
inline constexpr std::size_t kTurns = 3;
inline constexpr std::size_t kMovements = kSides * kTurns;

constexpr Side opposite(Side s) { return static_cast<Side>((static_cast<int>(s) + 2) % 4); }

/// Side of the intersection a movement leaves through.
constexpr Side exit_side(Side approach, Turn turn) {
  const int heading = (static_cast<int>(approach) + 2) % 4;
  switch (turn) {
    case Turn::Left: return static_cast<Side>((heading + 3) % 4);
    case Turn::Right: return static_cast<Side>((heading + 1) % 4);
    case Turn::Through: break;
  }
  return static_cast<Side>(heading);
}

struct Movement {
  Side approach = Side::North;
  Turn turn = Turn::Through;

  constexpr std::size_t index() const {
    return static_cast<std::size_t>(approach) * kTurns + static_cast<std::size_t>(turn);
  }
  friend constexpr bool operator==(Movement, Movement) = default;
};

const char* to_string(Side s);
const char* to_string(Turn t);

class NetworkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct NodeRef {
  enum class Kind : std::uint8_t { Intersection, Boundary };
  Kind kind = Kind::Boundary;
  std::size_t index = 0;

  static NodeRef intersection(std::size_t i) { return {Kind::Intersection, i}; }
  static NodeRef boundary(std::size_t i) { return {Kind::Boundary, i}; }
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct LaneSpec {
  std::vector<Turn> turns;  // movements this lane serves at the stop line

  bool serves(Turn t) const;
};

/// A directed road segment ending at an intersection stop line.
struct LinkSpec {
  NodeRef from;
  std::size_t to = 0;
  Side approach = Side::North;
  double length_m = 300.0;
  double free_flow_mps = 15.0;
  double saturation_vps = 0.5;  // per lane
  double jam_spacing_m = 7.0;
  std::vector<LaneSpec> lanes;

  /// Vehicles a single lane can store end to end.
  std::size_t lane_capacity() const;
  double free_flow_time() const { return length_m / free_flow_mps; }
};

/// Piecewise-constant arrival rate, veh/s. Steps are (start time s, rate).
struct DemandProfile {
  std::vector<std::pair<double, double>> steps;

  double rate_at(double t) const;
  static DemandProfile constant(double rate) { return {{{0.0, rate}}}; }
};

struct EntrySpec {
  std::size_t link = 0;
  DemandProfile demand;
};

struct IntersectionSpec {
  std::string name;
  /// Left/through/right fractions per approach side, indexed by Side then Turn.
  std::array<std::array<double, kTurns>, kSides> turn_ratios{};
};

struct NetworkConfig {
  std::vector<IntersectionSpec> intersections;
  std::size_t boundaries = 0;
  std::vector<LinkSpec> links;
  std::vector<EntrySpec> entries;
};

/// Validated network with derived adjacency.
struct NetworkTopology {
  std::vector<IntersectionSpec> intersections;
  std::size_t boundaries = 0;
  std::vector<LinkSpec> links;
  std::vector<EntrySpec> entries;

  std::vector<std::array<std::optional<std::size_t>, kSides>> incoming;
  // Link leaving through a side; empty means vehicles leave the network there.
  std::vector<std::array<std::optional<std::size_t>, kSides>> outgoing;
  // Main street runs north-south: slot 0 is the northern (upstream) neighbour,
  // slot 1 the southern (downstream) one.
  std::vector<std::array<std::optional<std::size_t>, 2>> main_street_neighbors;

  std::size_t size() const { return intersections.size(); }
  std::vector<std::size_t> neighbors(std::size_t intersection) const;
};

/// Validates a configuration and derives adjacency. Throws NetworkError.
NetworkTopology build_network(NetworkConfig config);

struct CorridorParams {
  std::size_t intersections = 5;
  double link_length_m = 300.0;
  double free_flow_mps = 15.0;
  double saturation_vps = 0.5;
  double jam_spacing_m = 7.0;
  DemandProfile main_demand = DemandProfile::constant(0.25);  // per boundary entry, veh/s
  DemandProfile side_demand = DemandProfile::constant(0.08);
  std::array<double, kTurns> main_turns{0.1, 0.8, 0.1};
  std::array<double, kTurns> side_turns{0.2, 0.6, 0.2};
  // Each approach gets one exclusive left lane and `through_lanes` shared
  // through/right lanes. Without the exclusive left lane every lane serves all
  // three turns.
  std::size_t through_lanes = 1;
  bool exclusive_left = true;
};

/// N intersections in a north-south line, each with four approaches. The main
/// street is fed from both corridor ends; every side street has its own entry.
NetworkConfig corridor_config(const CorridorParams& params);

}  // namespace atsc::sim
