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

#include "atsc/sim/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace atsc::sim {

const char* to_string(Side s) {
  switch (s) {
    case Side::North: return "N";
    case Side::East: return "E";
    case Side::South: return "S";
    case Side::West: return "W";
  }
  return "?";
}

const char* to_string(Turn t) {
  switch (t) {
    case Turn::Left: return "L";
    case Turn::Through: return "T";
    case Turn::Right: return "R";
  }
  return "?";
}

bool LaneSpec::serves(Turn t) const { return std::find(turns.begin(), turns.end(), t) != turns.end(); }

std::size_t LinkSpec::lane_capacity() const {
  return static_cast<std::size_t>(std::floor(length_m / jam_spacing_m + 1e-9));
}

double DemandProfile::rate_at(double t) const {
  double rate = 0.0;
  for (const auto& [start, r] : steps) {
    if (t + 1e-9 < start) break;
    rate = r;
  }
  return rate;
}

std::vector<std::size_t> NetworkTopology::neighbors(std::size_t intersection) const {
  std::vector<std::size_t> out;
  for (const auto& n : main_street_neighbors.at(intersection)) {
    if (n) out.push_back(*n);
  }
  return out;
}

namespace {

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  throw NetworkError(os.str());
}

void check_link(const NetworkConfig& c, std::size_t idx) {
  const LinkSpec& l = c.links[idx];
  if (l.to >= c.intersections.size()) fail("link ", idx, ": dangling destination intersection ", l.to);
  if (l.from.kind == NodeRef::Kind::Intersection) {
    if (l.from.index >= c.intersections.size()) fail("link ", idx, ": dangling source intersection ", l.from.index);
    if (l.from.index == l.to) fail("link ", idx, ": self loop at intersection ", l.to);
  } else if (l.from.index >= c.boundaries) {
    fail("link ", idx, ": dangling source boundary ", l.from.index);
  }
  if (!(l.length_m > 0.0)) fail("link ", idx, ": non-positive length ", l.length_m);
  if (!(l.free_flow_mps > 0.0)) fail("link ", idx, ": non-positive free-flow speed ", l.free_flow_mps);
  if (!(l.saturation_vps > 0.0)) fail("link ", idx, ": non-positive saturation flow ", l.saturation_vps);
  if (!(l.jam_spacing_m > 0.0)) fail("link ", idx, ": non-positive jam spacing ", l.jam_spacing_m);
  if (l.lane_capacity() < 1) fail("link ", idx, ": shorter than one jam spacing");
  if (l.lanes.empty()) fail("link ", idx, ": no lanes");
  for (const auto& lane : l.lanes) {
    if (lane.turns.empty()) fail("link ", idx, ": lane serves no movement");
  }
}

}  // namespace

NetworkTopology build_network(NetworkConfig config) {
  if (config.intersections.empty()) fail("network needs at least one intersection");
  const std::size_t n = config.intersections.size();

  NetworkTopology topo;
  topo.incoming.assign(n, {});
  topo.outgoing.assign(n, {});
  topo.main_street_neighbors.assign(n, {});

  for (std::size_t i = 0; i < config.links.size(); ++i) {
    check_link(config, i);
    const LinkSpec& l = config.links[i];
    auto& in = topo.incoming[l.to][static_cast<std::size_t>(l.approach)];
    if (in) fail("intersection ", l.to, ": two links arrive on side ", to_string(l.approach));
    in = i;
    if (l.from.kind == NodeRef::Kind::Intersection) {
      auto& out = topo.outgoing[l.from.index][static_cast<std::size_t>(opposite(l.approach))];
      if (out) fail("intersection ", l.from.index, ": two links leave through side ", to_string(opposite(l.approach)));
      out = i;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const IntersectionSpec& spec = config.intersections[i];
    for (std::size_t s = 0; s < kSides; ++s) {
      const auto& link = topo.incoming[i][s];
      if (!link) continue;
      const auto& ratios = spec.turn_ratios[s];
      double sum = 0.0;
      for (std::size_t t = 0; t < kTurns; ++t) {
        if (ratios[t] < 0.0) fail("intersection ", i, " approach ", to_string(static_cast<Side>(s)), ": negative turn ratio");
        sum += ratios[t];
        if (ratios[t] > 0.0) {
          const auto& lanes = config.links[*link].lanes;
          const bool served = std::any_of(lanes.begin(), lanes.end(),
                                          [&](const LaneSpec& ln) { return ln.serves(static_cast<Turn>(t)); });
          if (!served) {
            fail("intersection ", i, " approach ", to_string(static_cast<Side>(s)), ": no lane serves turn ",
                 to_string(static_cast<Turn>(t)));
          }
        }
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        fail("intersection ", i, " approach ", to_string(static_cast<Side>(s)), ": turn ratios sum to ", sum);
      }
    }
  }

  for (std::size_t e = 0; e < config.entries.size(); ++e) {
    const EntrySpec& entry = config.entries[e];
    if (entry.link >= config.links.size()) fail("entry ", e, ": dangling link ", entry.link);
    if (config.links[entry.link].from.kind != NodeRef::Kind::Boundary) {
      fail("entry ", e, ": link ", entry.link, " does not start at a boundary");
    }
    for (const auto& [start, rate] : entry.demand.steps) {
      if (rate < 0.0) fail("entry ", e, ": negative arrival rate");
      (void)start;
    }
  }

  // Adjacency through links between intersections must be two-way.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < kSides; ++s) {
      const auto& in = topo.incoming[i][s];
      if (!in || config.links[*in].from.kind != NodeRef::Kind::Intersection) continue;
      const std::size_t j = config.links[*in].from.index;
      const auto& back = topo.outgoing[i][s];
      if (!back || config.links[*back].to != j) {
        fail("asymmetric adjacency between intersections ", j, " and ", i);
      }
    }
    const auto neighbor_on = [&](Side side) -> std::optional<std::size_t> {
      const auto& in = topo.incoming[i][static_cast<std::size_t>(side)];
      if (in && config.links[*in].from.kind == NodeRef::Kind::Intersection) return config.links[*in].from.index;
      return std::nullopt;
    };
    topo.main_street_neighbors[i] = {neighbor_on(Side::North), neighbor_on(Side::South)};
  }

  topo.intersections = std::move(config.intersections);
  topo.boundaries = config.boundaries;
  topo.links = std::move(config.links);
  topo.entries = std::move(config.entries);
  return topo;
}

NetworkConfig corridor_config(const CorridorParams& p) {
  NetworkConfig c;
  const std::size_t n = p.intersections;
  c.intersections.resize(n);

  std::vector<LaneSpec> lanes;
  if (p.exclusive_left) {
    lanes.push_back(LaneSpec{{Turn::Left}});
    for (std::size_t k = 0; k < p.through_lanes; ++k) lanes.push_back(LaneSpec{{Turn::Through, Turn::Right}});
  } else {
    for (std::size_t k = 0; k < p.through_lanes; ++k) lanes.push_back(LaneSpec{{Turn::Left, Turn::Through, Turn::Right}});
  }

  const auto make_link = [&](NodeRef from, std::size_t to, Side approach) {
    LinkSpec l;
    l.from = from;
    l.to = to;
    l.approach = approach;
    l.length_m = p.link_length_m;
    l.free_flow_mps = p.free_flow_mps;
    l.saturation_vps = p.saturation_vps;
    l.jam_spacing_m = p.jam_spacing_m;
    l.lanes = lanes;
    return l;
  };
  const auto add_entry = [&](std::size_t to, Side approach, const DemandProfile& demand) {
    c.links.push_back(make_link(NodeRef::boundary(c.boundaries++), to, approach));
    c.entries.push_back({c.links.size() - 1, demand});
  };

  for (std::size_t i = 0; i < n; ++i) {
    auto& spec = c.intersections[i];
    spec.name = "I" + std::to_string(i);
    spec.turn_ratios[static_cast<std::size_t>(Side::North)] = p.main_turns;
    spec.turn_ratios[static_cast<std::size_t>(Side::South)] = p.main_turns;
    spec.turn_ratios[static_cast<std::size_t>(Side::East)] = p.side_turns;
    spec.turn_ratios[static_cast<std::size_t>(Side::West)] = p.side_turns;
  }

  add_entry(0, Side::North, p.main_demand);
  add_entry(n - 1, Side::South, p.main_demand);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    c.links.push_back(make_link(NodeRef::intersection(i), i + 1, Side::North));  // southbound
    c.links.push_back(make_link(NodeRef::intersection(i + 1), i, Side::South));  // northbound
  }
  for (std::size_t i = 0; i < n; ++i) {
    add_entry(i, Side::East, p.side_demand);
    add_entry(i, Side::West, p.side_demand);
  }
  return c;
}

}  // namespace atsc::sim
