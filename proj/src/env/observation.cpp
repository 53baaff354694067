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

#include "atsc/env/observation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace atsc::env {

std::vector<double> Observation::features() const {
  std::vector<double> f;
  f.reserve(feature_size());
  for (int c : vehicle_count) f.push_back(c);
  for (int c : queued_count) f.push_back(c);
  for (std::size_t p = 0; p < phase_count; ++p) f.push_back(p == phase ? 1.0 : 0.0);
  f.push_back(std::clamp(elapsed_green_s / max_green_s, 0.0, 1.0));
  f.push_back(in_transition ? 1.0 : 0.0);
  return f;
}

int Observation::total_queued() const { return std::accumulate(queued_count.begin(), queued_count.end(), 0); }

std::vector<AgentContext> make_contexts(const sim::NetworkTopology& topo, std::span<const signal::PhaseScheme> schemes,
                                        double detection_range_m) {
  if (schemes.size() != topo.size()) throw std::invalid_argument("need one phase scheme per intersection");
  std::vector<AgentContext> out(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i) {
    AgentContext& c = out[i];
    c.agent = i;
    c.intersection = i;
    c.detection_range_m = detection_range_m;
    c.neighbors = topo.main_street_neighbors[i];
    c.action_count = schemes[i].size();
    for (std::size_t s = 0; s < sim::kSides; ++s) {
      const auto link = topo.incoming[i][s];
      if (!link) continue;
      for (std::size_t k = 0; k < topo.links[*link].lanes.size(); ++k) {
        c.lanes.push_back({*link, k, static_cast<sim::Side>(s)});
      }
    }
  }
  return out;
}

bool is_sensed(const sim::LinkSpec& link, const sim::Vehicle& v, double range) {
  const double rear = std::max(0.0, v.position_m - link.jam_spacing_m);
  return link.length_m - rear <= range + 1e-9;
}

Observation observe(const sim::NetworkTopology& topo, const sim::SimState& state, const AgentContext& ctx,
                    const signal::PhaseScheme& scheme, double threshold_mps) {
  if (!(threshold_mps > 0.0)) throw std::invalid_argument("queue speed threshold must be positive");
  Observation o;
  o.vehicle_count.reserve(ctx.lanes.size());
  o.queued_count.reserve(ctx.lanes.size());
  for (const LaneRef& ref : ctx.lanes) {
    const auto& spec = topo.links[ref.link];
    int count = 0;
    int queued = 0;
    for (const auto& v : state.lanes[ref.link][ref.lane].vehicles) {
      if (!is_sensed(spec, v, ctx.detection_range_m)) continue;
      ++count;
      if (v.speed_mps < threshold_mps) ++queued;
    }
    o.vehicle_count.push_back(count);
    o.queued_count.push_back(queued);
  }
  const auto& iv = state.signals[ctx.intersection];
  o.phase_count = scheme.size();
  o.in_transition = iv.in_transition();
  o.phase = iv.in_transition() ? iv.pending_phase.value_or(iv.current_phase) : iv.current_phase;
  o.elapsed_green_s = iv.in_transition() ? 0.0 : iv.elapsed_s;
  o.max_green_s = scheme.max_green_s;
  return o;
}

double local_reward(const sim::NetworkTopology& topo, const sim::SimState& state, const AgentContext& ctx,
                    double threshold_mps) {
  if (!(threshold_mps > 0.0)) throw std::invalid_argument("queue speed threshold must be positive");
  int queued = 0;
  for (const LaneRef& ref : ctx.lanes) {
    const auto& spec = topo.links[ref.link];
    for (const auto& v : state.lanes[ref.link][ref.lane].vehicles) {
      if (v.speed_mps < threshold_mps && is_sensed(spec, v, ctx.detection_range_m)) ++queued;
    }
  }
  return 0.0 - static_cast<double>(queued);
}

}  // namespace atsc::env
