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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "atsc/signal/phase.hpp"
#include "atsc/sim/simulator.hpp"
#include "fixtures.hpp"

namespace atsc::sim {
namespace {

using testing::all_red_toward;
using testing::green;
using testing::incoming;

struct Bench {
  NetworkTopology topo = testing::quiet_intersection();
  std::vector<signal::PhaseScheme> schemes{signal::four_phase_scheme()};
  SimState state = make_state(topo, 1);
  SimParams params;

  void step(int n = 1) {
    for (int i = 0; i < n; ++i) step_sim(topo, schemes, state, params);
  }
  LaneState& north_through() { return state.lanes[incoming(topo, 0, Side::North)][1]; }
};

// Eight vehicles stopped at the north stop line under all-red.
Bench queued_bench(int vehicles) {
  Bench b;
  b.state.signals[0] = all_red_toward(0);
  const auto link = incoming(b.topo, 0, Side::North);
  for (int i = 0; i < vehicles; ++i) {
    EXPECT_TRUE(place_vehicle(b.topo, b.state, link, Turn::Through));
    b.step();
  }
  b.step(25);
  EXPECT_EQ(b.north_through().queued, static_cast<std::size_t>(vehicles));
  return b;
}

TEST(Simulator, GreenDischargesAtSaturationRate) {
  auto b = queued_bench(8);
  b.state.signals[0] = green(0);
  b.step(10);
  EXPECT_EQ(b.north_through().queued, 3u);
  EXPECT_EQ(b.state.exited, 5u);
}

TEST(Simulator, RedAccruesOneSecondPerQueuedVehicle) {
  auto b = queued_bench(4);
  std::vector<double> before;
  for (const auto& v : b.north_through().vehicles) before.push_back(v.accumulated_delay_s);
  const double qvs = b.state.queued_vehicle_seconds[0];
  b.step();
  EXPECT_EQ(b.north_through().queued, 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(b.north_through().vehicles[k].accumulated_delay_s, before[k] + 1.0);
  EXPECT_DOUBLE_EQ(b.state.queued_vehicle_seconds[0], qvs + 4.0);
}

TEST(Simulator, FreeFlowVehicleExitsAfterTwentySeconds) {
  Bench b;
  b.state.signals[0] = green(0);
  ASSERT_TRUE(place_vehicle(b.topo, b.state, incoming(b.topo, 0, Side::North), Turn::Through));
  b.step(19);
  EXPECT_EQ(b.state.exited, 0u);
  b.step();
  EXPECT_EQ(b.state.exited, 1u);
  EXPECT_DOUBLE_EQ(b.state.clock_s, 20.0);
  EXPECT_DOUBLE_EQ(b.state.vehicle_delay_s[0], 0.0);
  EXPECT_DOUBLE_EQ(b.state.queued_vehicle_seconds[0], 0.0);
}

TEST(Simulator, ZeroRateSpawnsNothing) {
  Bench b;
  for (int i = 0; i < 1000; ++i) {
    for (const auto& e : spawn_arrivals(b.topo, b.state, b.params)) EXPECT_TRUE(e.empty());
  }
}

TEST(Simulator, PoissonArrivalMeanMatchesRate) {
  CorridorParams p;
  p.intersections = 1;
  p.main_demand = DemandProfile::constant(0.2);
  p.side_demand = DemandProfile::constant(0.0);
  const auto topo = build_network(corridor_config(p));
  auto state = make_state(topo, 3);
  const int n = 100000;
  double total = 0;
  for (int i = 0; i < n; ++i) total += static_cast<double>(spawn_arrivals(topo, state, {})[0].size());
  const double mean = total / n;
  EXPECT_NEAR(mean, 0.2, 3 * std::sqrt(0.2 / n));
}

TEST(Simulator, SameSeedSameArrivals) {
  const auto topo = testing::corridor(2);
  auto a = make_state(topo, 11);
  auto b = make_state(topo, 11);
  for (int i = 0; i < 200; ++i) {
    const auto x = spawn_arrivals(topo, a, {});
    const auto y = spawn_arrivals(topo, b, {});
    ASSERT_EQ(x, y);
  }
}

TEST(Simulator, DeterministicArrivalsAccumulateCredit) {
  CorridorParams p;
  p.intersections = 1;
  p.main_demand = DemandProfile::constant(0.25);
  p.side_demand = DemandProfile::constant(0.0);
  const auto topo = build_network(corridor_config(p));
  auto state = make_state(topo, 0);
  SimParams params;
  params.arrivals = ArrivalProcess::Deterministic;
  std::vector<std::size_t> counts;
  for (int i = 0; i < 8; ++i) counts.push_back(spawn_arrivals(topo, state, params)[0].size());
  EXPECT_EQ(counts, (std::vector<std::size_t>{0, 0, 0, 1, 0, 0, 0, 1}));
}

TEST(Simulator, IntersectionDelayDefinition) {
  Bench b;
  EXPECT_DOUBLE_EQ(intersection_delay(b.state, 0), 0.0);
  EXPECT_THROW(intersection_delay(b.state, 1), std::out_of_range);
  auto q = queued_bench(1);
  const double before = intersection_delay(q.state, 0);
  q.step(30);
  EXPECT_DOUBLE_EQ(intersection_delay(q.state, 0) - before, 30.0);
}

TEST(Simulator, TwoConstantQueuesGiveSevenHundredSeconds) {
  Bench b;
  b.state.signals[0] = all_red_toward(0);
  const auto north = incoming(b.topo, 0, Side::North);
  const auto south = incoming(b.topo, 0, Side::South);
  for (int i = 0; i < 4; ++i) {
    if (i < 3) place_vehicle(b.topo, b.state, north, Turn::Through);
    place_vehicle(b.topo, b.state, south, Turn::Through);
    b.step();
  }
  b.step(30);
  const double before = intersection_delay(b.state, 0);
  b.step(100);
  EXPECT_DOUBLE_EQ(intersection_delay(b.state, 0) - before, 700.0);
}

TEST(Simulator, QueueSlotsStackFromStopLine) {
  auto b = queued_bench(3);
  const auto& lane = b.north_through();
  EXPECT_DOUBLE_EQ(lane.vehicles[0].position_m, 300.0);
  EXPECT_DOUBLE_EQ(lane.vehicles[1].position_m, 293.0);
  EXPECT_DOUBLE_EQ(lane.vehicles[2].position_m, 286.0);
  for (const auto& v : lane.vehicles) EXPECT_EQ(v.speed_mps, 0.0);
}

TEST(Simulator, SpillbackBlocksDischarge) {
  // Two intersections; fill the southbound link between them, then give the
  // upstream signal green: nothing can enter the full link.
  CorridorParams p;
  p.intersections = 2;
  p.link_length_m = 35;  // five vehicles per lane
  p.main_demand = DemandProfile::constant(0.0);
  p.side_demand = DemandProfile::constant(0.0);
  p.main_turns = {0.0, 1.0, 0.0};
  const auto topo = build_network(corridor_config(p));
  std::vector<signal::PhaseScheme> schemes(2, signal::four_phase_scheme());
  auto state = make_state(topo, 5);
  state.signals[0] = all_red_toward(0);
  state.signals[1] = all_red_toward(0);
  const auto between = incoming(topo, 1, Side::North);
  const auto entry = incoming(topo, 0, Side::North);
  for (int i = 0; i < 5; ++i) {
    ASSERT_TRUE(place_vehicle(topo, state, between, Turn::Through));
    step_sim(topo, schemes, state, {});
  }
  EXPECT_FALSE(place_vehicle(topo, state, between, Turn::Through));
  ASSERT_TRUE(place_vehicle(topo, state, entry, Turn::Through));
  for (int i = 0; i < 10; ++i) step_sim(topo, schemes, state, {});
  state.signals[0] = green(0);
  for (int i = 0; i < 20; ++i) step_sim(topo, schemes, state, {});
  EXPECT_EQ(state.lanes[entry][1].queued, 1u);
  EXPECT_EQ(state.lanes[between][1].vehicles.size(), 5u);
}

// Random signal sequences on a loaded corridor: conservation, queue extent
// and monotone counters hold at every step.
TEST(SimulatorProperty, ConservationAndBoundsUnderRandomSignals) {
  CorridorParams p;
  p.main_demand = DemandProfile::constant(0.4);
  p.side_demand = DemandProfile::constant(0.2);
  const auto topo = testing::corridor(3, p);
  std::vector<signal::PhaseScheme> schemes(3, signal::four_phase_scheme());
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    auto state = make_state(topo, rng());
    std::vector<double> last_qvs(3, 0.0);
    for (int t = 0; t < 600; ++t) {
      for (auto& s : state.signals) {
        const auto k = rng() % 4;
        s = k == 3 ? all_red_toward(0) : green(k % 4);
      }
      step_sim(topo, schemes, state, {});
      ASSERT_EQ(state.entered, state.exited + state.in_network());
      for (std::size_t l = 0; l < topo.links.size(); ++l) {
        for (const auto& lane : state.lanes[l]) {
          ASSERT_LE(lane.vehicles.size(), topo.links[l].lane_capacity());
          ASSERT_LE(static_cast<double>(lane.queued) * topo.links[l].jam_spacing_m, topo.links[l].length_m);
          for (const auto& v : lane.vehicles) {
            ASSERT_GE(v.position_m, 0.0);
            ASSERT_LE(v.position_m, topo.links[l].length_m);
          }
        }
      }
      for (std::size_t i = 0; i < 3; ++i) {
        ASSERT_GE(state.queued_vehicle_seconds[i], last_qvs[i]);
        last_qvs[i] = state.queued_vehicle_seconds[i];
      }
    }
  }
}

TEST(SimulatorProperty, DischargePerStepBoundedBySaturation) {
  auto b = queued_bench(20);
  b.state.signals[0] = green(0);
  std::size_t last = b.north_through().queued;
  for (int t = 0; t < 30; ++t) {
    b.step();
    const std::size_t now = b.north_through().queued;
    ASSERT_LE(last - now, 1u);  // 0.5 veh/s * 1 s + 1
    last = now;
  }
}

TEST(SimulatorProperty, SameSeedSameTrajectory) {
  const auto topo = testing::corridor(3);
  std::vector<signal::PhaseScheme> schemes(3, signal::four_phase_scheme());
  auto a = make_state(topo, 77);
  auto b = make_state(topo, 77);
  for (int t = 0; t < 300; ++t) {
    step_sim(topo, schemes, a, {});
    step_sim(topo, schemes, b, {});
  }
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace atsc::sim
