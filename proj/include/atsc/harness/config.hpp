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

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "atsc/agent/dqn.hpp"
#include "atsc/env/environment.hpp"
#include "atsc/signal/controllers.hpp"
#include "atsc/signal/phase.hpp"
#include "atsc/sim/network.hpp"

namespace atsc::harness {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { Transformer, MemorylessDqn, EmarlinNoHistory, FixedTime, Actuated, Random };

const char* to_string(Method m);
Method parse_method(const std::string& s);
bool is_learning(Method m);

/// test64 runs everything in double precision; train32 trains in float.
enum class Profile { Test64, Train32 };
const char* to_string(Profile p);
Profile parse_profile(const std::string& s);

struct ExperimentConfig {
  // [network] + [demand]
  sim::CorridorParams network;
  sim::ArrivalProcess arrivals = sim::ArrivalProcess::Poisson;
  // [signal]
  std::string scheme_name = "four_phase";
  signal::PhaseScheme scheme;
  signal::TimingPlan fixed_plan;
  double fixed_offset_s = 0.0;  // added per intersection index down the corridor
  double actuated_gap_s = 3.0;
  std::size_t actuated_recall = 0;
  // [env]
  env::EnvConfig env;
  double train_episode_length_s = 3600.0;
  // [agent]
  Method method = Method::Transformer;
  agent::AgentConfig agent;
  // [run]
  std::vector<std::uint64_t> seeds;
  std::size_t train_episodes = 10;
  std::vector<std::uint64_t> eval_seeds;
  std::size_t checkpoint_every = 1;
  std::filesystem::path output_dir = "runs";
  Profile profile = Profile::Test64;

  /// Agent settings after the method overrides (history length, messages).
  agent::AgentConfig effective_agent() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical INI rendering; parse_config(render_config(c)) reproduces c.
std::string render_config(const ExperimentConfig& c);

/// Stable hash of everything that determines evaluation conditions.
std::string env_fingerprint(const ExperimentConfig& c);

sim::NetworkTopology build_topology(const ExperimentConfig& c);
env::Environment make_environment(const ExperimentConfig& c, bool training);

}  // namespace atsc::harness
