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

#include "atsc/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

#include "atsc/sim/rng.hpp"

namespace atsc::harness {
namespace pt = boost::property_tree;
using nn::Index;

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key + ": not a number: '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key + ": not an unsigned integer: '" + s + "'");
  return v;
}

class Section {
 public:
  Section(const pt::ptree& root, const std::string& name) : name_(name) {
    const auto child = root.get_child_optional(name);
    if (!child) throw ConfigError("missing section [" + name + "]");
    tree_ = &*child;
  }

  std::string str(const std::string& key, const std::string& fallback) const {
    return tree_->get<std::string>(key, fallback);
  }
  double real(const std::string& key, double fallback) const {
    const auto v = tree_->get_optional<std::string>(key);
    return v ? to_double(*v, full(key)) : fallback;
  }
  std::uint64_t uint(const std::string& key, std::uint64_t fallback) const {
    const auto v = tree_->get_optional<std::string>(key);
    return v ? to_u64(*v, full(key)) : fallback;
  }
  bool flag(const std::string& key, bool fallback) const {
    const auto v = tree_->get_optional<std::string>(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError(full(key) + ": expected true or false");
  }
  std::string full(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const pt::ptree* tree_ = nullptr;
};

// "0.25" or "0:0.2, 1800:0.35" (start s : rate veh/s).
sim::DemandProfile parse_demand(const std::string& s, const std::string& key) {
  sim::DemandProfile d;
  for (const auto& part : split(s, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      d.steps.emplace_back(0.0, to_double(part, key));
    } else {
      d.steps.emplace_back(to_double(part.substr(0, colon), key), to_double(part.substr(colon + 1), key));
    }
  }
  if (d.steps.empty()) throw ConfigError(key + ": empty demand profile");
  return d;
}

std::string render_demand(const sim::DemandProfile& d) {
  std::string out;
  for (const auto& [t, r] : d.steps) out += (out.empty() ? "" : ",") + num(t) + ":" + num(r);
  return out;
}

std::array<double, sim::kTurns> parse_turns(const std::string& s, const std::string& key) {
  const auto parts = split(s, ',');
  if (parts.size() != sim::kTurns) throw ConfigError(key + ": expected left,through,right fractions");
  return {to_double(parts[0], key), to_double(parts[1], key), to_double(parts[2], key)};
}

signal::TimingPlan parse_plan(const std::string& s, const std::string& key) {
  signal::TimingPlan plan;
  for (const auto& part : split(s, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw ConfigError(key + ": expected phase:duration pairs");
    plan.emplace_back(to_u64(part.substr(0, colon), key), to_double(part.substr(colon + 1), key));
  }
  return plan;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s, const std::string& key) {
  std::vector<std::uint64_t> out;
  for (const auto& p : split(s, ',')) out.push_back(to_u64(p, key));
  return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (auto s : v) out += (out.empty() ? "" : ",") + std::to_string(s);
  return out;
}

signal::PhaseScheme scheme_by_name(const std::string& name) {
  if (name == "four_phase") return signal::four_phase_scheme();
  if (name == "ring_barrier") return signal::ring_barrier_scheme();
  if (name == "two_phase") return signal::two_phase_scheme();
  throw ConfigError("signal.scheme: unknown scheme '" + name + "'");
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::Transformer: return "transformer";
    case Method::MemorylessDqn: return "memoryless-dqn";
    case Method::EmarlinNoHistory: return "emarlin-nohistory";
    case Method::FixedTime: return "fixed-time";
    case Method::Actuated: return "actuated";
    case Method::Random: return "random";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (auto m : {Method::Transformer, Method::MemorylessDqn, Method::EmarlinNoHistory, Method::FixedTime,
                 Method::Actuated, Method::Random}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("agent.method: unknown method '" + s + "'");
}

bool is_learning(Method m) {
  return m == Method::Transformer || m == Method::MemorylessDqn || m == Method::EmarlinNoHistory;
}

const char* to_string(Profile p) { return p == Profile::Test64 ? "test64" : "train32"; }

Profile parse_profile(const std::string& s) {
  if (s == "test64") return Profile::Test64;
  if (s == "train32") return Profile::Train32;
  throw ConfigError("profile must be test64 or train32, got '" + s + "'");
}

agent::AgentConfig ExperimentConfig::effective_agent() const {
  agent::AgentConfig a = agent;
  if (method == Method::MemorylessDqn) {
    a.encoder.max_history = 1;
    a.communicate = false;
  } else if (method == Method::EmarlinNoHistory) {
    a.encoder.max_history = 1;
    a.communicate = true;
  }
  return a;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig c;

  const Section net(root, "network");
  c.network.intersections = net.uint("intersections", 3);
  c.network.link_length_m = net.real("link_length_m", 300.0);
  c.network.free_flow_mps = net.real("free_flow_mps", 15.0);
  c.network.saturation_vps = net.real("saturation_vps", 0.5);
  c.network.jam_spacing_m = net.real("jam_spacing_m", 7.0);
  c.network.through_lanes = net.uint("through_lanes", 1);
  c.network.exclusive_left = net.flag("exclusive_left", true);
  if (c.network.intersections == 0) throw ConfigError("network.intersections must be positive");

  const Section dem(root, "demand");
  c.network.main_demand = parse_demand(dem.str("main_rate", "0.25"), dem.full("main_rate"));
  c.network.side_demand = parse_demand(dem.str("side_rate", "0.08"), dem.full("side_rate"));
  c.network.main_turns = parse_turns(dem.str("main_turns", "0.1,0.8,0.1"), dem.full("main_turns"));
  c.network.side_turns = parse_turns(dem.str("side_turns", "0.2,0.6,0.2"), dem.full("side_turns"));
  const auto arrivals = dem.str("arrivals", "poisson");
  if (arrivals == "poisson") {
    c.arrivals = sim::ArrivalProcess::Poisson;
  } else if (arrivals == "deterministic") {
    c.arrivals = sim::ArrivalProcess::Deterministic;
  } else {
    throw ConfigError("demand.arrivals must be poisson or deterministic");
  }

  const Section sig(root, "signal");
  c.scheme_name = sig.str("scheme", "four_phase");
  c.scheme = scheme_by_name(c.scheme_name);
  c.scheme.min_green_s = sig.real("min_green_s", c.scheme.min_green_s);
  c.scheme.max_green_s = sig.real("max_green_s", c.scheme.max_green_s);
  c.scheme.yellow_s = sig.real("yellow_s", c.scheme.yellow_s);
  c.scheme.all_red_s = sig.real("all_red_s", c.scheme.all_red_s);
  try {
    signal::validate(c.scheme);
  } catch (const signal::SchemeError& e) {
    throw ConfigError(std::string("signal: ") + e.what());
  }
  c.fixed_plan = parse_plan(sig.str("fixed_plan", c.scheme.size() == 2 ? "0:30,1:30" : "0:40,1:15,2:30,3:15"),
                            sig.full("fixed_plan"));
  for (const auto& [phase, dur] : c.fixed_plan) {
    if (phase >= c.scheme.size()) throw ConfigError("signal.fixed_plan: phase out of range");
    if (!(dur > 0)) throw ConfigError("signal.fixed_plan: durations must be positive");
  }
  c.fixed_offset_s = sig.real("fixed_offset_s", 0.0);
  c.actuated_gap_s = sig.real("actuated_gap_s", 3.0);
  c.actuated_recall = sig.uint("actuated_recall", 0);
  if (c.actuated_recall >= c.scheme.size()) throw ConfigError("signal.actuated_recall: phase out of range");

  const Section env(root, "env");
  c.env.detection_range_m = env.real("detection_range_m", 50.0);
  c.env.queue_speed_threshold_mps = env.real("queue_threshold_mps", 2.0);
  c.env.episode_length_s = env.real("episode_length_s", 3600.0);
  c.env.sim.dt_s = env.real("dt_s", 1.0);
  c.env.sim.arrivals = c.arrivals;
  c.train_episode_length_s = env.real("train_episode_length_s", c.env.episode_length_s);
  const std::string reward = env.str("reward", "sensed");
  if (reward == "sensed") {
    c.env.reward = env::RewardSource::Sensed;
  } else if (reward == "ground_truth") {
    c.env.reward = env::RewardSource::GroundTruth;
  } else {
    throw ConfigError("env.reward must be sensed or ground_truth");
  }
  if (!(c.env.detection_range_m > 0) || !(c.env.queue_speed_threshold_mps > 0) || !(c.env.episode_length_s > 0) ||
      !(c.train_episode_length_s > 0) || !(c.env.sim.dt_s > 0)) {
    throw ConfigError("env: ranges, thresholds and lengths must be positive");
  }

  const Section ag(root, "agent");
  c.method = parse_method(ag.str("method", "transformer"));
  auto& a = c.agent;
  a.encoder.d_model = static_cast<Index>(ag.uint("d_model", 64));
  a.encoder.heads = static_cast<Index>(ag.uint("heads", 4));
  a.encoder.d_ff = static_cast<Index>(ag.uint("d_ff", 128));
  a.encoder.blocks = static_cast<Index>(ag.uint("blocks", 2));
  a.encoder.max_history = static_cast<Index>(ag.uint("max_history", 20));
  const auto pooling = ag.str("pooling", "mean");
  if (pooling == "mean") {
    a.encoder.pooling = encoder::Pooling::Mean;
  } else if (pooling == "first") {
    a.encoder.pooling = encoder::Pooling::First;
  } else {
    throw ConfigError("agent.pooling must be mean or first");
  }
  a.encoder.ln_eps = ag.real("ln_eps", 1e-5);
  a.q_hidden = static_cast<Index>(ag.uint("q_hidden", 128));
  a.communicate = ag.flag("communicate", true);
  a.gamma = ag.real("gamma", 0.95);
  a.batch_size = ag.uint("batch_size", 32);
  a.buffer_episodes = ag.uint("buffer_episodes", 200);
  a.epsilon_start = ag.real("epsilon_start", 1.0);
  a.epsilon_end = ag.real("epsilon_end", 0.05);
  a.epsilon_decay_steps = ag.uint("epsilon_decay_steps", 50000);
  a.warmup_episodes = ag.uint("warmup_episodes", 5);
  a.train_every = ag.uint("train_every", 1);
  a.target_sync_steps = ag.uint("target_sync_steps", 1000);
  a.adam.learning_rate = ag.real("learning_rate", 1e-3);
  a.huber_delta = ag.real("huber_delta", 1.0);
  a.grad_clip = ag.real("grad_clip", 0.0);
  a.reward_scale = ag.real("reward_scale", 1.0);
  a.count_scale = ag.real("count_scale", 1.0);
  a.action_repeat = ag.uint("action_repeat", 1);
  if (a.encoder.d_model % a.encoder.heads != 0 || a.encoder.d_model % 2 != 0) {
    throw ConfigError("agent: d_model must be even and divisible by heads");
  }
  if (a.batch_size == 0 || a.buffer_episodes == 0 || a.train_every == 0 || a.encoder.max_history == 0 ||
      !(a.count_scale > 0) || a.action_repeat == 0 || a.gamma < 0 || a.gamma > 1) {
    throw ConfigError("agent: invalid training hyperparameters");
  }

  const Section run(root, "run");
  c.seeds = parse_seeds(run.str("seeds", ""), run.full("seeds"));
  if (c.seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  c.train_episodes = run.uint("train_episodes", 10);
  c.eval_seeds = parse_seeds(run.str("eval_seeds", "10001,10002,10003,10004,10005"), run.full("eval_seeds"));
  if (c.eval_seeds.empty()) throw ConfigError("run.eval_seeds must list at least one seed");
  c.checkpoint_every = run.uint("checkpoint_every", 1);
  c.output_dir = run.str("output_dir", "runs");
  c.profile = parse_profile(run.str("profile", "test64"));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& n = c.network;
  o << "[network]\n"
    << "intersections = " << n.intersections << "\nlink_length_m = " << num(n.link_length_m)
    << "\nfree_flow_mps = " << num(n.free_flow_mps) << "\nsaturation_vps = " << num(n.saturation_vps)
    << "\njam_spacing_m = " << num(n.jam_spacing_m) << "\nthrough_lanes = " << n.through_lanes
    << "\nexclusive_left = " << (n.exclusive_left ? "true" : "false") << "\n\n";
  const auto turns = [](const std::array<double, sim::kTurns>& t) {
    return num(t[0]) + "," + num(t[1]) + "," + num(t[2]);
  };
  o << "[demand]\nmain_rate = " << render_demand(n.main_demand) << "\nside_rate = " << render_demand(n.side_demand)
    << "\nmain_turns = " << turns(n.main_turns) << "\nside_turns = " << turns(n.side_turns)
    << "\narrivals = " << (c.arrivals == sim::ArrivalProcess::Poisson ? "poisson" : "deterministic") << "\n\n";
  std::string plan;
  for (const auto& [p, d] : c.fixed_plan) plan += (plan.empty() ? "" : ",") + std::to_string(p) + ":" + num(d);
  o << "[signal]\nscheme = " << c.scheme_name << "\nmin_green_s = " << num(c.scheme.min_green_s)
    << "\nmax_green_s = " << num(c.scheme.max_green_s) << "\nyellow_s = " << num(c.scheme.yellow_s)
    << "\nall_red_s = " << num(c.scheme.all_red_s) << "\nfixed_plan = " << plan
    << "\nfixed_offset_s = " << num(c.fixed_offset_s) << "\nactuated_gap_s = " << num(c.actuated_gap_s)
    << "\nactuated_recall = " << c.actuated_recall << "\n\n";
  o << "[env]\ndetection_range_m = " << num(c.env.detection_range_m)
    << "\nqueue_threshold_mps = " << num(c.env.queue_speed_threshold_mps)
    << "\nepisode_length_s = " << num(c.env.episode_length_s) << "\ntrain_episode_length_s = "
    << num(c.train_episode_length_s) << "\ndt_s = " << num(c.env.sim.dt_s)
    << "\nreward = " << (c.env.reward == env::RewardSource::Sensed ? "sensed" : "ground_truth") << "\n\n";
  const auto& a = c.agent;
  o << "[agent]\nmethod = " << to_string(c.method) << "\nd_model = " << a.encoder.d_model << "\nheads = " << a.encoder.heads
    << "\nd_ff = " << a.encoder.d_ff << "\nblocks = " << a.encoder.blocks << "\nmax_history = " << a.encoder.max_history
    << "\npooling = " << (a.encoder.pooling == encoder::Pooling::Mean ? "mean" : "first")
    << "\nln_eps = " << num(a.encoder.ln_eps) << "\nq_hidden = " << a.q_hidden
    << "\ncommunicate = " << (a.communicate ? "true" : "false") << "\ngamma = " << num(a.gamma)
    << "\nbatch_size = " << a.batch_size << "\nbuffer_episodes = " << a.buffer_episodes
    << "\nepsilon_start = " << num(a.epsilon_start) << "\nepsilon_end = " << num(a.epsilon_end)
    << "\nepsilon_decay_steps = " << a.epsilon_decay_steps << "\nwarmup_episodes = " << a.warmup_episodes
    << "\ntrain_every = " << a.train_every << "\ntarget_sync_steps = " << a.target_sync_steps
    << "\nlearning_rate = " << num(a.adam.learning_rate) << "\nhuber_delta = " << num(a.huber_delta)
    << "\ngrad_clip = " << num(a.grad_clip) << "\nreward_scale = " << num(a.reward_scale)
    << "\ncount_scale = " << num(a.count_scale) << "\naction_repeat = " << a.action_repeat << "\n\n";
  o << "[run]\nseeds = " << join_seeds(c.seeds) << "\ntrain_episodes = " << c.train_episodes
    << "\neval_seeds = " << join_seeds(c.eval_seeds) << "\ncheckpoint_every = " << c.checkpoint_every
    << "\noutput_dir = " << c.output_dir.string() << "\nprofile = " << to_string(c.profile) << "\n";
  return o.str();
}

std::string env_fingerprint(const ExperimentConfig& c) {
  // Network, demand, signal timing, sensing, episode length and eval seeds.
  ExperimentConfig k;
  k.network = c.network;
  k.arrivals = c.arrivals;
  k.scheme_name = c.scheme_name;
  k.scheme = c.scheme;
  k.env = c.env;
  k.env.reward = env::RewardSource::Sensed;  // shapes training only
  k.eval_seeds = c.eval_seeds;
  std::string text = render_config(k);
  text = text.substr(0, text.find("[agent]")) + join_seeds(c.eval_seeds);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(sim::derive_seed(0, text)));
  return buf;
}

sim::NetworkTopology build_topology(const ExperimentConfig& c) {
  return sim::build_network(sim::corridor_config(c.network));
}

env::Environment make_environment(const ExperimentConfig& c, bool training) {
  env::EnvConfig e = c.env;
  if (training) e.episode_length_s = c.train_episode_length_s;
  auto topo = build_topology(c);
  std::vector<signal::PhaseScheme> schemes(topo.size(), c.scheme);
  return env::Environment(std::move(topo), std::move(schemes), e);
}

}  // namespace atsc::harness
