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

#include "atsc/harness/runner.hpp"

#include <fstream>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <numeric>
#include <ostream>
#include <sstream>

#include "atsc/agent/dqn.hpp"
#include "atsc/harness/policies.hpp"
#include "atsc/nn/checkpoint.hpp"
#include "atsc/sim/rng.hpp"

namespace atsc::harness {
namespace fs = std::filesystem;

namespace {

// Train steps free and reallocate the same tape buffers; keep them in the
// heap instead of returning them to the kernel after every step.
void keep_freed_memory() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
    mallopt(M_TOP_PAD, 64 << 20);
    return true;
  }();
  (void)done;
#endif
}

std::string engine_state(const std::mt19937_64& e) {
  std::ostringstream o;
  o << e;
  return o.str();
}

void restore_engine(std::mt19937_64& e, const std::string& s) {
  std::istringstream in(s);
  in >> e;
  if (!in) throw nn::CheckpointError("corrupt generator state in checkpoint");
}

std::string metrics_header(std::size_t agents) {
  std::string h = "episode,epsilon,mean_loss,train_steps,env_steps";
  for (std::size_t i = 0; i < agents; ++i) h += ",return_I" + std::to_string(i);
  for (std::size_t i = 0; i < agents; ++i) h += ",delay_I" + std::to_string(i);
  return h + "\n";
}

void save_buffer(const agent::EpisodeBuffer& buffer, nn::Checkpoint& ckpt) {
  ckpt.metadata["buffer/size"] = std::to_string(buffer.size());
  for (std::size_t k = 0; k < buffer.size(); ++k) {
    const auto& ep = buffer.episode(k);
    const std::string p = "buffer/" + std::to_string(k) + "/";
    const auto rows = static_cast<nn::Index>((ep.steps + 1) * ep.agents);
    const auto steps = static_cast<nn::Index>(ep.steps);
    const auto agents = static_cast<nn::Index>(ep.agents);
    ckpt.metadata[p + "steps"] = std::to_string(ep.steps);
    ckpt.put<float>(p + "features", {rows, static_cast<nn::Index>(ep.obs_dim)},
                    Eigen::Map<const nn::Matrix<float>>(ep.features.data(), rows, static_cast<nn::Index>(ep.obs_dim)));
    nn::Matrix<float> masks(rows, static_cast<nn::Index>(ep.action_count));
    for (nn::Index i = 0; i < masks.size(); ++i) masks.data()[i] = ep.masks[static_cast<std::size_t>(i)];
    ckpt.put<float>(p + "masks", {masks.rows(), masks.cols()}, masks);
    nn::Matrix<double> actions(steps, agents), rewards(steps, agents), done(1, std::max<nn::Index>(steps, 1));
    done.setZero();
    for (nn::Index i = 0; i < actions.size(); ++i) {
      actions.data()[i] = ep.actions[static_cast<std::size_t>(i)];
      rewards.data()[i] = ep.rewards[static_cast<std::size_t>(i)];
    }
    for (nn::Index t = 0; t < steps; ++t) done(0, t) = ep.done[static_cast<std::size_t>(t)];
    ckpt.put<double>(p + "actions", {steps, agents}, actions);
    ckpt.put<double>(p + "rewards", {steps, agents}, rewards);
    ckpt.put<double>(p + "done", {done.rows(), done.cols()}, done);
  }
}

std::deque<agent::Episode> load_buffer(const nn::Checkpoint& ckpt, const agent::EpisodeBuffer& like) {
  std::deque<agent::Episode> out;
  const std::size_t n = std::stoull(ckpt.meta("buffer/size"));
  for (std::size_t k = 0; k < n; ++k) {
    const std::string p = "buffer/" + std::to_string(k) + "/";
    agent::Episode ep;
    ep.agents = like.agents();
    ep.obs_dim = like.obs_dim();
    ep.action_count = like.action_count();
    ep.steps = std::stoull(ckpt.meta(p + "steps"));
    const auto rows = static_cast<nn::Index>((ep.steps + 1) * ep.agents);
    const auto steps = static_cast<nn::Index>(ep.steps);
    const auto agents = static_cast<nn::Index>(ep.agents);
    const auto f = ckpt.get<float>(p + "features", {rows, static_cast<nn::Index>(ep.obs_dim)});
    ep.features.assign(f.data(), f.data() + f.size());
    const auto m = ckpt.get<float>(p + "masks", {rows, static_cast<nn::Index>(ep.action_count)});
    for (nn::Index i = 0; i < m.size(); ++i) ep.masks.push_back(static_cast<std::uint8_t>(m.data()[i]));
    const auto a = ckpt.get<double>(p + "actions", {steps, agents});
    const auto r = ckpt.get<double>(p + "rewards", {steps, agents});
    const auto d = ckpt.get<double>(p + "done", {1, std::max<nn::Index>(steps, 1)});
    for (nn::Index i = 0; i < a.size(); ++i) {
      ep.actions.push_back(static_cast<std::uint32_t>(a.data()[i]));
      ep.rewards.push_back(r.data()[i]);
    }
    for (nn::Index t = 0; t < steps; ++t) ep.done.push_back(static_cast<std::uint8_t>(d(0, t)));
    out.push_back(std::move(ep));
  }
  return out;
}

std::size_t observation_size(env::Environment& env) {
  const auto r = env.reset(0);
  const std::size_t d = r.observations.front().feature_size();
  for (const auto& o : r.observations) {
    if (o.feature_size() != d) throw ConfigError("agents must share one observation layout");
  }
  return d;
}

template <typename S>
void train_seed(const ExperimentConfig& cfg, std::uint64_t seed, const TrainOptions& opt, TrainResult& result) {
  const fs::path dir = seed_dir(cfg.output_dir, seed);
  fs::create_directories(dir);
  const fs::path latest = dir / "latest.ckpt";
  const fs::path metrics_path = dir / "metrics.csv";

  auto env = make_environment(cfg, true);
  const std::size_t obs_dim = observation_size(env);
  const auto acfg = cfg.effective_agent();
  agent::Team<S> team(acfg, env.contexts(), obs_dim, seed);
  agent::EpisodeBuffer buffer(acfg.buffer_episodes, env.agent_count(), obs_dim, team.action_count());
  auto explore = sim::make_engine(seed, "explore");
  auto replay = sim::make_engine(seed, "replay");
  std::uint64_t env_steps = 0;
  std::size_t first_episode = 0;
  std::string metrics = metrics_header(env.agent_count());
  const std::string config_key = render_config(cfg);

  if (opt.resume && fs::exists(latest)) {
    const auto ckpt = nn::load_checkpoint(latest);
    if (ckpt.meta("run/profile") != to_string(cfg.profile)) throw ConfigError("checkpoint was written with another profile");
    team.load(ckpt);
    buffer.restore(load_buffer(ckpt, buffer));
    restore_engine(explore, ckpt.meta("run/explore_rng"));
    restore_engine(replay, ckpt.meta("run/replay_rng"));
    env_steps = std::stoull(ckpt.meta("run/env_steps"));
    first_episode = std::stoull(ckpt.meta("run/episode"));
    metrics = ckpt.meta("run/metrics");
  }

  std::vector<float> features;
  std::vector<std::uint8_t> masks;
  std::vector<std::uint32_t> actions32;
  std::size_t done_this_call = 0;
  for (std::size_t ep = first_episode; ep < cfg.train_episodes; ++ep) {
    if (opt.stop_after && done_this_call == *opt.stop_after) return;
    auto r = env.reset(sim::derive_seed(seed, "train-episode/" + std::to_string(ep)));
    flatten_step(r, acfg.count_scale, features, masks);
    buffer.begin(features, masks);
    std::vector<double> returns(env.agent_count(), 0.0);
    std::vector<double> held_reward(env.agent_count(), 0.0);
    double loss_sum = 0.0;
    std::size_t loss_n = 0;
    std::size_t t = 0;
    while (!r.done) {
      const double eps = agent::epsilon_at(acfg, env_steps);
      const auto actions = team.act(buffer.staging(), t, eps, explore);
      std::fill(held_reward.begin(), held_reward.end(), 0.0);
      std::size_t held = 0;
      do {
        r = env.step(actions);
        for (std::size_t i = 0; i < held_reward.size(); ++i) held_reward[i] += r.rewards[i];
        ++held;
      } while (!r.done && held < acfg.action_repeat && action_holds(r, actions));
      flatten_step(r, acfg.count_scale, features, masks);
      actions32.assign(actions.begin(), actions.end());
      buffer.record(actions32, held_reward, features, masks, r.done);
      for (std::size_t i = 0; i < returns.size(); ++i) returns[i] += held_reward[i];
      ++env_steps;
      ++t;
      if (buffer.size() >= std::max<std::size_t>(1, acfg.warmup_episodes) && env_steps % acfg.train_every == 0) {
        const auto losses = team.train_step(buffer, replay);
        loss_sum += std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
        ++loss_n;
      }
    }
    buffer.finish();
    ++done_this_call;

    std::string row = std::to_string(ep) + "," + format_number(agent::epsilon_at(acfg, env_steps)) + "," +
                      format_number(loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0) + "," +
                      std::to_string(team.train_steps()) + "," + std::to_string(env_steps);
    for (double v : returns) row += "," + format_number(v);
    for (double v : r.intersection_delay_s) row += "," + format_number(v);
    metrics += row + "\n";
    write_text(metrics_path, metrics);
    if (opt.log) *opt.log << "seed " << seed << " episode " << ep << ": " << row << std::endl;

    const bool last = ep + 1 == cfg.train_episodes;
    if (cfg.checkpoint_every > 0 && ((ep + 1) % cfg.checkpoint_every == 0 || last)) {
      nn::Checkpoint ckpt;
      team.save(ckpt);
      save_buffer(buffer, ckpt);
      ckpt.metadata["run/profile"] = to_string(cfg.profile);
      ckpt.metadata["run/config"] = config_key;
      ckpt.metadata["run/seed"] = std::to_string(seed);
      ckpt.metadata["run/episode"] = std::to_string(ep + 1);
      ckpt.metadata["run/env_steps"] = std::to_string(env_steps);
      ckpt.metadata["run/explore_rng"] = engine_state(explore);
      ckpt.metadata["run/replay_rng"] = engine_state(replay);
      ckpt.metadata["run/metrics"] = metrics;
      nn::save_checkpoint(latest, ckpt);
    }
  }

  nn::Checkpoint final_ckpt;
  team.save(final_ckpt);
  final_ckpt.metadata["run/profile"] = to_string(cfg.profile);
  final_ckpt.metadata["run/method"] = to_string(cfg.method);
  final_ckpt.metadata["run/seed"] = std::to_string(seed);
  final_ckpt.metadata["run/obs_dim"] = std::to_string(obs_dim);
  nn::save_checkpoint(dir / "final.ckpt", final_ckpt);
  write_text(metrics_path, metrics);
  result.metrics_files.push_back(metrics_path);
  result.checkpoints.push_back(dir / "final.ckpt");
}

template <typename S>
std::vector<double> eval_learned(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& checkpoint_dir) {
  const fs::path path = seed_dir(checkpoint_dir, seed) / "final.ckpt";
  if (!fs::exists(path)) throw ReportError("missing checkpoint " + path.string());
  const auto ckpt = nn::load_checkpoint(path);
  if (ckpt.meta("run/method") != to_string(cfg.method)) {
    throw ReportError("checkpoint " + path.string() + " was trained with method " + ckpt.meta("run/method"));
  }
  auto env = make_environment(cfg, false);
  const std::size_t obs_dim = observation_size(env);
  agent::Team<S> team(cfg.effective_agent(), env.contexts(), obs_dim, seed);
  team.load(ckpt);
  LearnedController<S> controller(team, obs_dim);
  std::vector<double> mean(env.agent_count(), 0.0);
  for (auto es : cfg.eval_seeds) {
    const auto d = run_episode(env, controller, es);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += d[i] / static_cast<double>(cfg.eval_seeds.size());
  }
  return mean;
}

std::vector<double> eval_baseline(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto env = make_environment(cfg, false);
  std::unique_ptr<Controller> controller;
  switch (cfg.method) {
    case Method::FixedTime: controller = make_fixed_time(cfg); break;
    case Method::Actuated: controller = make_actuated(cfg); break;
    case Method::Random: controller = make_random(sim::derive_seed(seed, "eval")); break;
    default: throw ConfigError("not a baseline method");
  }
  std::vector<double> mean(env.agent_count(), 0.0);
  for (auto es : cfg.eval_seeds) {
    const auto d = run_episode(env, *controller, es);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += d[i] / static_cast<double>(cfg.eval_seeds.size());
  }
  return mean;
}

}  // namespace

fs::path seed_dir(const fs::path& out, std::uint64_t seed) { return out / ("seed" + std::to_string(seed)); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainResult run_train(const ExperimentConfig& cfg, const TrainOptions& options) {
  TrainResult result;
  if (!is_learning(cfg.method)) return result;
  result.trained = true;
  keep_freed_memory();
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
  for (auto seed : cfg.seeds) {
    if (cfg.profile == Profile::Test64) {
      train_seed<double>(cfg, seed, options, result);
    } else {
      train_seed<float>(cfg, seed, options, result);
    }
  }
  return result;
}

EvaluationReport run_eval(const ExperimentConfig& cfg, const fs::path& checkpoint_dir, std::ostream* log) {
  EvaluationReport report;
  report.fingerprint = env_fingerprint(cfg);
  report.eval_seeds = cfg.eval_seeds;
  const auto topo = build_topology(cfg);
  for (const auto& spec : topo.intersections) report.intersections.push_back(spec.name);
  for (auto seed : cfg.seeds) {
    ReportRow row;
    row.method = to_string(cfg.method);
    row.seed = seed;
    if (!is_learning(cfg.method)) {
      row.delays = eval_baseline(cfg, seed);
    } else if (cfg.profile == Profile::Test64) {
      row.delays = eval_learned<double>(cfg, seed, checkpoint_dir);
    } else {
      row.delays = eval_learned<float>(cfg, seed, checkpoint_dir);
    }
    if (log) *log << "eval " << row.method << " seed " << seed << ": Sum " << format_number(row.sum()) << std::endl;
    report.rows.push_back(std::move(row));
  }
  return report;
}

EvaluationReport run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  TrainOptions opt;
  opt.log = log;
  run_train(cfg, opt);
  auto report = run_eval(cfg, cfg.output_dir, log);
  write_text(cfg.output_dir / "report.csv", to_csv(report));
  return report;
}

}  // namespace atsc::harness
