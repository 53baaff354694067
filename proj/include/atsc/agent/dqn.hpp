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

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "atsc/agent/episode_buffer.hpp"
#include "atsc/agent/q_head.hpp"
#include "atsc/encoder/encoder.hpp"
#include "atsc/env/observation.hpp"
#include "atsc/nn/adam.hpp"
#include "atsc/nn/checkpoint.hpp"
#include "atsc/sim/rng.hpp"

namespace atsc::agent {

struct AgentConfig {
  encoder::EncoderConfig encoder;  // obs_dim is filled from the environment
  Index q_hidden = 128;
  bool communicate = true;
  double gamma = 0.95;
  std::size_t batch_size = 32;
  std::size_t buffer_episodes = 200;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::uint64_t epsilon_decay_steps = 50000;
  std::size_t warmup_episodes = 5;
  std::size_t train_every = 1;
  std::uint64_t target_sync_steps = 1000;
  nn::AdamConfig adam;
  double huber_delta = 1.0;
  double grad_clip = 0.0;  // 0 disables
  double reward_scale = 1.0;
  double count_scale = 1.0;  // divides vehicle and queue counts in the features
  // A decision is held for up to this many environment steps and ends early
  // when the held action turns invalid. Rewards are summed over the hold.
  std::size_t action_repeat = 1;
};

/// Linear decay from start to end over decay_steps environment steps.
inline double epsilon_at(const AgentConfig& c, std::uint64_t env_steps) {
  if (c.epsilon_decay_steps == 0) return c.epsilon_end;
  const double f = std::min(1.0, static_cast<double>(env_steps) / static_cast<double>(c.epsilon_decay_steps));
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * f;
}

/// Appends one observation's token features (counts scaled) to `out`.
inline void append_features(const env::Observation& o, double count_scale, std::vector<float>& out) {
  const auto f = o.features();
  const std::size_t counts = 2 * o.vehicle_count.size();
  for (std::size_t i = 0; i < f.size(); ++i) out.push_back(static_cast<float>(i < counts ? f[i] / count_scale : f[i]));
}

inline void append_mask(const signal::ActionMask& m, std::vector<std::uint8_t>& out) {
  for (bool b : m) out.push_back(b ? 1 : 0);
}

template <typename S>
struct AgentNet {
  encoder::EncoderParams<S> encoder;
  QHeadParams<S> head;
  encoder::EncoderParams<S> target_encoder;
  QHeadParams<S> target_head;
  nn::OptimizerState<S> optimizer;
  std::array<std::optional<std::size_t>, 2> neighbors;

  nn::ParameterList<S> online_parameters() const {
    auto p = encoder.parameters();
    for (auto& h : head.parameters()) p.push_back({"head." + h.name, h.tensor});
    return p;
  }
  nn::ParameterList<S> target_parameters() const {
    auto p = target_encoder.parameters();
    for (auto& h : target_head.parameters()) p.push_back({"head." + h.name, h.tensor});
    return p;
  }
};

/// One DQN agent per intersection with neighbour message exchange.
template <typename S>
class Team {
 public:
  Team(AgentConfig config, std::span<const env::AgentContext> contexts, std::size_t obs_dim, std::uint64_t seed)
      : config_(std::move(config)) {
    config_.encoder.obs_dim = static_cast<Index>(obs_dim);
    config_.encoder.validate();
    if (contexts.empty()) throw std::invalid_argument("Team: no agents");
    action_count_ = contexts.front().action_count;
    for (const auto& ctx : contexts) {
      if (ctx.action_count != action_count_) throw std::invalid_argument("Team: agents must share the action space");
      auto rng = sim::make_engine(seed, "agent/" + std::to_string(ctx.agent) + "/init");
      AgentNet<S> net;
      net.encoder = encoder::init_encoder<S>(config_.encoder, rng);
      net.head = init_q_head<S>(config_.encoder.d_model, config_.q_hidden, static_cast<Index>(action_count_), rng);
      net.target_encoder = net.encoder.clone();
      net.target_head = net.head.clone();
      const auto params = nn::tensors_of(net.online_parameters());
      net.optimizer = nn::make_optimizer<S>(params, config_.adam);
      net.neighbors = ctx.neighbors;
      nets_.push_back(std::move(net));
    }
  }

  const AgentConfig& config() const { return config_; }
  std::size_t agent_count() const { return nets_.size(); }
  std::size_t action_count() const { return action_count_; }
  const AgentNet<S>& net(std::size_t i) const { return nets_.at(i); }
  AgentNet<S>& mutable_net(std::size_t i) { return nets_.at(i); }
  std::uint64_t train_steps() const { return train_steps_; }
  std::size_t history_length() const { return static_cast<std::size_t>(config_.encoder.max_history); }

  /// Encodes time t of episode `ep` for every agent with the online (or
  /// target) encoders; each message is [1 x d].
  std::vector<Tensor<S>> messages(const Episode& ep, std::size_t t, bool target = false) const {
    Tape<S> tape(false);
    std::vector<Tensor<S>> out;
    for (std::size_t i = 0; i < nets_.size(); ++i) {
      const auto h = sample_history<S>(ep, t, i, history_length());
      out.push_back(encoder::encode(tape, h, target ? nets_[i].target_encoder : nets_[i].encoder));
    }
    return out;
  }

  /// Per-agent neighbour inputs: other agents' messages, zero when absent or
  /// when communication is off.
  std::vector<std::array<Tensor<S>, 2>> exchange_messages(std::span<const Tensor<S>> msgs) const {
    std::vector<std::array<Tensor<S>, 2>> out(nets_.size());
    for (std::size_t i = 0; i < nets_.size(); ++i) {
      for (std::size_t s = 0; s < 2; ++s) {
        const auto& n = nets_[i].neighbors[s];
        out[i][s] = config_.communicate && n ? msgs[*n].detach()
                                             : Tensor<S>::zeros({msgs[i].rows(), msgs[i].cols()});
      }
    }
    return out;
  }

  /// Online Q-values of every agent at time t, each [1 x |A|].
  std::vector<nn::Matrix<S>> q_table(const Episode& ep, std::size_t t) const {
    Tape<S> tape(false);
    const auto msgs = messages(ep, t);
    const auto nb = exchange_messages(msgs);
    std::vector<nn::Matrix<S>> out;
    for (std::size_t i = 0; i < nets_.size(); ++i) {
      out.push_back(q_values<S>(tape, msgs[i], nb[i], nets_[i].head).value());
    }
    return out;
  }

  /// Masked epsilon-greedy actions for the last observation slot of `ep`.
  std::vector<std::size_t> act(const Episode& ep, std::size_t t, double epsilon, std::mt19937_64& rng) const {
    const auto q = q_table(ep, t);
    std::vector<std::size_t> actions;
    for (std::size_t i = 0; i < nets_.size(); ++i) {
      actions.push_back(select_action(q[i].row(0), ep.mask(t, i), epsilon, rng));
    }
    return actions;
  }

  /// One TD update for every agent from a shared batch of (episode, time)
  /// samples. Neighbour messages enter as constants. Returns per-agent loss.
  std::vector<double> train_step(const EpisodeBuffer& buffer, std::mt19937_64& rng) {
    if (buffer.size() == 0) throw BufferError("train_step: empty buffer");
    const std::size_t batch = config_.batch_size;
    const std::size_t len = history_length();
    const Index rows = static_cast<Index>(batch * len);
    const Index obs = config_.encoder.obs_dim;
    const std::size_t n = nets_.size();

    std::vector<std::pair<std::size_t, std::size_t>> idx(batch);
    for (auto& p : idx) p = buffer.sample_index(rng);

    Tape<S> tape(true);
    Tape<S> frozen(false);
    std::vector<Tensor<S>> now(n), next(n);
    for (std::size_t j = 0; j < n; ++j) {
      nn::Matrix<S> tok_now(rows, obs), tok_next(rows, obs);
      nn::Mask mask_now(static_cast<Index>(batch), static_cast<Index>(len));
      nn::Mask mask_next(static_cast<Index>(batch), static_cast<Index>(len));
      for (std::size_t b = 0; b < batch; ++b) {
        const auto& ep = buffer.episode(idx[b].first);
        const auto r0 = static_cast<Index>(b * len);
        fill_history<S>(ep, idx[b].second, j, len, tok_now, r0, mask_now, static_cast<Index>(b));
        fill_history<S>(ep, idx[b].second + 1, j, len, tok_next, r0, mask_next, static_cast<Index>(b));
      }
      now[j] = encoder::encode_batch(tape, Tensor<S>(std::move(tok_now)), mask_now, nets_[j].encoder);
      next[j] = encoder::encode_batch(frozen, Tensor<S>(std::move(tok_next)), mask_next, nets_[j].target_encoder);
    }
    const auto nb_now = exchange_messages(now);
    const auto nb_next = exchange_messages(next);

    const S gamma = static_cast<S>(config_.gamma);
    const S rscale = static_cast<S>(config_.reward_scale);
    std::vector<double> losses(n);
    Tensor<S> total;
    for (std::size_t i = 0; i < n; ++i) {
      const auto q = q_values<S>(tape, now[i], nb_now[i], nets_[i].head);
      const auto tq = q_values<S>(frozen, next[i], nb_next[i], nets_[i].target_head).value();
      std::vector<std::size_t> taken(batch);
      nn::Matrix<S> y(1, static_cast<Index>(batch));
      for (std::size_t b = 0; b < batch; ++b) {
        const auto& ep = buffer.episode(idx[b].first);
        const std::size_t t = idx[b].second;
        taken[b] = ep.action(t, i);
        S target = rscale * static_cast<S>(ep.reward(t, i));
        if (!ep.done[t]) {
          const auto m = ep.mask(t + 1, i);
          target += gamma * tq(static_cast<Index>(b), static_cast<Index>(nn::masked_argmax(tq.row(static_cast<Index>(b)), m)));
        }
        y(0, static_cast<Index>(b)) = target;
      }
      const auto pred = nn::gather<S>(tape, q, taken);
      const auto loss = nn::huber_loss(tape, pred, Tensor<S>({static_cast<Index>(batch)}, std::move(y)),
                                       static_cast<S>(config_.huber_delta));
      losses[i] = static_cast<double>(loss.item());
      total = i == 0 ? loss : nn::add(tape, total, loss);
    }

    for (auto& net : nets_) nn::zero_grads(net.online_parameters());
    tape.backward(total);
    for (auto& net : nets_) {
      const auto params = nn::tensors_of(net.online_parameters());
      if (config_.grad_clip > 0.0) nn::clip_grad_norm<S>(params, static_cast<S>(config_.grad_clip));
      nn::adam_step<S>(params, net.optimizer);
    }
    ++train_steps_;
    if (config_.target_sync_steps > 0 && train_steps_ % config_.target_sync_steps == 0) sync_target();
    return losses;
  }

  /// Hard copy of online parameters into the target networks.
  void sync_target() {
    for (auto& net : nets_) nn::copy_values(net.online_parameters(), net.target_parameters());
    ++syncs_;
  }
  std::uint64_t sync_count() const { return syncs_; }

  void save(nn::Checkpoint& ckpt) const {
    for (std::size_t i = 0; i < nets_.size(); ++i) {
      const std::string p = "agent" + std::to_string(i) + "/";
      for (const auto& t : nets_[i].online_parameters()) ckpt.put(p + "online/" + t.name, t.tensor);
      for (const auto& t : nets_[i].target_parameters()) ckpt.put(p + "target/" + t.name, t.tensor);
      const auto& opt = nets_[i].optimizer;
      for (std::size_t k = 0; k < opt.first_moment.size(); ++k) {
        const nn::Shape shape{opt.first_moment[k].rows(), opt.first_moment[k].cols()};
        ckpt.put<S>(p + "adam/m" + std::to_string(k), shape, opt.first_moment[k]);
        ckpt.put<S>(p + "adam/v" + std::to_string(k), shape, opt.second_moment[k]);
      }
      ckpt.metadata[p + "adam/step"] = std::to_string(opt.step);
    }
    ckpt.metadata["team/train_steps"] = std::to_string(train_steps_);
    ckpt.metadata["team/syncs"] = std::to_string(syncs_);
  }

  void load(const nn::Checkpoint& ckpt) {
    for (std::size_t i = 0; i < nets_.size(); ++i) {
      const std::string p = "agent" + std::to_string(i) + "/";
      for (const auto& t : nets_[i].online_parameters()) t.tensor.value_mut() = ckpt.get<S>(p + "online/" + t.name, t.tensor.shape());
      for (const auto& t : nets_[i].target_parameters()) t.tensor.value_mut() = ckpt.get<S>(p + "target/" + t.name, t.tensor.shape());
      auto& opt = nets_[i].optimizer;
      for (std::size_t k = 0; k < opt.first_moment.size(); ++k) {
        const nn::Shape shape{opt.first_moment[k].rows(), opt.first_moment[k].cols()};
        opt.first_moment[k] = ckpt.get<S>(p + "adam/m" + std::to_string(k), shape);
        opt.second_moment[k] = ckpt.get<S>(p + "adam/v" + std::to_string(k), shape);
      }
      opt.step = std::stoull(ckpt.meta(p + "adam/step"));
    }
    train_steps_ = std::stoull(ckpt.meta("team/train_steps"));
    syncs_ = std::stoull(ckpt.meta("team/syncs"));
  }

 private:
  AgentConfig config_;
  std::size_t action_count_ = 0;
  std::vector<AgentNet<S>> nets_;
  std::uint64_t train_steps_ = 0;
  std::uint64_t syncs_ = 0;
};

}  // namespace atsc::agent
