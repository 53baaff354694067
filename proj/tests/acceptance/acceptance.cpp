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

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atsc/agent/q_head.hpp"
#include "atsc/contract.hpp"
#include "atsc/encoder/encoder.hpp"
#include "atsc/harness/config.hpp"
#include "atsc/harness/report.hpp"
#include "atsc/harness/runner.hpp"
#include "atsc/nn/checkpoint.hpp"
#include "atsc/signal/phase.hpp"
#include "grad_check.hpp"

namespace fs = std::filesystem;
using namespace atsc;
using nn::Index;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path configs;
  fs::path work;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path fresh_dir(const Context& ctx, const std::string& name) {
  const auto d = ctx.work / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// ---------------------------------------------------------------------------
// 1. Percent-reduction arithmetic on a reference delay table.

Outcome formula_check(const Context&) {
  harness::EvaluationReport r;
  r.fingerprint = "reference";
  r.intersections = {"I1", "I2", "I3", "I4", "I5"};
  r.rows = {
      {"city-plan", 0, {2120, 77222, 465500, 6091, 49965}},
      {"emarlin", 0, {1027, 60800, 174464, 8174, 48170}},
      {"emarlin-transformer", 0, {1416, 40491, 136731, 4126, 22747}},
  };
  const std::vector<harness::EvaluationReport> reports{r};
  double city = -1, emarlin = -1;
  for (const auto& c : harness::compare_methods(reports)) {
    if (c.base == "city-plan" && c.method == "emarlin-transformer") city = c.percent;
    if (c.base == "emarlin" && c.method == "emarlin-transformer") emarlin = c.percent;
  }
  // Independent arithmetic on the printed Sum column.
  const double expected = (292635.0 - 205511.0) / 292635.0 * 100.0;
  const bool sums = r.rows[0].sum() == 600898 && r.rows[1].sum() == 292635 && r.rows[2].sum() == 205511;
  const bool pass = sums && std::abs(city - 65.8) <= 0.05 && emarlin == expected && std::round(emarlin * 100) == 2977;
  return {pass, fmt("city plan -> transformer %.4f%% (65.8 +- 0.05), eMARLIN -> transformer %.6f%% (formula %.6f)",
                    city, emarlin, expected)};
}

// ---------------------------------------------------------------------------
// 2. Padded rows never reach the message.

Outcome padding_invariance(const Context&) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> exponent(-6.0, 6.0);
  const std::vector<double> specials{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity(),
                                     -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::max(),
                                     -0.0, std::numeric_limits<double>::denorm_min()};
  std::size_t failures = 0;
  std::set<std::size_t> lengths_seen;
  for (int trial = 0; trial < 1000; ++trial) {
    encoder::EncoderConfig cfg;
    cfg.obs_dim = 1 + static_cast<Index>(rng() % 24);
    cfg.heads = 1 + static_cast<Index>(rng() % 4);
    cfg.d_model = cfg.heads * 2 * (1 + static_cast<Index>(rng() % 4));
    cfg.d_ff = 1 + static_cast<Index>(rng() % 32);
    cfg.blocks = static_cast<Index>(rng() % 3);
    cfg.max_history = 1 + static_cast<Index>(rng() % 20);
    cfg.pooling = rng() % 4 == 0 ? encoder::Pooling::First : encoder::Pooling::Mean;
    const auto p = encoder::init_encoder<double>(cfg, rng);
    const std::size_t len = 1 + rng() % static_cast<std::size_t>(cfg.max_history);
    lengths_seen.insert(len);

    encoder::PaddedHistory<double> h;
    h.tokens = nn::Matrix<double>::Zero(cfg.max_history, cfg.obs_dim);
    h.mask.assign(static_cast<std::size_t>(cfg.max_history), false);
    for (std::size_t i = 0; i < len; ++i) {
      h.mask[i] = true;
      for (Index c = 0; c < cfg.obs_dim; ++c) h.tokens(static_cast<Index>(i), c) = normal(rng);
    }
    h.true_length = len;
    nn::Tape<double> tape(false);
    const auto before = encoder::encode(tape, h, p).value();
    for (int rewrite = 0; rewrite < 3; ++rewrite) {
      for (Index r = static_cast<Index>(len); r < cfg.max_history; ++r) {
        for (Index c = 0; c < cfg.obs_dim; ++c) {
          h.tokens(r, c) = rng() % 8 == 0 ? specials[rng() % specials.size()] : normal(rng) * std::pow(10.0, exponent(rng));
        }
      }
      const auto after = encoder::encode(tape, h, p).value();
      // Bitwise: memcmp semantics so that -0 vs +0 would also count.
      if (after.size() != before.size() ||
          std::memcmp(after.data(), before.data(), static_cast<std::size_t>(before.size()) * sizeof(double)) != 0) {
        ++failures;
      }
    }
  }
  return {failures == 0,
          fmt("1000 pairs x 3 rewrites, %zu true lengths covered, %zu messages changed", lengths_seen.size(), failures)};
}

// ---------------------------------------------------------------------------
// 3. Encoder + Q-head gradients against central differences.

Outcome gradient_suite(const Context&) {
  std::mt19937_64 rng(31);
  encoder::EncoderConfig cfg;
  cfg.obs_dim = 7;
  cfg.d_model = 12;
  cfg.heads = 3;
  cfg.d_ff = 16;
  cfg.blocks = 2;
  cfg.max_history = 6;
  const auto p = encoder::init_encoder<double>(cfg, rng);
  const auto head = agent::init_q_head<double>(cfg.d_model, 10, 4, rng);

  const Index batch = 3;
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Matrix<double> tokens = nn::Matrix<double>::Zero(batch * cfg.max_history, cfg.obs_dim);
  nn::Mask mask = nn::Mask::Constant(batch, cfg.max_history, false);
  const std::array<Index, 3> lengths{1, 4, 6};
  for (Index b = 0; b < batch; ++b) {
    for (Index i = 0; i < lengths[static_cast<std::size_t>(b)]; ++i) {
      mask(b, i) = true;
      for (Index c = 0; c < cfg.obs_dim; ++c) tokens(b * cfg.max_history + i, c) = normal(rng);
    }
  }
  const nn::Tensor<double> up(nn::Matrix<double>::Random(batch, cfg.d_model));
  const nn::Tensor<double> down(nn::Matrix<double>::Random(batch, cfg.d_model));

  auto params = p.parameters();
  for (const auto& h : head.parameters()) params.push_back({"head." + h.name, h.tensor});
  const auto loss = [&](nn::Tape<double>& tape) {
    const auto z = encoder::encode_batch(tape, nn::Tensor<double>(tokens), mask, p);
    const std::array<nn::Tensor<double>, 2> nb{up, down};
    return testing::random_projection(tape, agent::q_values<double>(tape, z, nb, head), 5);
  };
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  for (const auto& group : params) {
    std::mt19937_64 pick(std::hash<std::string>{}(group.name));
    const auto r = testing::check_gradients({group}, loss, 100, pick);
    checked += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = group.name + ": " + r.worst;
    }
  }
  return {worst < 1e-4, fmt("%zu groups, %zu coordinates, max relative error %.2e (< 1e-4) at %s", params.size(),
                            checked, worst, where.c_str())};
}

// ---------------------------------------------------------------------------
// 4. Fuzzed signal sequences: no conflicting greens, exact interval grammar,
// realized greens within [min, max].

signal::PhaseScheme random_scheme(std::mt19937_64& rng) {
  signal::PhaseScheme s;
  switch (rng() % 3) {
    case 0: s = signal::four_phase_scheme(); break;
    case 1: s = signal::ring_barrier_scheme(); break;
    default: s = signal::two_phase_scheme(); break;
  }
  s.min_green_s = static_cast<double>(rng() % 16);
  s.max_green_s = s.min_green_s + static_cast<double>(rng() % 40);
  s.yellow_s = static_cast<double>(1 + rng() % 5);
  s.all_red_s = static_cast<double>(rng() % 4);
  signal::validate(s);
  return s;
}

struct GrammarChecker {
  const signal::PhaseScheme& s;
  signal::IntervalKind kind = signal::IntervalKind::Green;
  std::size_t phase = 0;
  std::size_t pending = 0;
  double run = 0;  // seconds displayed in the current interval
  std::size_t violations = 0;

  void fail() { ++violations; }

  // A green that lasted `g` seconds ends with a change toward `next`.
  void close_green(double g, std::size_t from, std::size_t next) {
    if (g < s.min_green_s || g > s.max_green_s) fail();
    if (next == from || !s.transition_allowed[from][next]) fail();
  }

  void observe(const signal::SignalInterval& d) {
    using K = signal::IntervalKind;
    switch (d.kind) {
      case K::Green:
        if (kind == K::Green) {
          if (d.current_phase != phase) fail();
          run += 1;
        } else {
          const bool yellow_done = kind == K::Yellow && run == s.yellow_s && s.all_red_s == 0;
          const bool red_done = kind == K::AllRed && run == s.all_red_s;
          if (!(yellow_done || red_done) || d.current_phase != pending) fail();
          phase = d.current_phase;
          run = 1;
        }
        if (run > s.max_green_s) fail();
        break;
      case K::Yellow: {
        const std::size_t next = d.pending_phase.value_or(phase);
        if (kind == K::Yellow && run < s.yellow_s) {
          if (next != pending) fail();
          run += 1;
          break;
        }
        if (kind == K::Green) {
          close_green(run, phase, next);
        } else {
          // Previous change completed and the new green was left at once.
          const bool yellow_done = kind == K::Yellow && run == s.yellow_s && s.all_red_s == 0;
          const bool red_done = kind == K::AllRed && run == s.all_red_s;
          if (!(yellow_done || red_done)) fail();
          phase = pending;
          close_green(0.0, phase, next);
        }
        pending = next;
        run = 1;
        break;
      }
      case K::AllRed:
        if (kind == K::AllRed) {
          run += 1;
          if (run > s.all_red_s) fail();
        } else {
          if (kind != K::Yellow || run != s.yellow_s) fail();
          run = 1;
        }
        if (d.pending_phase.value_or(pending) != pending) fail();
        break;
    }
    if (d.kind == K::Yellow && run > s.yellow_s) fail();
    kind = d.kind;
  }
};

std::size_t conflicting_greens(const signal::SignalInterval& d, const signal::PhaseScheme& s) {
  std::vector<sim::Movement> green;
  for (std::size_t side = 0; side < sim::kSides; ++side) {
    for (std::size_t turn = 0; turn < sim::kTurns; ++turn) {
      const sim::Movement m{static_cast<sim::Side>(side), static_cast<sim::Turn>(turn)};
      if (signal::is_green(d, s, m)) green.push_back(m);
    }
  }
  std::size_t n = 0;
  for (std::size_t a = 0; a < green.size(); ++a) {
    for (std::size_t b = a + 1; b < green.size(); ++b) n += signal::movements_conflict(green[a], green[b]);
  }
  return n;
}

Outcome signal_safety(const Context&) {
  std::mt19937_64 rng(4);
  std::size_t conflicts = 0, grammar = 0, steps = 0, rejected = 0, accepted_masked = 0;
  for (int seq = 0; seq < 1'000'000; ++seq) {
    const auto s = random_scheme(rng);
    signal::SignalInterval iv;
    iv.current_phase = rng() % s.size();
    GrammarChecker check{s};
    check.phase = iv.current_phase;
    const int length = 1 + static_cast<int>(rng() % 64);
    for (int t = 0; t < length; ++t, ++steps) {
      const auto mask = signal::valid_actions(iv, s);
      std::vector<std::size_t> valid;
      for (std::size_t a = 0; a < mask.size(); ++a) {
        if (mask[a]) valid.push_back(a);
      }
      if (valid.empty()) {
        ++grammar;
        break;
      }
      if (rng() % 50 == 0 && valid.size() < s.size()) {
        std::size_t bad = rng() % s.size();
        while (mask[bad]) bad = (bad + 1) % s.size();
        try {
          (void)signal::apply_action(iv, bad, s);
          ++accepted_masked;
        } catch (const ContractViolation&) {
          ++rejected;
        }
      }
      const auto shown = signal::apply_action(iv, valid[rng() % valid.size()], s);
      conflicts += conflicting_greens(shown, s);
      check.observe(shown);
      iv = signal::advance_interval(shown, 1.0, s);
    }
    grammar += check.violations;
  }
  const bool pass = conflicts == 0 && grammar == 0 && accepted_masked == 0;
  return {pass, fmt("10^6 sequences, %zu steps: %zu conflicting greens, %zu grammar/green-bound violations, "
                    "%zu masked actions rejected, %zu accepted",
                    steps, conflicts, grammar, rejected, accepted_masked)};
}

// ---------------------------------------------------------------------------
// 5. Conservation and spillback bounds under random valid control.

Outcome conservation(const Context& ctx) {
  auto base = harness::load_config(ctx.configs / "corridor.ini");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> main_rate(0.05, 0.7), side_rate(0.02, 0.4);
  std::size_t violations = 0, steps = 0, max_lane = 0;
  std::uint64_t vehicles = 0;
  for (int ep = 0; ep < 100; ++ep) {
    auto cfg = base;
    cfg.network.intersections = 1 + rng() % 4;
    cfg.network.main_demand = sim::DemandProfile::constant(main_rate(rng));
    cfg.network.side_demand = sim::DemandProfile::constant(side_rate(rng));
    cfg.network.through_lanes = 1 + rng() % 2;
    cfg.arrivals = rng() % 4 == 0 ? sim::ArrivalProcess::Deterministic : sim::ArrivalProcess::Poisson;
    if (rng() % 2) cfg.scheme = signal::ring_barrier_scheme();
    cfg.env.episode_length_s = 3600.0;
    auto env = harness::make_environment(cfg, false);
    const auto& topo = env.topology();
    auto r = env.reset(rng());

    // Oracle: vehicle ids seen in storage. 0 unseen, 1 present, 2 gone.
    std::vector<std::uint8_t> status;
    std::vector<std::uint64_t> present, now;
    std::uint64_t seen = 0, gone = 0;
    std::vector<std::size_t> actions(env.agent_count());
    while (!r.done) {
      for (std::size_t a = 0; a < actions.size(); ++a) {
        std::vector<std::size_t> valid;
        for (std::size_t k = 0; k < r.masks[a].size(); ++k) {
          if (r.masks[a][k]) valid.push_back(k);
        }
        actions[a] = valid[rng() % valid.size()];
      }
      r = env.step(actions);
      ++steps;
      const auto& st = env.state();
      now.clear();
      for (std::size_t l = 0; l < topo.links.size(); ++l) {
        const auto& link = topo.links[l];
        for (const auto& lane : st.lanes[l]) {
          max_lane = std::max(max_lane, lane.vehicles.size());
          if (lane.vehicles.size() > link.lane_capacity()) ++violations;
          if (lane.queued > lane.vehicles.size()) ++violations;
          if (static_cast<double>(lane.queued) * link.jam_spacing_m > link.length_m) ++violations;
          for (const auto& v : lane.vehicles) {
            if (!(v.position_m >= 0.0 && v.position_m <= link.length_m)) ++violations;
            if (v.id >= status.size()) status.resize(v.id + 1024, 0);
            if (status[v.id] == 2) ++violations;  // reappeared after leaving
            if (status[v.id] == 0) ++seen;
            if (status[v.id] == 3) ++violations;  // stored twice this step
            status[v.id] = 3;
            now.push_back(v.id);
          }
        }
      }
      for (auto id : present) {
        if (status[id] == 1) {
          status[id] = 2;
          ++gone;
        }
      }
      for (auto id : now) status[id] = 1;
      std::swap(present, now);
      if (st.entered != st.exited + st.in_network()) ++violations;
      if (st.entered != seen || st.exited != gone || present.size() != st.in_network()) ++violations;
    }
    vehicles += env.state().entered;
  }
  return {violations == 0, fmt("100 episodes, %zu steps, %llu vehicles, fullest lane %zu: %zu violations", steps,
                               static_cast<unsigned long long>(vehicles), max_lane, violations)};
}

// ---------------------------------------------------------------------------
// 6. Tiny MDP against exhaustive search.

double exhaustive_optimum(const harness::ExperimentConfig& cfg, std::uint64_t seed, std::size_t& leaves) {
  auto env = harness::make_environment(cfg, false);
  const auto r0 = env.reset(seed);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(const env::Environment&, const env::StepResult&)> dfs = [&](const env::Environment& e,
                                                                                const env::StepResult& r) {
    if (r.done) {
      ++leaves;
      best = std::min(best, std::accumulate(r.intersection_delay_s.begin(), r.intersection_delay_s.end(), 0.0));
      return;
    }
    for (std::size_t a = 0; a < r.masks[0].size(); ++a) {
      if (!r.masks[0][a]) continue;
      env::Environment branch = e;
      const std::vector<std::size_t> act{a};
      const auto next = branch.step(act);
      dfs(branch, next);
    }
  };
  dfs(env, r0);
  return best;
}

Outcome tiny_mdp(const Context& ctx) {
  auto cfg = harness::load_config(ctx.configs / "tiny_mdp.ini");
  cfg.output_dir = fresh_dir(ctx, "tiny_mdp");
  if (cfg.network.intersections != 1 || cfg.eval_seeds.size() != 1) return {false, "tiny_mdp.ini is not a single-intersection, single-eval-seed setup"};
  std::size_t leaves = 0;
  const double optimum = exhaustive_optimum(cfg, cfg.eval_seeds.front(), leaves);
  const auto t0 = std::chrono::steady_clock::now();
  harness::run_train(cfg);
  const double train_s = seconds_since(t0);
  const auto report = harness::run_eval(cfg, cfg.output_dir);
  std::size_t within = 0;
  std::string scores;
  for (const auto& row : report.rows) {
    within += row.sum() <= 1.1 * optimum;
    scores += (scores.empty() ? "" : ", ") + harness::format_number(row.sum());
  }
  const bool pass = within == report.rows.size() && report.rows.size() == 3 && train_s < 600.0;
  return {pass, fmt("optimum %.0f over %zu leaves, greedy delays [%s], %zu/%zu within 10%%, training %.0f s (< 600)",
                    optimum, leaves, scores.c_str(), within, report.rows.size(), train_s)};
}

// ---------------------------------------------------------------------------
// 7 and 8 share one set of corridor runs.

struct CorridorRuns {
  std::map<std::string, harness::MethodSummary> summary;
  std::map<std::string, double> seconds;
  std::string error;
};

const CorridorRuns& corridor_runs(const Context& ctx) {
  static std::optional<CorridorRuns> cached;
  if (cached) return *cached;
  cached.emplace();
  try {
    const auto base = harness::load_config(ctx.configs / "corridor.ini");
    for (auto m : {harness::Method::FixedTime, harness::Method::MemorylessDqn, harness::Method::EmarlinNoHistory,
                   harness::Method::Transformer}) {
      auto cfg = base;
      cfg.method = m;
      cfg.output_dir = fresh_dir(ctx, std::string("corridor/") + harness::to_string(m));
      const auto t0 = std::chrono::steady_clock::now();
      const auto report = harness::run_experiment(cfg);
      cached->seconds[harness::to_string(m)] = seconds_since(t0);
      for (const auto& s : harness::summarize(report)) cached->summary[s.method] = s;
      std::cerr << "  corridor " << harness::to_string(m) << ": " << harness::to_table(report) << std::flush;
    }
  } catch (const std::exception& e) {
    cached->error = e.what();
  }
  return *cached;
}

Outcome history_benefit(const Context& ctx) {
  const auto& runs = corridor_runs(ctx);
  if (!runs.error.empty()) return {false, runs.error};
  const auto& f = runs.summary.at("fixed-time");
  const auto& m = runs.summary.at("memoryless-dqn");
  const auto& t = runs.summary.at("transformer");
  const double vs_memoryless = harness::percent_reduction(m.sum_mean, t.sum_mean);
  const double vs_fixed = harness::percent_reduction(f.sum_mean, t.sum_mean);
  // The budget covers the three methods this criterion compares.
  double secs = 0.0;
  for (const char* k : {"fixed-time", "memoryless-dqn", "transformer"}) secs += runs.seconds.at(k);
  const bool pass = vs_memoryless >= 10.0 && vs_fixed >= 30.0 && secs <= 3600.0 && t.seeds == 5;
  return {pass, fmt("transformer %.0f vs memoryless %.0f (%.1f%% lower, need 10) and fixed-time %.0f (%.1f%% lower, "
                    "need 30), %zu seeds, corridor runs %.0f s (<= 3600)",
                    t.sum_mean, m.sum_mean, vs_memoryless, f.sum_mean, vs_fixed, t.seeds, secs)};
}

Outcome method_ordering(const Context& ctx) {
  const auto& runs = corridor_runs(ctx);
  if (!runs.error.empty()) return {false, runs.error};
  const auto& f = runs.summary.at("fixed-time");
  const auto& m = runs.summary.at("memoryless-dqn");
  const auto& n = runs.summary.at("emarlin-nohistory");
  const auto& t = runs.summary.at("transformer");
  const double tie = std::sqrt((n.sum_std * n.sum_std + t.sum_std * t.sum_std) / 2.0);
  const bool last = n.sum_mean >= t.sum_mean || t.sum_mean - n.sum_mean <= tie;
  const bool pass = f.sum_mean > m.sum_mean && m.sum_mean > n.sum_mean && last;
  return {pass, fmt("fixed-time %.0f > memoryless %.0f > no-history %.0f (+-%.0f) >= transformer %.0f (+-%.0f)%s",
                    f.sum_mean, m.sum_mean, n.sum_mean, n.sum_std, t.sum_mean, t.sum_std,
                    n.sum_mean < t.sum_mean && last ? " [tie within 1 pooled std]" : "")};
}

// ---------------------------------------------------------------------------
// 9. A lone intersection has no neighbours, so messages cannot matter.

std::string read_or_empty(const fs::path& p) { return fs::exists(p) ? harness::read_text(p) : std::string(); }

Outcome degeneracy(const Context& ctx) {
  auto cfg = harness::load_config(ctx.configs / "tiny_mdp.ini");
  cfg.method = harness::Method::Transformer;
  cfg.profile = harness::Profile::Test64;
  cfg.seeds = {11};
  cfg.train_episodes = 40;
  cfg.agent.warmup_episodes = 2;
  std::vector<std::string> metrics;
  std::vector<nn::Checkpoint> ckpts;
  for (bool communicate : {true, false}) {
    cfg.agent.communicate = communicate;
    cfg.output_dir = fresh_dir(ctx, communicate ? "degeneracy/emarlin" : "degeneracy/single");
    const auto result = harness::run_train(cfg);
    metrics.push_back(read_or_empty(result.metrics_files.at(0)));
    ckpts.push_back(nn::load_checkpoint(result.checkpoints.at(0)));
  }
  const bool same_metrics = !metrics[0].empty() && metrics[0] == metrics[1];
  const bool same_tensors = ckpts[0].tensors == ckpts[1].tensors;
  const auto rows = static_cast<std::size_t>(std::count(metrics[0].begin(), metrics[0].end(), '\n'));
  return {same_metrics && same_tensors,
          fmt("communicating vs single-agent run: metrics %s (%zu lines), %zu checkpoint tensors %s",
              same_metrics ? "identical" : "differ", rows, ckpts[0].tensors.size(),
              same_tensors ? "bit-identical" : "differ")};
}

// ---------------------------------------------------------------------------
// 10. Repeating a full run reproduces every file byte for byte.

std::map<std::string, std::string> snapshot_files(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = harness::read_text(e.path());
  }
  return files;
}

Outcome reproducibility(const Context& ctx) {
  auto cfg = harness::load_config(ctx.configs / "corridor.ini");
  cfg.method = harness::Method::Transformer;
  cfg.profile = harness::Profile::Test64;
  cfg.network.intersections = 2;
  cfg.env.episode_length_s = 300;
  cfg.train_episode_length_s = 240;
  cfg.agent.encoder.d_model = 16;
  cfg.agent.encoder.heads = 2;
  cfg.agent.encoder.d_ff = 16;
  cfg.agent.encoder.blocks = 1;
  cfg.agent.encoder.max_history = 6;
  cfg.agent.q_hidden = 16;
  cfg.agent.warmup_episodes = 1;
  cfg.agent.target_sync_steps = 50;
  cfg.seeds = {1, 2};
  cfg.train_episodes = 4;
  cfg.eval_seeds = {10001, 10002};
  cfg.checkpoint_every = 2;
  std::vector<std::map<std::string, std::string>> runs;
  for (int k = 0; k < 2; ++k) {
    cfg.output_dir = fresh_dir(ctx, "reproducibility");
    harness::run_experiment(cfg);
    runs.push_back(snapshot_files(cfg.output_dir));
  }
  std::size_t differ = 0;
  for (const auto& [name, bytes] : runs[0]) differ += !runs[1].count(name) || runs[1].at(name) != bytes;
  const bool has_report = runs[0].count("report.csv") > 0;
  const bool pass = differ == 0 && runs[0].size() == runs[1].size() && has_report && runs[0].size() >= 5;
  return {pass, fmt("%zu files (metrics, checkpoints, report.csv%s), %zu differ", runs[0].size(),
                    has_report ? "" : " MISSING", differ)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  Context ctx;
  ctx.configs = ATSC_CONFIG_DIR;
  ctx.work = fs::temp_directory_path() / "atsc_acceptance";
  std::vector<int> only;
  app.add_option("--configs", ctx.configs, "Directory holding corridor.ini and tiny_mdp.ini");
  app.add_option("--work", ctx.work, "Scratch directory for training runs");
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria{
      {"formula check on reference sums", formula_check},
      {"padding invariance", padding_invariance},
      {"gradient check", gradient_suite},
      {"signal safety", signal_safety},
      {"vehicle conservation", conservation},
      {"tiny MDP vs exhaustive optimum", tiny_mdp},
      {"history benefit on the corridor", history_benefit},
      {"method ordering on the corridor", method_ordering},
      {"single-intersection degeneracy", degeneracy},
      {"reproducibility", reproducibility},
  };
  const std::vector<double> budget_s{1, 60, 300, 120, 120, 0, 0, 0, 0, 0};  // 0: budget checked inside

  fs::create_directories(ctx.work);
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (budget_s[i] > 0 && secs >= budget_s[i]) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s budget]", budget_s[i]);
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail
              << fmt(" (%.1f s)", secs) << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
