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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "atsc/harness/config.hpp"
#include "atsc/harness/report.hpp"

namespace atsc::harness {

struct TrainOptions {
  bool resume = true;  // continue from <seed dir>/latest.ckpt when present
  /// Stops after this many episodes of the current invocation (simulates an
  /// interruption; the run can be resumed later).
  std::optional<std::size_t> stop_after;
  std::ostream* log = nullptr;  // one progress line per episode
};

struct TrainResult {
  bool trained = false;  // false for non-learning methods
  std::vector<std::filesystem::path> metrics_files;
  std::vector<std::filesystem::path> checkpoints;
};

std::filesystem::path seed_dir(const std::filesystem::path& out, std::uint64_t seed);

/// Trains every configured seed into cfg.output_dir. Non-learning methods
/// return immediately.
TrainResult run_train(const ExperimentConfig& cfg, const TrainOptions& options = {});

/// Greedy rollouts on cfg.eval_seeds for every training seed. Learning
/// methods read <checkpoint_dir>/seed<s>/final.ckpt.
EvaluationReport run_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint_dir,
                          std::ostream* log = nullptr);

/// run_train, run_eval, then writes <output_dir>/report.csv. Returns the report.
EvaluationReport run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace atsc::harness
