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

#include <iostream>
#include <string>
#include <vector>

#include "atsc/harness/config.hpp"
#include "atsc/harness/report.hpp"
#include "atsc/harness/runner.hpp"

namespace {

using namespace atsc::harness;

struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::size_t episodes = 0;
  std::string out;
  std::string profile;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed-override", o.seeds, "Replace run.seeds");
  cmd->add_option("--episodes", o.episodes, "Replace run.train_episodes");
  cmd->add_option("--out", o.out, "Replace run.output_dir");
  cmd->add_option("--profile", o.profile, "test64 or train32")->check(CLI::IsMember({"test64", "train32"}));
}

ExperimentConfig load_with(const std::string& path, const Overrides& o) {
  auto cfg = load_config(path);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.episodes > 0) cfg.train_episodes = o.episodes;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.profile.empty()) cfg.profile = parse_profile(o.profile);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive traffic signal control lab"};
  app.require_subcommand(1);

  Overrides over;
  std::string config_path;
  std::string checkpoint_dir;
  std::vector<std::string> reports;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "Train every configured seed");
  train->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  train->add_flag("--quiet", quiet, "Suppress per-episode progress");
  add_overrides(train, over);

  auto* eval = app.add_subcommand("eval", "Greedy evaluation; writes <out>/report.csv");
  eval->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoint-dir", checkpoint_dir, "Directory holding seed<s>/final.ckpt");
  add_overrides(eval, over);

  auto* compare = app.add_subcommand("compare", "Percent delay reduction between report files");
  compare->add_option("reports", reports)->required()->check(CLI::ExistingFile);

  auto* inspect = app.add_subcommand("inspect-config", "Print the fully resolved configuration");
  inspect->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  add_overrides(inspect, over);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = load_with(config_path, over);
      TrainOptions opt;
      if (!quiet) opt.log = &std::cerr;
      const auto res = run_train(cfg, opt);
      if (!res.trained) std::cout << to_string(cfg.method) << " does not learn; nothing to train\n";
      for (const auto& m : res.metrics_files) std::cout << "metrics: " << m.string() << '\n';
    } else if (*eval) {
      const auto cfg = load_with(config_path, over);
      const auto report = run_eval(cfg, checkpoint_dir.empty() ? cfg.output_dir : std::filesystem::path(checkpoint_dir),
                                   &std::cerr);
      write_text(cfg.output_dir / "report.csv", to_csv(report));
      std::cout << to_table(report);
    } else if (*compare) {
      std::vector<EvaluationReport> loaded;
      for (const auto& r : reports) loaded.push_back(parse_report(read_text(r)));
      std::cout << ordering_table(loaded) << '\n';
      for (const auto& c : compare_methods(loaded)) {
        std::printf("%-20s -> %-20s %8.2f%%\n", c.base.c_str(), c.method.c_str(), c.percent);
      }
    } else if (*inspect) {
      const auto cfg = load_with(config_path, over);
      std::cout << render_config(cfg) << "# fingerprint " << env_fingerprint(cfg) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
