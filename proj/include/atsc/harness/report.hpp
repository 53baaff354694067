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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace atsc::harness {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Episodic delay of one (method, training seed), averaged over the eval seeds.
struct ReportRow {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<double> delays;  // per intersection, seconds

  double sum() const;
};

struct EvaluationReport {
  std::string fingerprint;  // evaluation conditions, see env_fingerprint
  std::vector<std::string> intersections;
  std::vector<std::uint64_t> eval_seeds;
  std::vector<ReportRow> rows;
};

struct MethodSummary {
  std::string method;
  std::size_t seeds = 0;
  std::vector<double> mean;  // per intersection
  std::vector<double> stddev;
  double sum_mean = 0.0;
  double sum_std = 0.0;
};

/// Per-method mean and sample standard deviation across seeds, in order of
/// first appearance.
std::vector<MethodSummary> summarize(const EvaluationReport& r);

/// Delimited text. Schema:
///   # fingerprint=<hex>
///   # eval_seeds=<s1;s2;...>
///   method,seed,<intersection...>,Sum
/// followed by one row per (method, seed) and then `mean` and `std` rows per
/// method in the seed column.
std::string to_csv(const EvaluationReport& r);
EvaluationReport parse_report(const std::string& text);

/// Fixed-width human table of the method summaries.
std::string to_table(const EvaluationReport& r);

/// (base - method) / base * 100.
double percent_reduction(double base, double method);

struct Comparison {
  std::string base;
  std::string method;
  double base_sum = 0.0;
  double method_sum = 0.0;
  double percent = 0.0;
};

/// Pairwise percent reduction of the mean Sum column across all methods of
/// the given reports. Throws ReportError when the reports were produced under
/// different evaluation conditions or fewer than two methods are present.
std::vector<Comparison> compare_methods(std::span<const EvaluationReport> reports);

/// Methods sorted by mean Sum delay (descending, worst first) with the
/// percent reduction each achieves over the worst.
std::string ordering_table(std::span<const EvaluationReport> reports);

/// Shortest round-trip decimal text of v.
std::string format_number(double v);

}  // namespace atsc::harness
