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

#include "atsc/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace atsc::harness {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ReportError("report: bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ReportError("report: bad seed '" + s + "'");
  return v;
}

std::vector<MethodSummary> all_methods(std::span<const EvaluationReport> reports) {
  if (reports.empty()) throw ReportError("compare: no reports");
  std::vector<MethodSummary> out;
  for (const auto& r : reports) {
    if (r.fingerprint != reports.front().fingerprint || r.eval_seeds != reports.front().eval_seeds) {
      throw ReportError("compare: reports come from different evaluation configurations");
    }
    for (auto& s : summarize(r)) {
      const bool dup = std::any_of(out.begin(), out.end(), [&](const MethodSummary& o) { return o.method == s.method; });
      if (dup) throw ReportError("compare: method '" + s.method + "' appears in more than one report");
      out.push_back(std::move(s));
    }
  }
  if (out.size() < 2) throw ReportError("compare: need at least two methods");
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // drops the sign of -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double ReportRow::sum() const { return std::accumulate(delays.begin(), delays.end(), 0.0); }

std::vector<MethodSummary> summarize(const EvaluationReport& r) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const ReportRow*>> groups;
  for (const auto& row : r.rows) {
    auto [it, fresh] = index.emplace(row.method, groups.size());
    if (fresh) {
      groups.emplace_back();
      out.push_back({row.method, 0, {}, {}, 0.0, 0.0});
    }
    groups[it->second].push_back(&row);
  }
  const std::size_t n_int = r.intersections.size();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& s = out[g];
    const auto& rows = groups[g];
    s.seeds = rows.size();
    const double n = static_cast<double>(rows.size());
    s.mean.assign(n_int, 0.0);
    s.stddev.assign(n_int, 0.0);
    std::vector<double> sums;
    for (const auto* row : rows) {
      for (std::size_t i = 0; i < n_int; ++i) s.mean[i] += row->delays[i] / n;
      sums.push_back(row->sum());
    }
    for (const auto* row : rows) {
      for (std::size_t i = 0; i < n_int; ++i) s.stddev[i] += (row->delays[i] - s.mean[i]) * (row->delays[i] - s.mean[i]);
    }
    for (auto& v : s.stddev) v = rows.size() > 1 ? std::sqrt(v / (n - 1.0)) : 0.0;
    s.sum_mean = std::accumulate(s.mean.begin(), s.mean.end(), 0.0);
    double ss = 0.0;
    for (double x : sums) ss += (x - s.sum_mean) * (x - s.sum_mean);
    s.sum_std = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return out;
}

std::string to_csv(const EvaluationReport& r) {
  std::ostringstream o;
  o << "# fingerprint=" << r.fingerprint << "\n# eval_seeds=";
  for (std::size_t i = 0; i < r.eval_seeds.size(); ++i) o << (i ? ";" : "") << r.eval_seeds[i];
  o << "\nmethod,seed";
  for (const auto& n : r.intersections) o << ',' << n;
  o << ",Sum\n";
  for (const auto& row : r.rows) {
    if (row.delays.size() != r.intersections.size()) throw ReportError("report row width mismatch");
    o << row.method << ',' << row.seed;
    for (double d : row.delays) o << ',' << format_number(d);
    o << ',' << format_number(row.sum()) << '\n';
  }
  for (const auto& s : summarize(r)) {
    o << s.method << ",mean";
    for (double d : s.mean) o << ',' << format_number(d);
    o << ',' << format_number(s.sum_mean) << '\n';
    o << s.method << ",std";
    for (double d : s.stddev) o << ',' << format_number(d);
    o << ',' << format_number(s.sum_std) << '\n';
  }
  return o.str();
}

EvaluationReport parse_report(const std::string& text) {
  EvaluationReport r;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# fingerprint=", 0) == 0) {
      r.fingerprint = line.substr(14);
      continue;
    }
    if (line.rfind("# eval_seeds=", 0) == 0) {
      for (const auto& s : split(line.substr(13), ';')) {
        if (!s.empty()) r.eval_seeds.push_back(parse_u64(s));
      }
      continue;
    }
    if (line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (!header) {
      if (cells.size() < 3 || cells[0] != "method" || cells[1] != "seed" || cells.back() != "Sum") {
        throw ReportError("report: unexpected header '" + line + "'");
      }
      r.intersections.assign(cells.begin() + 2, cells.end() - 1);
      header = true;
      continue;
    }
    if (cells.size() != r.intersections.size() + 3) throw ReportError("report: row width mismatch: '" + line + "'");
    if (cells[1] == "mean" || cells[1] == "std") continue;  // derived rows
    ReportRow row;
    row.method = cells[0];
    row.seed = parse_u64(cells[1]);
    for (std::size_t i = 2; i + 1 < cells.size(); ++i) row.delays.push_back(parse_double(cells[i]));
    r.rows.push_back(std::move(row));
  }
  if (!header) throw ReportError("report: missing header");
  return r;
}

std::string to_table(const EvaluationReport& r) {
  std::ostringstream o;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-20s", "method");
  o << buf;
  for (const auto& n : r.intersections) {
    std::snprintf(buf, sizeof buf, "%14s", n.c_str());
    o << buf;
  }
  o << "            Sum (mean +- std)\n";
  for (const auto& s : summarize(r)) {
    std::snprintf(buf, sizeof buf, "%-20s", s.method.c_str());
    o << buf;
    for (double d : s.mean) {
      std::snprintf(buf, sizeof buf, "%14.0f", d);
      o << buf;
    }
    std::snprintf(buf, sizeof buf, "%14.0f +- %-10.0f", s.sum_mean, s.sum_std);
    o << buf << '\n';
  }
  return o.str();
}

double percent_reduction(double base, double method) {
  if (base == 0.0) return 0.0;
  return (base - method) / base * 100.0;
}

std::vector<Comparison> compare_methods(std::span<const EvaluationReport> reports) {
  const auto methods = all_methods(reports);
  std::vector<Comparison> out;
  for (const auto& b : methods) {
    for (const auto& m : methods) {
      if (&b == &m) continue;
      out.push_back({b.method, m.method, b.sum_mean, m.sum_mean, percent_reduction(b.sum_mean, m.sum_mean)});
    }
  }
  return out;
}

std::string ordering_table(std::span<const EvaluationReport> reports) {
  auto methods = all_methods(reports);
  std::stable_sort(methods.begin(), methods.end(),
                   [](const MethodSummary& a, const MethodSummary& b) { return a.sum_mean > b.sum_mean; });
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %16s %12s %18s\n", "method", "Sum mean", "Sum std", "reduction vs worst");
  o << buf;
  for (const auto& m : methods) {
    std::snprintf(buf, sizeof buf, "%-20s %16.1f %12.1f %17.1f%%\n", m.method.c_str(), m.sum_mean, m.sum_std,
                  percent_reduction(methods.front().sum_mean, m.sum_mean));
    o << buf;
  }
  return o.str();
}

}  // namespace atsc::harness
