// Copyright 2026 The lateprot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lateprot/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <ostream>
#include <random>

#include "json.hpp"
#include "lateprot/error.hpp"

namespace lateprot {

double capped_recall_at_k(std::span<const std::string> ranked_ids, const std::set<std::string>& relevant,
                          std::size_t k) {
  if (k == 0) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (relevant.empty()) fail(ErrorCode::kNoRelevant, "query has no relevant proteins");
  const std::size_t top = std::min(k, ranked_ids.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < top; ++r) hits += relevant.count(ranked_ids[r]);
  return static_cast<double>(hits) / static_cast<double>(std::min(k, relevant.size()));
}

EvalReport evaluate(const CandidateScorer& scorer, std::span<const std::string> groups,
                    std::span<const std::size_t> ks, const std::string& scorer_name) {
  const std::size_t n = scorer.size();
  if (groups.size() != n) fail(ErrorCode::kDimensionMismatch, "one group label per database entry is required");
  if (n < 2) fail(ErrorCode::kEmptyDatabase, "evaluation needs at least two proteins");
  if (ks.empty()) fail(ErrorCode::kInvalidArgument, "no cutoffs requested");
  for (std::size_t k : ks) {
    if (k == 0) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  }

  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[groups[i]].push_back(i);

  std::vector<QueryResult> results(n);
  std::vector<char> skipped(n, 0);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t qi = 0; qi < count; ++qi) {
    const auto q = static_cast<std::size_t>(qi);
    try {
      std::set<std::string> relevant;
      for (std::size_t m : members.find(groups[q])->second) {
        if (m != q) relevant.insert(scorer.id(m));
      }
      if (relevant.empty()) {
        skipped[q] = 1;
        continue;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const auto hits = rank_all(scorer, q);
      const auto t1 = std::chrono::steady_clock::now();
      std::vector<std::string> ids;
      ids.reserve(hits.size());
      for (const auto& h : hits) ids.push_back(h.id);
      QueryResult& r = results[q];
      r.query_id = scorer.id(q);
      r.n_relevant = relevant.size();
      r.millis = std::chrono::duration<double, std::milli>(t1 - t0).count();
      for (std::size_t k : ks) r.capped_recall.push_back(capped_recall_at_k(ids, relevant, k));
    } catch (...) {
      errors[q] = std::current_exception();
    }
  }
  for (std::size_t q = 0; q < n; ++q) {
    if (!errors[q]) continue;
    try {
      std::rethrow_exception(errors[q]);
    } catch (const Error& e) {
      throw Error(e.code(), "query '" + scorer.id(q) + "': " + e.what());
    }
  }

  EvalReport report;
  report.scorer = scorer_name;
  report.ks.assign(ks.begin(), ks.end());
  report.aggregate.assign(ks.size(), 0.0);
  double total_ms = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    if (skipped[q]) {
      report.skipped.push_back(scorer.id(q));
      continue;
    }
    for (std::size_t k = 0; k < ks.size(); ++k) report.aggregate[k] += results[q].capped_recall[k];
    total_ms += results[q].millis;
    report.per_query.push_back(std::move(results[q]));
  }
  report.n_queries = report.per_query.size();
  if (report.n_queries > 0) {
    for (auto& a : report.aggregate) a /= static_cast<double>(report.n_queries);
    report.mean_query_millis = total_ms / static_cast<double>(report.n_queries);
  }
  std::sort(report.per_query.begin(), report.per_query.end(),
            [](const QueryResult& a, const QueryResult& b) { return a.query_id < b.query_id; });
  std::sort(report.skipped.begin(), report.skipped.end());
  return report;
}

GroupSplit split_by_group(std::span<const std::string> groups, double test_frac, std::uint64_t seed) {
  std::vector<std::string> distinct(groups.begin(), groups.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) fail(ErrorCode::kTooFewGroups, "a group-disjoint split needs >= 2 groups");
  if (!(test_frac > 0.0 && test_frac < 1.0)) fail(ErrorCode::kInvalidArgument, "test_frac must be in (0, 1)");

  std::mt19937_64 rng(seed);
  for (std::size_t i = distinct.size(); i > 1; --i) std::swap(distinct[i - 1], distinct[rng() % i]);
  const auto n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(distinct.size()))), 1,
      distinct.size() - 1);
  const std::set<std::string> test(distinct.begin(), distinct.begin() + static_cast<std::ptrdiff_t>(n_test));

  GroupSplit split;
  split.test_groups.assign(test.begin(), test.end());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    (test.count(groups[i]) ? split.test : split.train).push_back(i);
  }
  return split;
}

RecordSplit split_by_group(std::span<const ProteinRecord> records, double test_frac, std::uint64_t seed) {
  std::vector<std::string> groups;
  groups.reserve(records.size());
  for (const auto& r : records) groups.push_back(r.group);
  const auto s = split_by_group(std::span<const std::string>(groups), test_frac, seed);
  RecordSplit out;
  for (std::size_t i : s.train) out.train.push_back(records[i]);
  for (std::size_t i : s.test) out.test.push_back(records[i]);
  return out;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  char buf[64];
  out << "# scorer: " << (report.scorer.empty() ? "-" : report.scorer) << "\n";
  out << "# capped recall@k = hits@k / min(k, N_q); aggregate is the unweighted mean over queries\n";
  out << "# timing: wall-clock ranking time per query, excluding embedding load\n";
  out << "queries: " << report.n_queries << "  skipped (singleton group): " << report.skipped.size() << "\n";
  for (std::size_t k = 0; k < report.ks.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "cR@%-4zu %.4f\n", report.ks[k], report.aggregate[k]);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mean query time: %.3f ms\n", report.mean_query_millis);
  out << buf;
  for (const auto& id : report.skipped) out << "skipped\t" << id << "\tsingleton group\n";
}

void write_report_jsonl(std::ostream& out, const EvalReport& report) {
  auto key = [](std::size_t k) { return "cR@" + std::to_string(k); };
  for (const auto& q : report.per_query) {
    nlohmann::json j = {{"query", q.query_id}, {"n_relevant", q.n_relevant}, {"ms", q.millis}};
    for (std::size_t k = 0; k < report.ks.size(); ++k) j[key(report.ks[k])] = q.capped_recall[k];
    out << j.dump() << '\n';
  }
  for (const auto& id : report.skipped) {
    out << nlohmann::json{{"skipped", id}, {"reason", "singleton group"}}.dump() << '\n';
  }
  nlohmann::json agg = {{"aggregate", true},
                        {"scorer", report.scorer},
                        {"n_queries", report.n_queries},
                        {"n_skipped", report.skipped.size()},
                        {"mean_query_ms", report.mean_query_millis}};
  for (std::size_t k = 0; k < report.ks.size(); ++k) agg[key(report.ks[k])] = report.aggregate[k];
  out << agg.dump() << '\n';
}

}  // namespace lateprot
