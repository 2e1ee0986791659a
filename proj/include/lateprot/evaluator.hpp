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

// Leave-one-out retrieval evaluation with capped recall@k.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lateprot/core_types.hpp"
#include "lateprot/scorer.hpp"

namespace lateprot {

//! hits in the first k ranked ids / min(k, |relevant|).
//! Throws kNoRelevant when `relevant` is empty, kInvalidArgument for k == 0.
double capped_recall_at_k(std::span<const std::string> ranked_ids,
                          const std::set<std::string>& relevant, std::size_t k);

struct QueryResult {
  std::string query_id;
  std::size_t n_relevant = 0;
  std::vector<double> capped_recall;  // aligned with EvalReport::ks
  double millis = 0.0;
};

struct EvalReport {
  std::string scorer;
  std::vector<std::size_t> ks;
  std::vector<QueryResult> per_query;    // sorted by query id
  std::vector<std::string> skipped;      // singleton-group queries, sorted
  std::vector<double> aggregate;         // unweighted mean over per_query
  std::size_t n_queries = 0;
  double mean_query_millis = 0.0;
};

inline constexpr std::size_t kDefaultKs[] = {1, 10, 100};

//! Every entry of `scorer` queries all the others; relevance means sharing
//! `groups[i]`. Queries run in parallel. Queries with no other group member
//! are listed in `skipped` and left out of the aggregate. Scorer errors are
//! rethrown with the query id prepended.
EvalReport evaluate(const CandidateScorer& scorer, std::span<const std::string> groups,
                    std::span<const std::size_t> ks, const std::string& scorer_name = "");

struct GroupSplit {
  std::vector<std::size_t> train;  // indices into the input
  std::vector<std::size_t> test;
  std::vector<std::string> test_groups;
};

//! Shuffles the sorted distinct groups with `seed` and sends the first
//! round(test_frac * n_groups) (clamped to [1, n_groups - 1]) to test.
//! Throws kTooFewGroups for fewer than two groups.
GroupSplit split_by_group(std::span<const std::string> groups, double test_frac, std::uint64_t seed);

struct RecordSplit {
  std::vector<ProteinRecord> train;
  std::vector<ProteinRecord> test;
};
RecordSplit split_by_group(std::span<const ProteinRecord> records, double test_frac, std::uint64_t seed);

void write_report_table(std::ostream& out, const EvalReport& report);
//! One JSON object per query, per skipped query, and a final aggregate object.
void write_report_jsonl(std::ostream& out, const EvalReport& report);

}  // namespace lateprot
