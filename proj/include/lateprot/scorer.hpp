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

// Late-interaction (MaxSim) scoring, the pooled-cosine baseline, and
// residue-level similarity maps.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lateprot/core_types.hpp"

namespace lateprot {

//! values[i * cols + j] = MaxSim(anchor_i, positive_j).
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;

  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

//! Pairwise residue cosines over valid positions only. `query_positions` and
//! `cand_positions` hold the original row index of each kept position.
struct SimilarityMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
  std::string query_id;
  std::string cand_id;
  std::vector<std::size_t> query_positions;
  std::vector<std::size_t> cand_positions;

  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

//! Sum over valid query rows of the best inner product against the valid
//! candidate rows. Per-row maxima are combined with pairwise summation.
//! Throws kDimensionMismatch, or kEmptySet when either side has no valid row.
float maxsim(const EmbeddingSet& query, const EmbeddingSet& candidate);

//! (maxsim(a, b), maxsim(b, a)).
std::pair<float, float> maxsim_asymmetry_check(const EmbeddingSet& a, const EmbeddingSet& b);

//! B x B MaxSim scores; cells are computed in parallel, each independently.
ScoreMatrix score_matrix(std::span<const EmbeddingSet> anchors,
                         std::span<const EmbeddingSet> positives);

//! L2-normalized masked mean of the valid rows (computed in double).
//! Throws ZeroNormRowError when the mean vanishes.
std::vector<float> pooled_vector(const ResidueSet& set);

//! Cosine between the pooled vectors of a and b, clamped to [-1, 1].
float mean_pool_cosine(const EmbeddingSet& a, const EmbeddingSet& b);

SimilarityMap similarity_map(const EmbeddingSet& query, const EmbeddingSet& candidate);

//! Header row and column carry residue indices; values are row-major.
void write_similarity_csv(std::ostream& out, const SimilarityMap& map);

enum class ScoreKind { kMaxSim, kPooled };

struct Hit {
  std::string id;
  float score = 0.0f;

  bool operator==(const Hit&) const = default;
};

//! Descending score, ascending id on ties.
void sort_hits(std::vector<Hit>& hits);

//! Scores every database entry whose id differs from the query's and returns
//! them ranked. Throws kEmptyDatabase when nothing is left to rank.
std::vector<Hit> rank_candidates(const EmbeddingSet& query, std::span<const EmbeddingSet> db,
                                 ScoreKind kind);

//! Index-addressed scoring over one database; the evaluator and CLI rank
//! through this so MaxSim, pooled cosine and MinHash share one code path.
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual std::size_t size() const = 0;
  virtual const std::string& id(std::size_t index) const = 0;
  virtual float score(std::size_t query, std::size_t candidate) const = 0;
};

class MaxSimScorer final : public CandidateScorer {
 public:
  explicit MaxSimScorer(std::vector<EmbeddingSet> sets);

  std::size_t size() const override { return sets_.size(); }
  const std::string& id(std::size_t index) const override { return sets_[index].protein_id(); }
  float score(std::size_t query, std::size_t candidate) const override;
  const EmbeddingSet& set(std::size_t index) const { return sets_[index]; }

 private:
  std::vector<EmbeddingSet> sets_;
};

//! Pools each set once up front and scores by cosine of pooled vectors.
class PooledScorer final : public CandidateScorer {
 public:
  explicit PooledScorer(std::span<const EmbeddingSet> sets);

  std::size_t size() const override { return ids_.size(); }
  const std::string& id(std::size_t index) const override { return ids_[index]; }
  float score(std::size_t query, std::size_t candidate) const override;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> pooled_;
};

//! Ranks every other entry of `scorer` against entry `query`; entries that
//! share the query's id are excluded as well.
std::vector<Hit> rank_all(const CandidateScorer& scorer, std::size_t query);

}  // namespace lateprot
