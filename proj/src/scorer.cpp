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

#include "lateprot/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "lateprot/error.hpp"
#include "lateprot/kernels.hpp"

namespace lateprot {
namespace {

void check_pair(const ResidueSet& a, const ResidueSet& b, const char* op) {
  if (a.dim() != b.dim()) {
    fail(ErrorCode::kDimensionMismatch, std::string(op) + ": '" + a.protein_id() + "' has D=" +
                                            std::to_string(a.dim()) + " but '" + b.protein_id() +
                                            "' has D=" + std::to_string(b.dim()));
  }
  for (const ResidueSet* s : {&a, &b}) {
    if (s->valid_count() == 0) {
      fail(ErrorCode::kEmptySet, std::string(op) + ": '" + s->protein_id() + "' has no valid rows");
    }
  }
}

float maxsim_unchecked(const EmbeddingSet& q, const EmbeddingSet& d) {
  const auto& k = kernels::active();
  thread_local std::vector<float> row_max;
  row_max.clear();
  const std::uint8_t* cand_mask = d.all_valid() ? nullptr : d.mask().data();
  const float* cand = d.values().data();
  for (std::size_t i = 0; i < q.length(); ++i) {
    if (!q.is_valid(i)) continue;
    row_max.push_back(k.max_dot_f32(q.row(i).data(), cand, d.length(), d.dim(), cand_mask, nullptr));
  }
  return kernels::pairwise_sum(std::span<const float>(row_max));
}

}  // namespace

float maxsim(const EmbeddingSet& query, const EmbeddingSet& candidate) {
  check_pair(query, candidate, "maxsim");
  return maxsim_unchecked(query, candidate);
}

std::pair<float, float> maxsim_asymmetry_check(const EmbeddingSet& a, const EmbeddingSet& b) {
  return {maxsim(a, b), maxsim(b, a)};
}

ScoreMatrix score_matrix(std::span<const EmbeddingSet> anchors,
                         std::span<const EmbeddingSet> positives) {
  if (anchors.size() != positives.size()) {
    fail(ErrorCode::kDimensionMismatch, "score_matrix: anchor and positive batches differ in size");
  }
  for (const auto& a : anchors) {
    for (const auto& p : positives) check_pair(a, p, "score_matrix");
  }
  ScoreMatrix s;
  s.rows = anchors.size();
  s.cols = positives.size();
  s.values.assign(s.rows * s.cols, 0.0f);
  for (const auto& a : anchors) s.row_ids.push_back(a.protein_id());
  for (const auto& p : positives) s.col_ids.push_back(p.protein_id());
  const auto cells = static_cast<std::ptrdiff_t>(s.rows * s.cols);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const auto i = static_cast<std::size_t>(c) / s.cols;
    const auto j = static_cast<std::size_t>(c) % s.cols;
    s.values[static_cast<std::size_t>(c)] = maxsim_unchecked(anchors[i], positives[j]);
  }
  return s;
}

std::vector<float> pooled_vector(const ResidueSet& set) {
  if (set.valid_count() == 0) fail(ErrorCode::kEmptySet, "pooled_vector: '" + set.protein_id() + "' has no valid rows");
  std::vector<double> mean(set.dim(), 0.0);
  for (std::size_t t = 0; t < set.length(); ++t) {
    if (!set.is_valid(t)) continue;
    const auto r = set.row(t);
    for (std::size_t k = 0; k < set.dim(); ++k) mean[k] += r[k];
  }
  double sq = 0.0;
  for (auto& m : mean) {
    m /= static_cast<double>(set.valid_count());
    sq += m * m;
  }
  const double norm = std::sqrt(sq);
  if (norm < kZeroNormThreshold) throw ZeroNormRowError(0, "pooled mean of '" + set.protein_id() + "'");
  std::vector<float> out(set.dim());
  for (std::size_t k = 0; k < set.dim(); ++k) out[k] = static_cast<float>(mean[k] / norm);
  return out;
}

float mean_pool_cosine(const EmbeddingSet& a, const EmbeddingSet& b) {
  check_pair(a, b, "mean_pool_cosine");
  const auto pa = pooled_vector(a);
  const auto pb = pooled_vector(b);
  double dot = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k) dot += static_cast<double>(pa[k]) * pb[k];
  return static_cast<float>(std::clamp(dot, -1.0, 1.0));
}

SimilarityMap similarity_map(const EmbeddingSet& query, const EmbeddingSet& candidate) {
  check_pair(query, candidate, "similarity_map");
  SimilarityMap m;
  m.query_id = query.protein_id();
  m.cand_id = candidate.protein_id();
  for (std::size_t i = 0; i < query.length(); ++i) {
    if (query.is_valid(i)) m.query_positions.push_back(i);
  }
  for (std::size_t j = 0; j < candidate.length(); ++j) {
    if (candidate.is_valid(j)) m.cand_positions.push_back(j);
  }
  m.rows = m.query_positions.size();
  m.cols = m.cand_positions.size();
  m.values.resize(m.rows * m.cols);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto q = query.row(m.query_positions[i]);
    for (std::size_t j = 0; j < m.cols; ++j) {
      m.values[i * m.cols + j] = k.dot_f32(q.data(), candidate.row(m.cand_positions[j]).data(), q.size());
    }
  }
  return m;
}

void write_similarity_csv(std::ostream& out, const SimilarityMap& map) {
  char buf[32];
  out << "residue";
  for (std::size_t j : map.cand_positions) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < map.rows; ++i) {
    out << map.query_positions[i];
    for (std::size_t j = 0; j < map.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(map.at(i, j)));
      out << ',' << buf;
    }
    out << '\n';
  }
}

void sort_hits(std::vector<Hit>& hits) {
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
}

std::vector<Hit> rank_candidates(const EmbeddingSet& query, std::span<const EmbeddingSet> db,
                                 ScoreKind kind) {
  std::vector<const EmbeddingSet*> others;
  for (const auto& c : db) {
    if (c.protein_id() != query.protein_id()) others.push_back(&c);
  }
  if (others.empty()) fail(ErrorCode::kEmptyDatabase, "no candidates left after excluding '" + query.protein_id() + "'");
  for (const auto* c : others) check_pair(query, *c, "rank_candidates");

  std::vector<Hit> hits(others.size());
  std::vector<float> pooled_query;
  if (kind == ScoreKind::kPooled) pooled_query = pooled_vector(query);
  const auto n = static_cast<std::ptrdiff_t>(others.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const auto& cand = *others[static_cast<std::size_t>(c)];
    float s = 0.0f;
    if (kind == ScoreKind::kMaxSim) {
      s = maxsim_unchecked(query, cand);
    } else {
      const auto pc = pooled_vector(cand);
      s = kernels::active().dot_f32(pooled_query.data(), pc.data(), pc.size());
    }
    hits[static_cast<std::size_t>(c)] = Hit{cand.protein_id(), s};
  }
  sort_hits(hits);
  return hits;
}

MaxSimScorer::MaxSimScorer(std::vector<EmbeddingSet> sets) : sets_(std::move(sets)) {
  for (const auto& s : sets_) {
    if (s.dim() != sets_.front().dim()) fail(ErrorCode::kDimensionMismatch, "MaxSimScorer: mixed dimensions");
    if (s.valid_count() == 0) fail(ErrorCode::kEmptySet, "MaxSimScorer: '" + s.protein_id() + "' has no valid rows");
  }
}

float MaxSimScorer::score(std::size_t query, std::size_t candidate) const {
  return maxsim_unchecked(sets_[query], sets_[candidate]);
}

PooledScorer::PooledScorer(std::span<const EmbeddingSet> sets) {
  if (!sets.empty()) dim_ = sets.front().dim();
  pooled_.reserve(sets.size() * dim_);
  for (const auto& s : sets) {
    if (s.dim() != dim_) fail(ErrorCode::kDimensionMismatch, "PooledScorer: mixed dimensions");
    ids_.push_back(s.protein_id());
    const auto p = pooled_vector(s);
    pooled_.insert(pooled_.end(), p.begin(), p.end());
  }
}

float PooledScorer::score(std::size_t query, std::size_t candidate) const {
  return kernels::active().dot_f32(pooled_.data() + query * dim_, pooled_.data() + candidate * dim_, dim_);
}

std::vector<Hit> rank_all(const CandidateScorer& scorer, std::size_t query) {
  const std::string& qid = scorer.id(query);
  std::vector<std::size_t> others;
  for (std::size_t c = 0; c < scorer.size(); ++c) {
    if (c != query && scorer.id(c) != qid) others.push_back(c);
  }
  if (others.empty()) fail(ErrorCode::kEmptyDatabase, "no candidates left after excluding '" + qid + "'");
  std::vector<Hit> hits(others.size());
  const auto n = static_cast<std::ptrdiff_t>(others.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const std::size_t idx = others[static_cast<std::size_t>(c)];
    hits[static_cast<std::size_t>(c)] = Hit{scorer.id(idx), scorer.score(query, idx)};
  }
  sort_hits(hits);
  return hits;
}

}  // namespace lateprot
