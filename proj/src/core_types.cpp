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

#include "lateprot/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "lateprot/error.hpp"

namespace lateprot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroNormRow: return "ZeroNormRow";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kEmptyDatabase: return "EmptyDatabase";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kSchemeMismatch: return "SchemeMismatch";
    case ErrorCode::kNoRelevant: return "NoRelevant";
    case ErrorCode::kTooFewGroups: return "TooFewGroups";
    case ErrorCode::kInsufficientPairs: return "InsufficientPairs";
  }
  return "Unknown";
}

void validate(const ProteinRecord& record) {
  if (record.id.empty()) fail(ErrorCode::kInvalidArgument, "protein record with empty id");
  if (record.sequence.empty()) {
    fail(ErrorCode::kInvalidArgument, "protein '" + record.id + "' has an empty sequence");
  }
  if (record.group.empty()) {
    fail(ErrorCode::kInvalidArgument, "protein '" + record.id + "' has an empty group");
  }
}

std::string normalize_sequence(std::string_view sequence, std::size_t* replaced) {
  std::string out(sequence);
  std::size_t n = 0;
  for (char& c : out) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (kAminoAcids.find(c) == std::string_view::npos) {
      c = 'X';
      ++n;
    }
  }
  if (replaced) *replaced = n;
  return out;
}

ResidueSet::ResidueSet(std::string id, std::size_t rows, std::size_t dim,
                       std::vector<float> values, Mask mask, const char* kind)
    : id_(std::move(id)), rows_(rows), dim_(dim), values_(std::move(values)),
      mask_(std::move(mask)) {
  if (id_.empty()) fail(ErrorCode::kInvalidArgument, std::string(kind) + " with empty protein id");
  if (rows_ == 0 || dim_ == 0) {
    fail(ErrorCode::kInvalidArgument, std::string(kind) + " '" + id_ + "' must have T >= 1 and D >= 1");
  }
  if (values_.size() != rows_ * dim_) {
    fail(ErrorCode::kDimensionMismatch,
         std::string(kind) + " '" + id_ + "': expected " + std::to_string(rows_ * dim_) +
             " values, got " + std::to_string(values_.size()));
  }
  if (mask_.empty()) mask_.assign(rows_, 1);
  if (mask_.size() != rows_) {
    fail(ErrorCode::kDimensionMismatch, std::string(kind) + " '" + id_ + "': mask length != T");
  }
  for (auto& m : mask_) m = m ? 1 : 0;
  valid_count_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

HiddenSet::HiddenSet(std::string id, std::size_t rows, std::size_t dim,
                     std::vector<float> values, Mask mask)
    : ResidueSet(std::move(id), rows, dim, std::move(values), std::move(mask), "HiddenSet") {
  for (float v : this->values()) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "HiddenSet '" + protein_id() + "' has NaN/Inf");
  }
}

EmbeddingSet::EmbeddingSet(std::string id, std::size_t rows, std::size_t dim,
                           std::vector<float> values, Mask mask)
    : ResidueSet(std::move(id), rows, dim, std::move(values), std::move(mask), "EmbeddingSet") {
  for (std::size_t t = 0; t < length(); ++t) {
    if (!is_valid(t)) continue;
    double sq = 0.0;
    for (float v : row(t)) {
      if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "EmbeddingSet '" + protein_id() + "' has NaN/Inf");
      sq += static_cast<double>(v) * v;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
      fail(ErrorCode::kInvalidArgument, "EmbeddingSet '" + protein_id() + "': row " +
                                            std::to_string(t) + " is not unit norm");
    }
  }
}

ProjectionHead::ProjectionHead(std::size_t d_out, std::size_t h_in, std::vector<float> weights)
    : d_out_(d_out), h_in_(h_in), weights_(std::move(weights)) {
  if (d_out_ == 0 || h_in_ == 0) fail(ErrorCode::kInvalidArgument, "projection head needs D >= 1 and H >= 1");
  if (weights_.size() != d_out_ * h_in_) {
    fail(ErrorCode::kDimensionMismatch, "projection head: expected " + std::to_string(d_out_ * h_in_) +
                                            " weights, got " + std::to_string(weights_.size()));
  }
  for (float w : weights_) {
    if (!std::isfinite(w)) fail(ErrorCode::kNonFinite, "projection head has NaN/Inf weights");
  }
}

namespace {

// Writes the unit-normalized double row into `out`.
void normalize_into(std::span<const double> row, std::span<float> out, std::size_t t,
                    const std::string& id) {
  double sq = 0.0;
  for (double v : row) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) fail(ErrorCode::kNonFinite, "'" + id + "' row " + std::to_string(t) + " is not finite");
  if (norm < kZeroNormThreshold) throw ZeroNormRowError(t, "'" + id + "'");
  for (std::size_t k = 0; k < row.size(); ++k) out[k] = static_cast<float>(row[k] / norm);
}

}  // namespace

EmbeddingSet l2_normalize_rows(std::string id, std::size_t rows, std::size_t dim,
                               std::span<const float> values, Mask mask) {
  if (values.size() != rows * dim) fail(ErrorCode::kDimensionMismatch, "l2_normalize_rows: size != T*D");
  if (mask.empty()) mask.assign(rows, 1);
  if (mask.size() != rows) fail(ErrorCode::kDimensionMismatch, "l2_normalize_rows: mask length != T");
  for (float v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "l2_normalize_rows: '" + id + "' has NaN/Inf");
  }
  std::vector<float> out(rows * dim, 0.0f);
  std::vector<double> buf(dim);
  for (std::size_t t = 0; t < rows; ++t) {
    if (!mask[t]) continue;
    for (std::size_t k = 0; k < dim; ++k) buf[k] = values[t * dim + k];
    normalize_into(buf, std::span<float>(out).subspan(t * dim, dim), t, id);
  }
  return EmbeddingSet(std::move(id), rows, dim, std::move(out), std::move(mask));
}

EmbeddingSet l2_normalize_rows(const HiddenSet& hidden) {
  return l2_normalize_rows(hidden.protein_id(), hidden.length(), hidden.dim(), hidden.values(),
                           hidden.mask());
}

EmbeddingSet project(const HiddenSet& hidden, const ProjectionHead& head) {
  if (hidden.dim() != head.h_in()) {
    fail(ErrorCode::kDimensionMismatch, "project: hidden dim " + std::to_string(hidden.dim()) +
                                            " != head input dim " + std::to_string(head.h_in()));
  }
  const std::size_t d_out = head.d_out();
  const std::size_t h_in = head.h_in();
  std::vector<float> out(hidden.length() * d_out, 0.0f);
  std::vector<double> acc(d_out);
  for (std::size_t t = 0; t < hidden.length(); ++t) {
    if (!hidden.is_valid(t)) continue;
    const auto h = hidden.row(t);
    for (std::size_t d = 0; d < d_out; ++d) {
      const auto w = head.row(d);
      double s = 0.0;
      for (std::size_t k = 0; k < h_in; ++k) s += static_cast<double>(w[k]) * h[k];
      acc[d] = s;
    }
    normalize_into(acc, std::span<float>(out).subspan(t * d_out, d_out), t, hidden.protein_id());
  }
  return EmbeddingSet(hidden.protein_id(), hidden.length(), d_out, std::move(out), hidden.mask());
}

std::string truncate(std::string_view sequence, std::size_t max_len) {
  return std::string(sequence.substr(0, std::min(sequence.size(), max_len)));
}

namespace {

template <class Set>
Set truncate_set(const Set& set, std::size_t max_len) {
  if (set.length() <= max_len) return set;
  const auto values = set.values().first(max_len * set.dim());
  Mask mask(set.mask().begin(), set.mask().begin() + static_cast<std::ptrdiff_t>(max_len));
  return Set(set.protein_id(), max_len, set.dim(), {values.begin(), values.end()}, std::move(mask));
}

}  // namespace

HiddenSet truncate(const HiddenSet& set, std::size_t max_len) { return truncate_set(set, max_len); }
EmbeddingSet truncate(const EmbeddingSet& set, std::size_t max_len) { return truncate_set(set, max_len); }

}  // namespace lateprot
