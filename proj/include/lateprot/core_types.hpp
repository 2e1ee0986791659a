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

// Residue-set domain types shared by every module.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lateprot {

inline constexpr std::size_t kMaxResidues = 256;
inline constexpr std::size_t kDefaultEmbeddingDim = 128;
inline constexpr double kUnitNormTolerance = 1e-4;
inline constexpr double kZeroNormThreshold = 1e-12;

struct ProteinRecord {
  std::string id;
  std::string sequence;
  std::string group;

  bool operator==(const ProteinRecord&) const = default;
};

//! Throws kInvalidArgument unless id, sequence, and group are all non-empty.
void validate(const ProteinRecord& record);

//! Amino-acid alphabet used for sequence checks; anything else becomes 'X'.
inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWYX";

//! Upper-cases `sequence` and maps letters outside the alphabet to 'X'.
//! `replaced`, when given, receives the number of substituted positions.
std::string normalize_sequence(std::string_view sequence,
                               std::size_t* replaced = nullptr);

//! One byte per row; non-zero marks a valid (non-padding) position.
using Mask = std::vector<std::uint8_t>;

//! A T x D row-major block of residue vectors with a validity mask.
class ResidueSet {
 public:
  const std::string& protein_id() const noexcept { return id_; }
  std::size_t length() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t valid_count() const noexcept { return valid_count_; }
  bool all_valid() const noexcept { return valid_count_ == rows_; }
  bool is_valid(std::size_t t) const noexcept { return mask_[t] != 0; }

  std::span<const float> row(std::size_t t) const noexcept {
    return {values_.data() + t * dim_, dim_};
  }
  std::span<const float> values() const noexcept { return values_; }
  const Mask& mask() const noexcept { return mask_; }

  bool operator==(const ResidueSet&) const = default;

 protected:
  ResidueSet(std::string id, std::size_t rows, std::size_t dim,
             std::vector<float> values, Mask mask, const char* kind);

 private:
  std::string id_;
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  Mask mask_;
  std::size_t valid_count_ = 0;
};

//! Backbone residue vectors h_t (any finite values).
class HiddenSet : public ResidueSet {
 public:
  //! An empty `mask` means every row is valid.
  HiddenSet(std::string id, std::size_t rows, std::size_t dim,
            std::vector<float> values, Mask mask = {});
};

//! Residue vectors in retrieval space; every valid row has unit L2 norm.
class EmbeddingSet : public ResidueSet {
 public:
  EmbeddingSet(std::string id, std::size_t rows, std::size_t dim,
               std::vector<float> values, Mask mask = {});
};

//! Linear map W (d_out x h_in, row-major) from backbone to retrieval space.
class ProjectionHead {
 public:
  ProjectionHead(std::size_t d_out, std::size_t h_in, std::vector<float> weights);

  std::size_t d_out() const noexcept { return d_out_; }
  std::size_t h_in() const noexcept { return h_in_; }
  std::span<const float> weights() const noexcept { return weights_; }
  std::span<const float> row(std::size_t d) const noexcept {
    return {weights_.data() + d * h_in_, h_in_};
  }

  bool operator==(const ProjectionHead&) const = default;

 private:
  std::size_t d_out_;
  std::size_t h_in_;
  std::vector<float> weights_;
};

//! Normalizes each valid row to unit length. Padding rows are zeroed.
//! Throws ZeroNormRowError for a valid row with norm < 1e-12 and
//! kNonFinite for NaN/Inf input.
EmbeddingSet l2_normalize_rows(const HiddenSet& hidden);
EmbeddingSet l2_normalize_rows(std::string id, std::size_t rows, std::size_t dim,
                               std::span<const float> values, Mask mask = {});

//! e_t = W h_t / ||W h_t||, accumulated in double.
EmbeddingSet project(const HiddenSet& hidden, const ProjectionHead& head);

//! Keeps the first min(length, max_len) positions.
std::string truncate(std::string_view sequence, std::size_t max_len = kMaxResidues);
HiddenSet truncate(const HiddenSet& set, std::size_t max_len = kMaxResidues);
EmbeddingSet truncate(const EmbeddingSet& set, std::size_t max_len = kMaxResidues);

}  // namespace lateprot
