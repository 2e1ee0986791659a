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

// MinHash sketches of amino-acid k-mer sets, with an exact Jaccard oracle.

#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lateprot/scorer.hpp"

namespace lateprot {

inline constexpr std::size_t kMinHashPermutations = 256;
inline constexpr std::size_t kKmerLength = 5;
//! 2^61 - 1; the hash family works in this prime field.
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

//! All distinct substrings of length k. Throws kTooShort when len < k.
std::set<std::string> kmer_set(std::string_view sequence, std::size_t k = kKmerLength);

//! Fixed 64-bit hash of the k-mer bytes (FNV-1a with a splitmix64 finish).
std::uint64_t kmer_hash(std::string_view kmer);

struct MinHashSignature {
  std::vector<std::uint64_t> mins;
  std::uint32_t k = kKmerLength;
  std::uint64_t scheme_seed = 0;

  std::size_t num_perm() const { return mins.size(); }
  bool operator==(const MinHashSignature&) const = default;
};

//! h_p(x) = (a_p * x + b_p) mod (2^61 - 1) with odd a_p, both drawn from the
//! seed. Immutable once built; safe to share across threads.
class MinHashScheme {
 public:
  explicit MinHashScheme(std::uint64_t seed, std::size_t num_perm = kMinHashPermutations,
                         std::size_t k = kKmerLength);

  MinHashSignature sign(std::string_view sequence) const;

  std::uint64_t seed() const { return seed_; }
  std::size_t num_perm() const { return a_.size(); }
  std::size_t k() const { return k_; }

 private:
  std::uint64_t seed_;
  std::size_t k_;
  std::vector<std::uint64_t> a_;
  std::vector<std::uint64_t> b_;
};

MinHashSignature minhash_signature(std::string_view sequence, std::size_t k = kKmerLength,
                                   std::size_t num_perm = kMinHashPermutations,
                                   std::uint64_t seed = 0);

//! Fraction of positions with equal minima. Throws kSchemeMismatch unless
//! k, num_perm and seed agree.
float minhash_similarity(const MinHashSignature& a, const MinHashSignature& b);

//! |A ∩ B| / |A ∪ B| over the two k-mer sets.
double exact_jaccard(std::string_view a, std::string_view b, std::size_t k = kKmerLength);

struct NamedSignature {
  std::string id;
  MinHashSignature signature;
};

//! "PCM1", u32 num_perm, u32 k, u64 seed, then per protein: u16 id length,
//! id bytes, num_perm u64 minima. Little-endian; records run to end of file.
void write_signature_file(const std::string& path, const std::vector<NamedSignature>& signatures);
std::vector<NamedSignature> read_signature_file(const std::string& path);

class MinHashScorer final : public CandidateScorer {
 public:
  explicit MinHashScorer(std::vector<NamedSignature> signatures);

  std::size_t size() const override { return sigs_.size(); }
  const std::string& id(std::size_t index) const override { return sigs_[index].id; }
  float score(std::size_t query, std::size_t candidate) const override;

 private:
  std::vector<NamedSignature> sigs_;
};

}  // namespace lateprot
