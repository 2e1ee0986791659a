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

#include "lateprot/minhash.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "binary_io.hpp"
#include "lateprot/error.hpp"

namespace lateprot {
namespace {

constexpr std::string_view kSignatureMagic = "PCM1";

std::uint64_t fold61(std::uint64_t x) {
  x = (x & kMersenne61) + (x >> 61);
  return x >= kMersenne61 ? x - kMersenne61 : x;
}

// (a * x + b) mod 2^61-1 for a, x, b < 2^61.
std::uint64_t mul_add_mod61(std::uint64_t a, std::uint64_t x, std::uint64_t b) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * x + b;
  const std::uint64_t lo = static_cast<std::uint64_t>(p) & kMersenne61;
  const std::uint64_t hi = static_cast<std::uint64_t>(p >> 61);
  return fold61(lo + hi);
}

void check_length(std::string_view sequence, std::size_t k) {
  if (k == 0) fail(ErrorCode::kInvalidArgument, "k-mer length must be >= 1");
  if (sequence.size() < k) {
    fail(ErrorCode::kTooShort, "sequence of length " + std::to_string(sequence.size()) +
                                   " has no " + std::to_string(k) + "-mers");
  }
}

}  // namespace

std::set<std::string> kmer_set(std::string_view sequence, std::size_t k) {
  check_length(sequence, k);
  std::set<std::string> out;
  for (std::size_t i = 0; i + k <= sequence.size(); ++i) out.emplace(sequence.substr(i, k));
  return out;
}

std::uint64_t kmer_hash(std::string_view kmer) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : kmer) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

MinHashScheme::MinHashScheme(std::uint64_t seed, std::size_t num_perm, std::size_t k)
    : seed_(seed), k_(k), a_(num_perm), b_(num_perm) {
  if (num_perm == 0) fail(ErrorCode::kInvalidArgument, "MinHash needs at least one permutation");
  if (k == 0) fail(ErrorCode::kInvalidArgument, "k-mer length must be >= 1");
  std::mt19937_64 rng(seed);
  for (std::size_t p = 0; p < num_perm; ++p) {
    std::uint64_t a = 0;
    do {
      a = (rng() % (kMersenne61 - 1) + 1) | 1u;
    } while (a >= kMersenne61);
    a_[p] = a;
    b_[p] = rng() % kMersenne61;
  }
}

MinHashSignature MinHashScheme::sign(std::string_view sequence) const {
  check_length(sequence, k_);
  std::vector<std::uint64_t> values;
  values.reserve(sequence.size() - k_ + 1);
  for (std::size_t i = 0; i + k_ <= sequence.size(); ++i) {
    values.push_back(fold61(kmer_hash(sequence.substr(i, k_))));
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  MinHashSignature sig;
  sig.k = static_cast<std::uint32_t>(k_);
  sig.scheme_seed = seed_;
  sig.mins.assign(a_.size(), std::numeric_limits<std::uint64_t>::max());
  for (std::size_t p = 0; p < a_.size(); ++p) {
    std::uint64_t m = sig.mins[p];
    for (std::uint64_t v : values) m = std::min(m, mul_add_mod61(a_[p], v, b_[p]));
    sig.mins[p] = m;
  }
  return sig;
}

MinHashSignature minhash_signature(std::string_view sequence, std::size_t k, std::size_t num_perm,
                                   std::uint64_t seed) {
  return MinHashScheme(seed, num_perm, k).sign(sequence);
}

float minhash_similarity(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.k != b.k || a.num_perm() != b.num_perm() || a.scheme_seed != b.scheme_seed) {
    fail(ErrorCode::kSchemeMismatch, "signatures come from different MinHash schemes");
  }
  if (a.num_perm() == 0) fail(ErrorCode::kInvalidArgument, "empty MinHash signature");
  std::size_t equal = 0;
  for (std::size_t p = 0; p < a.num_perm(); ++p) equal += a.mins[p] == b.mins[p];
  return static_cast<float>(static_cast<double>(equal) / static_cast<double>(a.num_perm()));
}

double exact_jaccard(std::string_view a, std::string_view b, std::size_t k) {
  const auto sa = kmer_set(a, k);
  const auto sb = kmer_set(b, k);
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

void write_signature_file(const std::string& path, const std::vector<NamedSignature>& signatures) {
  std::uint32_t num_perm = kMinHashPermutations;
  std::uint32_t k = kKmerLength;
  std::uint64_t seed = 0;
  if (!signatures.empty()) {
    const auto& first = signatures.front().signature;
    num_perm = static_cast<std::uint32_t>(first.num_perm());
    k = first.k;
    seed = first.scheme_seed;
  }
  for (const auto& s : signatures) {
    if (s.signature.num_perm() != num_perm || s.signature.k != k || s.signature.scheme_seed != seed) {
      fail(ErrorCode::kSchemeMismatch, "signature file entries must share one scheme ('" + s.id + "')");
    }
  }
  binary::Writer w(path);
  w.magic(kSignatureMagic);
  w.scalar<std::uint32_t>(num_perm);
  w.scalar<std::uint32_t>(k);
  w.scalar<std::uint64_t>(seed);
  for (const auto& s : signatures) {
    w.id(s.id);
    w.array<std::uint64_t>(s.signature.mins);
  }
  w.close();
}

std::vector<NamedSignature> read_signature_file(const std::string& path) {
  binary::Reader r(path);
  r.expect_magic(kSignatureMagic);
  const auto num_perm = r.scalar<std::uint32_t>();
  const auto k = r.scalar<std::uint32_t>();
  const auto seed = r.scalar<std::uint64_t>();
  if (num_perm == 0 || k == 0) fail(ErrorCode::kParseError, "'" + path + "' declares an empty scheme");
  std::vector<NamedSignature> out;
  std::set<std::string> seen;
  while (!r.at_end()) {
    NamedSignature s;
    s.id = r.id();
    if (!seen.insert(s.id).second) fail(ErrorCode::kDuplicateId, "'" + path + "' repeats id '" + s.id + "'");
    s.signature.k = k;
    s.signature.scheme_seed = seed;
    s.signature.mins = r.array<std::uint64_t>(num_perm);
    out.push_back(std::move(s));
  }
  return out;
}

MinHashScorer::MinHashScorer(std::vector<NamedSignature> signatures) : sigs_(std::move(signatures)) {
  for (const auto& s : sigs_) {
    const auto& f = sigs_.front().signature;
    if (s.signature.k != f.k || s.signature.num_perm() != f.num_perm() ||
        s.signature.scheme_seed != f.scheme_seed) {
      fail(ErrorCode::kSchemeMismatch, "MinHashScorer: '" + s.id + "' uses a different scheme");
    }
  }
}

float MinHashScorer::score(std::size_t query, std::size_t candidate) const {
  return minhash_similarity(sigs_[query].signature, sigs_[candidate].signature);
}

}  // namespace lateprot
