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

#include "lateprot/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "lateprot/error.hpp"

namespace lateprot {
namespace {

// Box-Muller over raw engine output, so data is identical across standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Gram-Schmidt on Gaussian draws.
std::vector<std::vector<double>> orthonormal_dirs(std::size_t n, std::size_t dim, Gaussian& g) {
  std::vector<std::vector<double>> dirs;
  while (dirs.size() < n) {
    std::vector<double> v(dim);
    for (auto& x : v) x = g();
    for (const auto& d : dirs) {
      double p = 0.0;
      for (std::size_t k = 0; k < dim; ++k) p += v[k] * d[k];
      for (std::size_t k = 0; k < dim; ++k) v[k] -= p * d[k];
    }
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq < 1e-12) continue;
    for (auto& x : v) x /= std::sqrt(sq);
    dirs.push_back(std::move(v));
  }
  return dirs;
}

}  // namespace

std::vector<SyntheticProtein> make_synthetic_database(const SyntheticConfig& cfg) {
  if (cfg.n_groups == 0 || cfg.per_group == 0 || cfg.hidden_dim == 0) {
    fail(ErrorCode::kInvalidArgument, "synthetic database needs groups, members and a hidden dim");
  }
  if (cfg.min_len < cfg.motif_rows || cfg.max_len < cfg.min_len || cfg.motif_rows == 0) {
    fail(ErrorCode::kInvalidArgument, "synthetic lengths must satisfy motif_rows <= min_len <= max_len");
  }
  if (cfg.shared_dirs > cfg.hidden_dim) fail(ErrorCode::kInvalidArgument, "more shared directions than dims");

  Gaussian g(cfg.seed);
  const std::size_t h = cfg.hidden_dim;
  const auto shared = orthonormal_dirs(cfg.shared_dirs, h, g);
  constexpr std::string_view alphabet = "ACDEFGHIKLMNPQRSTVWY";

  std::vector<SyntheticProtein> out;
  out.reserve(cfg.n_groups * cfg.per_group);
  for (std::size_t grp = 0; grp < cfg.n_groups; ++grp) {
    std::vector<double> motif(cfg.motif_rows * h);
    for (auto& x : motif) x = g();
    std::string motif_seq(cfg.motif_rows, 'A');
    for (auto& c : motif_seq) c = alphabet[g.below(alphabet.size())];

    for (std::size_t m = 0; m < cfg.per_group; ++m) {
      const std::size_t len = cfg.min_len + g.below(cfg.max_len - cfg.min_len + 1);
      const std::size_t offset = g.below(len - cfg.motif_rows + 1);
      std::vector<float> values(len * h);
      std::string seq(len, 'A');
      for (std::size_t t = 0; t < len; ++t) {
        const bool in_motif = t >= offset && t < offset + cfg.motif_rows;
        std::vector<double> row(h);
        for (std::size_t k = 0; k < h; ++k) {
          row[k] = in_motif ? motif[(t - offset) * h + k] + cfg.motif_noise * g() : g();
        }
        for (const auto& d : shared) {
          const double a = cfg.shared_scale * g();
          for (std::size_t k = 0; k < h; ++k) row[k] += a * d[k];
        }
        for (std::size_t k = 0; k < h; ++k) values[t * h + k] = static_cast<float>(row[k]);
        // One in ten motif residues mutates.
        seq[t] = in_motif && g.below(10) != 0 ? motif_seq[t - offset] : alphabet[g.below(alphabet.size())];
      }
      char id[64];
      std::snprintf(id, sizeof(id), "g%03zu_p%03zu", grp, m);
      char group[32];
      std::snprintf(group, sizeof(group), "grp%03zu", grp);
      out.push_back({ProteinRecord{id, seq, group}, HiddenSet(id, len, h, std::move(values))});
    }
  }
  return out;
}

}  // namespace lateprot
