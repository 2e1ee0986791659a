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

// Synthetic group-labeled proteins for tests, benchmarks and demos.
//
// Every group owns `motif_rows` hidden vectors that each member carries, with
// small perturbations, at a random offset amid random background rows. All
// rows also carry large random coefficients along a few shared directions,
// which swamp raw cosines until a projection learns to suppress them.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lateprot/core_types.hpp"

namespace lateprot {

struct SyntheticConfig {
  std::size_t n_groups = 40;
  std::size_t per_group = 20;
  std::size_t hidden_dim = 32;
  std::size_t motif_rows = 8;
  std::size_t min_len = 16;
  std::size_t max_len = 32;
  double motif_noise = 0.3;
  std::size_t shared_dirs = 2;
  double shared_scale = 8.0;
  std::uint64_t seed = 0;
};

struct SyntheticProtein {
  ProteinRecord record;
  HiddenSet hidden;
};

//! Ids are "g<group>_p<member>"; groups are "grp<group>". Sequences carry a
//! mutated group motif at the same offset as the hidden motif rows.
std::vector<SyntheticProtein> make_synthetic_database(const SyntheticConfig& cfg);

}  // namespace lateprot
