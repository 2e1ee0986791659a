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

// Inner-product kernels behind every scorer and the trainer. The scalar
// table is the reference; the AVX2 table is used when the CPU supports it.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace lateprot::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

inline constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

struct KernelTable {
  Isa isa;
  float (*dot_f32)(const float* a, const float* b, std::size_t n);
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  //! Largest <q, rows[j]> over rows with mask[j] != 0 (all rows when mask is
  //! null). Ties go to the lowest j. Writes j to *argmax (kNoRow if no row is
  //! valid) and returns -inf in that case.
  float (*max_dot_f32)(const float* q, const float* rows, std::size_t n_rows,
                       std::size_t dim, const std::uint8_t* mask, std::size_t* argmax);
  double (*max_dot_f64)(const double* q, const double* rows, std::size_t n_rows,
                        std::size_t dim, const std::uint8_t* mask, std::size_t* argmax);
};

bool available(Isa isa);
Isa best_available();

//! Throws kInvalidArgument when `isa` is not supported by this build/CPU.
const KernelTable& table(Isa isa);

//! Process-wide selection; starts at best_available().
const KernelTable& active();
void set_active(Isa isa);

//! Tree (pairwise) summation; error grows with log n rather than n.
float pairwise_sum(std::span<const float> values);
double pairwise_sum(std::span<const double> values);

namespace detail {
const KernelTable& scalar_table();
#if defined(LATEPROT_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace lateprot::kernels
