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

#include <limits>

#include "lateprot/kernels.hpp"

namespace lateprot::kernels::detail {
namespace {

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class T>
T max_dot(const T* q, const T* rows, std::size_t n_rows, std::size_t dim,
          const std::uint8_t* mask, std::size_t* argmax) {
  T best = -std::numeric_limits<T>::infinity();
  std::size_t best_j = kNoRow;
  for (std::size_t j = 0; j < n_rows; ++j) {
    if (mask && !mask[j]) continue;
    const T s = dot(q, rows + j * dim, dim);
    if (best_j == kNoRow || s > best) {
      best = s;
      best_j = j;
    }
  }
  if (argmax) *argmax = best_j;
  return best;
}

float dot_f32(const float* a, const float* b, std::size_t n) { return dot(a, b, n); }
double dot_f64(const double* a, const double* b, std::size_t n) { return dot(a, b, n); }

float max_dot_f32(const float* q, const float* rows, std::size_t n_rows, std::size_t dim,
                  const std::uint8_t* mask, std::size_t* argmax) {
  return max_dot(q, rows, n_rows, dim, mask, argmax);
}
double max_dot_f64(const double* q, const double* rows, std::size_t n_rows, std::size_t dim,
                   const std::uint8_t* mask, std::size_t* argmax) {
  return max_dot(q, rows, n_rows, dim, mask, argmax);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, dot_f32, dot_f64, max_dot_f32, max_dot_f64};
  return table;
}

}  // namespace lateprot::kernels::detail
