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

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <limits>

#include "lateprot/kernels.hpp"

namespace lateprot::kernels::detail {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d high64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

// Lane masks for partial tails: entry r enables the first r lanes.
alignas(32) constexpr int kTailMask32[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
alignas(32) constexpr long long kTailMask64[8] = {-1, -1, -1, -1, 0, 0, 0, 0};

inline __m256i tail_mask_ps(std::size_t r) {
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kTailMask32 + 8 - r));
}
inline __m256i tail_mask_pd(std::size_t r) {
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kTailMask64 + 4 - r));
}

inline float dot_f32_impl(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  if (i + 8 <= n) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    i += 8;
  }
  if (i < n) {
    const __m256i m = tail_mask_ps(n - i);
    acc1 = _mm256_fmadd_ps(_mm256_maskload_ps(a + i, m), _mm256_maskload_ps(b + i, m), acc1);
  }
  return hsum(_mm256_add_ps(acc0, acc1));
}

inline double dot_f64_impl(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  if (i < n) {
    const __m256i m = tail_mask_pd(n - i);
    acc1 = _mm256_fmadd_pd(_mm256_maskload_pd(a + i, m), _mm256_maskload_pd(b + i, m), acc1);
  }
  return hsum(_mm256_add_pd(acc0, acc1));
}

float dot_f32(const float* a, const float* b, std::size_t n) { return dot_f32_impl(a, b, n); }
double dot_f64(const double* a, const double* b, std::size_t n) { return dot_f64_impl(a, b, n); }

template <class T, T (*Dot)(const T*, const T*, std::size_t)>
T max_dot(const T* q, const T* rows, std::size_t n_rows, std::size_t dim,
          const std::uint8_t* mask, std::size_t* argmax) {
  T best = -std::numeric_limits<T>::infinity();
  std::size_t best_j = kNoRow;
  for (std::size_t j = 0; j < n_rows; ++j) {
    if (mask && !mask[j]) continue;
    const T s = Dot(q, rows + j * dim, dim);
    if (best_j == kNoRow || s > best) {
      best = s;
      best_j = j;
    }
  }
  if (argmax) *argmax = best_j;
  return best;
}

float max_dot_f32(const float* q, const float* rows, std::size_t n_rows, std::size_t dim,
                  const std::uint8_t* mask, std::size_t* argmax) {
  return max_dot<float, dot_f32_impl>(q, rows, n_rows, dim, mask, argmax);
}
double max_dot_f64(const double* q, const double* rows, std::size_t n_rows, std::size_t dim,
                   const std::uint8_t* mask, std::size_t* argmax) {
  return max_dot<double, dot_f64_impl>(q, rows, n_rows, dim, mask, argmax);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::kAvx2, dot_f32, dot_f64, max_dot_f32, max_dot_f64};
  return table;
}

}  // namespace lateprot::kernels::detail
