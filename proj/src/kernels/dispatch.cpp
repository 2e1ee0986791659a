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

#include <atomic>

#include "lateprot/error.hpp"
#include "lateprot/kernels.hpp"

namespace lateprot::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(LATEPROT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(best_available())};
  return slot;
}

template <class T>
T tree_sum(const T* v, std::size_t n) {
  if (n <= 8) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return tree_sum(v, half) + tree_sum(v + half, n - half);
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2: {
      static const bool has = cpu_has_avx2();
      return has;
    }
  }
  return false;
}

Isa best_available() { return available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar; }

const KernelTable& table(Isa isa) {
  if (!available(isa)) {
    fail(ErrorCode::kInvalidArgument, "kernel ISA '" + std::string(to_string(isa)) + "' is not available");
  }
#if defined(LATEPROT_HAVE_AVX2)
  if (isa == Isa::kAvx2) return detail::avx2_table();
#endif
  return detail::scalar_table();
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_active(Isa isa) { active_slot().store(&table(isa), std::memory_order_release); }

float pairwise_sum(std::span<const float> values) { return tree_sum(values.data(), values.size()); }
double pairwise_sum(std::span<const double> values) { return tree_sum(values.data(), values.size()); }

}  // namespace lateprot::kernels
