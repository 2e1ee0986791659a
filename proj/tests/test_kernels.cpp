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

#include <random>
#include <vector>

#include "doctest.h"
#include "lateprot/kernels.hpp"

using namespace lateprot::kernels;

namespace {

double naive_dot(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += double(a[i]) * b[i];
  return s;
}

std::vector<float> rand_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels agree with a naive dot product") {
  std::mt19937_64 rng(1);
  const auto& k = table(Isa::kScalar);
  for (std::size_t n = 1; n <= 70; ++n) {
    auto a = rand_vec(rng, n), b = rand_vec(rng, n);
    CHECK(k.dot_f32(a.data(), b.data(), n) == doctest::Approx(naive_dot(a.data(), b.data(), n)).epsilon(1e-5));
  }
}

TEST_CASE("every available ISA matches the scalar table across dims 1..257") {
  if (!available(Isa::kAvx2)) {
    MESSAGE("AVX2 kernels unavailable; comparing scalar with itself only");
  }
  std::mt19937_64 rng(2);
  const auto& ref = table(Isa::kScalar);
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    if (!available(isa)) continue;
    const auto& k = table(isa);
    CAPTURE(to_string(isa));
    for (std::size_t dim = 1; dim <= 257; ++dim) {
      CAPTURE(dim);
      auto a = rand_vec(rng, dim), b = rand_vec(rng, dim);
      const double expect = naive_dot(a.data(), b.data(), dim);
      CHECK(std::abs(k.dot_f32(a.data(), b.data(), dim) - expect) <= 1e-5 * (1 + std::abs(expect)));

      std::vector<double> ad(a.begin(), a.end()), bd(b.begin(), b.end());
      CHECK(k.dot_f64(ad.data(), bd.data(), dim) == doctest::Approx(ref.dot_f64(ad.data(), bd.data(), dim)).epsilon(1e-12));

      const std::size_t rows = 1 + dim % 9;
      auto m = rand_vec(rng, rows * dim);
      std::vector<std::uint8_t> mask(rows, 1);
      if (rows > 2) mask[1] = 0;
      std::size_t arg = 0, ref_arg = 0;
      const float got = k.max_dot_f32(a.data(), m.data(), rows, dim, mask.data(), &arg);
      const float want = ref.max_dot_f32(a.data(), m.data(), rows, dim, mask.data(), &ref_arg);
      CHECK(got == doctest::Approx(want).epsilon(1e-5));
      CHECK(mask[arg] == 1);
      std::vector<double> md(m.begin(), m.end());
      const double gd = k.max_dot_f64(ad.data(), md.data(), rows, dim, mask.data(), &arg);
      const double wd = ref.max_dot_f64(ad.data(), md.data(), rows, dim, mask.data(), &ref_arg);
      CHECK(gd == doctest::Approx(wd).epsilon(1e-12));
      CHECK(arg == ref_arg);
    }
  }
}

TEST_CASE("max_dot ties resolve to the lowest row and all-masked gives kNoRow") {
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    if (!available(isa)) continue;
    const auto& k = table(isa);
    const float q[2] = {1.0f, 0.0f};
    const float rows[6] = {0.0f, 1.0f, 1.0f, 0.0f, 1.0f, 0.0f};
    const std::uint8_t all[3] = {1, 1, 1};
    std::size_t arg = 99;
    CHECK(k.max_dot_f32(q, rows, 3, 2, all, &arg) == 1.0f);
    CHECK(arg == 1);
    const std::uint8_t none[3] = {0, 0, 0};
    k.max_dot_f32(q, rows, 3, 2, none, &arg);
    CHECK(arg == kNoRow);
  }
}

TEST_CASE("pairwise_sum equals the exact sum for integers and is close for random data") {
  std::vector<double> ints(1000);
  for (std::size_t i = 0; i < ints.size(); ++i) ints[i] = double(i + 1);
  CHECK(pairwise_sum(std::span<const double>(ints)) == 500500.0);
  std::vector<float> f(777, 0.1f);
  CHECK(pairwise_sum(std::span<const float>(f)) == doctest::Approx(77.7).epsilon(1e-6));
  CHECK(pairwise_sum(std::span<const float>()) == 0.0f);
}

TEST_CASE("set_active switches the dispatch table") {
  const Isa before = active().isa;
  set_active(Isa::kScalar);
  CHECK(active().isa == Isa::kScalar);
  set_active(before);
  CHECK(active().isa == before);
  if (!available(Isa::kAvx2)) CHECK_THROWS(table(Isa::kAvx2));
}
