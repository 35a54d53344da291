/*
 *   Copyright 2026 MCBM Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "rng.hpp"

using mcbm::CounterRng;

TEST_CASE("same seed replays the same sequence") {
  CounterRng a(42, 1);
  CounterRng b(42, 1);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("streams and seeds decorrelate") {
  CounterRng a(42, 1);
  CounterRng b(42, 2);
  CounterRng c(43, 1);
  int equal_ab = 0;
  int equal_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    equal_ab += va == b.next_u64();
    equal_ac += va == c.next_u64();
  }
  CHECK(equal_ab == 0);
  CHECK(equal_ac == 0);
}

TEST_CASE("substreams do not advance the parent") {
  CounterRng parent(7);
  auto child = parent.substream(3);
  const auto child_first = child.next_u64();
  CounterRng parent_copy(7);
  CHECK(parent.next_u64() == parent_copy.next_u64());
  CHECK(parent.substream(3).next_u64() == child_first);
}

TEST_CASE("next_below stays in range and covers small supports") {
  CounterRng rng(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 400; ++i) {
    const auto v = rng.next_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("doubles live in [0,1) and gaussians have sane moments") {
  CounterRng rng(11);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double g = rng.next_gaussian();
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.05);
}

TEST_CASE("categorical sampling follows the weights") {
  CounterRng rng(13);
  std::vector<double> weights{4.0, 2.0, 1.0};
  std::vector<int> counts(3, 0);
  const int n = 14000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.sample(weights))];
  CHECK(std::abs(counts[0] / static_cast<double>(n) - 4.0 / 7.0) < 0.02);
  CHECK(std::abs(counts[1] / static_cast<double>(n) - 2.0 / 7.0) < 0.02);
  CHECK(std::abs(counts[2] / static_cast<double>(n) - 1.0 / 7.0) < 0.02);
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  CounterRng rng(3);
  rng.shuffle(v);
  std::vector<int> w(20);
  std::iota(w.begin(), w.end(), 0);
  CounterRng rng2(3);
  rng2.shuffle(w);
  CHECK(v == w);
  std::sort(w.begin(), w.end());
  for (int i = 0; i < 20; ++i) CHECK(w[static_cast<std::size_t>(i)] == i);
}
