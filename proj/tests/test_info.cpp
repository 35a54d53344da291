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
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "info.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "textio.hpp"

using namespace mcbm;

namespace {

Dataset table_dataset(const std::vector<std::vector<int>>& columns, std::vector<int> labels,
                      int classes) {
  Dataset ds;
  ds.class_count = classes;
  ds.labels = std::move(labels);
  const std::size_t n = ds.labels.size();
  for (std::size_t j = 0; j < columns.size(); ++j) ds.concept_names.push_back("c" + std::to_string(j));
  ds.concepts.resize(n * columns.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      ds.concepts[i * columns.size() + j] = static_cast<std::uint8_t>(columns[j][i]);
    }
  }
  ds.feature_dim = 0;
  ds.validate();
  return ds;
}

}  // namespace

TEST_CASE("self MI of a fair coin is ln 2") {
  std::vector<int> series;
  for (int i = 0; i < 500; ++i) {
    series.push_back(0);
    series.push_back(1);
  }
  const auto estimate = mutual_information(series, series);
  CHECK(estimate.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(estimate.support_x == 2);
}

TEST_CASE("independent-by-construction pairs have zero MI") {
  std::vector<int> x;
  std::vector<int> y;
  for (int i = 0; i < 1000; ++i) {
    x.push_back(i % 2);
    y.push_back(0);
  }
  CHECK(mutual_information(x, y).value == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("near-balanced binary attribute scores like the reference table") {
  // prevalence 0.5125 reproduces the published 0.6928-nat self relevance
  std::vector<int> series;
  const int n = 8000;
  const int ones = 4100;
  for (int i = 0; i < n; ++i) series.push_back(i < ones ? 1 : 0);
  CHECK(mutual_information(series, series).value == doctest::Approx(0.6928).epsilon(2e-4));
}

TEST_CASE("MI rejects mismatched lengths") {
  std::vector<int> x{0, 1};
  std::vector<int> y{0};
  CHECK_THROWS_AS(mutual_information(x, y), Error);
}

TEST_CASE("MI is symmetric on random discrete pairs") {
  CounterRng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 50 + rng.next_below(200);
    std::vector<int> x(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<int>(rng.next_below(2 + rng.next_below(4)));
      y[i] = static_cast<int>(rng.next_below(2 + rng.next_below(4)));
    }
    CHECK(std::abs(mutual_information(x, y).value - mutual_information(y, x).value) < 1e-12);
  }
}

TEST_CASE("deterministic coarsening cannot raise MI") {
  CounterRng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 200;
    std::vector<int> x(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<int>(rng.next_below(6));
      y[i] = (x[i] + static_cast<int>(rng.next_below(3))) % 4;
    }
    int map[6];
    for (int& v : map) v = static_cast<int>(rng.next_below(3));
    std::vector<int> coarse(n);
    for (std::size_t i = 0; i < n; ++i) coarse[i] = map[x[i]];
    CHECK(mutual_information(coarse, y).value <= mutual_information(x, y).value + 1e-9);
  }
}

TEST_CASE("relevance vector matches per-column MI and handles degenerate columns") {
  std::vector<std::vector<int>> columns{{0, 1, 0, 1}, {0, 0, 0, 0}};
  auto ds = table_dataset(columns, {0, 1, 0, 1}, 2);
  auto relevance = relevance_vector(ds);
  CHECK(relevance[0] == doctest::Approx(std::log(2.0)));
  CHECK(relevance[1] == 0.0);
}

TEST_CASE("relevance ordering matches the independent MI oracle") {
  CounterRng rng(33);
  const std::size_t n = 400;
  std::vector<int> labels(n);
  std::vector<std::vector<int>> columns(3, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(rng.next_below(2));
    columns[0][i] = labels[i];  // fully informative
    columns[1][i] = rng.next_double() < 0.8 ? labels[i] : 1 - labels[i];  // noisy copy
    columns[2][i] = static_cast<int>(rng.next_below(2));  // noise
  }
  auto ds = table_dataset(columns, labels, 2);
  auto relevance = relevance_vector(ds);
  CHECK(relevance[0] > relevance[1]);
  CHECK(relevance[1] > relevance[2]);
  for (int j = 0; j < 3; ++j) {
    CHECK(relevance[static_cast<std::size_t>(j)] ==
          doctest::Approx(oracle::mutual_information(columns[static_cast<std::size_t>(j)], labels)));
  }
}

TEST_CASE("first selected concept maximizes relevance with zero redundancy") {
  CounterRng rng(34);
  const std::size_t n = 300;
  std::vector<int> labels(n);
  std::vector<std::vector<int>> columns(5, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(rng.next_below(3));
    for (auto& column : columns) column[i] = static_cast<int>(rng.next_below(2));
    columns[2][i] = labels[i] % 2;
  }
  auto ds = table_dataset(columns, labels, 3);
  auto ranking = mrmr_rank(ds);
  auto relevance = relevance_vector(ds);
  CHECK(ranking.steps[0].redundancy == 0.0);
  CHECK(ranking.steps[0].score == ranking.steps[0].relevance);
  const int first = ranking.order[0];
  for (std::size_t j = 0; j < columns.size(); ++j) {
    CHECK(relevance[static_cast<std::size_t>(first)] >= relevance[j]);
  }
}

TEST_CASE("duplicate columns are deferred by the redundancy term") {
  // A and its exact copy A' lead on relevance; B is weaker but novel.
  const std::size_t n = 600;
  CounterRng rng(35);
  std::vector<int> labels(n);
  std::vector<int> a(n);
  std::vector<int> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(rng.next_below(2));
    a[i] = rng.next_double() < 0.95 ? labels[i] : 1 - labels[i];
    b[i] = rng.next_double() < 0.75 ? labels[i] : 1 - labels[i];
  }
  auto ds = table_dataset({a, a, b}, labels, 2);
  auto ranking = mrmr_rank(ds);
  CHECK(ranking.order == std::vector<int>{0, 2, 1});
  // selecting the copy first is forbidden by the tie-break toward index 0
  CHECK(ranking.steps[2].redundancy > ranking.steps[1].redundancy);
}

TEST_CASE("greedy ordering equals the set-enumerating oracle on small tables") {
  CounterRng rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 60 + rng.next_below(100);
    const int k = 3 + static_cast<int>(rng.next_below(5));
    const int classes = 2 + static_cast<int>(rng.next_below(3));
    std::vector<int> labels(n);
    std::vector<std::vector<int>> columns(static_cast<std::size_t>(k), std::vector<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes)));
      for (int j = 0; j < k; ++j) {
        const double p = rng.next_double();
        columns[static_cast<std::size_t>(j)][i] =
            p < 0.4 ? labels[i] % 2 : static_cast<int>(rng.next_below(2));
      }
    }
    auto ds = table_dataset(columns, labels, classes);
    CHECK(mrmr_rank(ds).order == oracle::brute_mrmr(columns, labels));
  }
}

TEST_CASE("rankings are always permutations") {
  CounterRng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSpec spec;
    spec.samples = 120;
    spec.seed = rng.next_u64();
    spec.redundancy_copies = static_cast<int>(rng.next_below(2));
    auto generated = generate_synthetic(spec);
    auto ranking = mrmr_rank(generated.data);
    ranking.validate();  // throws on a broken permutation
    CHECK(ranking.size() == generated.data.concept_count());
  }
}

TEST_CASE("ranking csv mirrors the reference table layout") {
  std::vector<std::vector<int>> columns{{0, 1, 0, 1}, {1, 1, 0, 0}};
  auto ds = table_dataset(columns, {0, 1, 0, 1}, 2);
  auto ranking = mrmr_rank(ds);
  const std::string csv = ranking_to_csv(ranking);
  CHECK(csv.rfind("rank,concept_index,concept_name,score,relevance,redundancy\n", 0) == 0);
  CHECK(csv.find("1,0,c0,0.6931,0.6931,0.0000") != std::string::npos);

  const std::string path = "/tmp/mcbm_test_ranking.csv";
  save_ranking_csv(ranking, path);
  auto loaded = load_ranking_csv(path);
  CHECK(loaded.order == ranking.order);
  CHECK(loaded.names == ranking.names);
}

TEST_CASE("stability is exact without resampling and near-random expectation on noise") {
  SyntheticSpec spec;
  spec.samples = 500;
  spec.seed = 4;
  auto generated = generate_synthetic(spec);
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<int> prefixes{4, 8};

  auto iou = ranking_stability(generated.data, seeds, 1.0, prefixes);
  for (const auto& row : iou) {
    for (double value : row) CHECK(value == 1.0);
  }

  // Pure-noise concepts: overlap of top-k sets behaves like two random
  // k-subsets, whose exact expected IoU follows the hypergeometric law.
  const std::size_t n = 400;
  const int k_total = 16;
  CounterRng rng(38);
  std::vector<int> labels(n);
  std::vector<std::vector<int>> columns(static_cast<std::size_t>(k_total), std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(rng.next_below(2));
    for (auto& column : columns) column[i] = static_cast<int>(rng.next_below(2));
  }
  auto noise_ds = table_dataset(columns, labels, 2);
  std::vector<std::uint64_t> many_seeds(24);
  std::iota(many_seeds.begin(), many_seeds.end(), 100);
  std::vector<int> prefix{4};
  auto noise_iou = ranking_stability(noise_ds, many_seeds, 0.5, prefix);
  double mean = 0.0;
  for (const auto& row : noise_iou) mean += row[0] / static_cast<double>(noise_iou.size());
  const double expected = oracle::expected_random_iou(4, k_total);
  CHECK(std::abs(mean - expected) < 0.15);
}

TEST_CASE("stability rejects oversized prefixes") {
  SyntheticSpec spec;
  spec.samples = 60;
  auto generated = generate_synthetic(spec);
  std::vector<std::uint64_t> seeds{1};
  std::vector<int> prefixes{99};
  CHECK_THROWS_AS(ranking_stability(generated.data, seeds, 0.8, prefixes), Error);
}

TEST_CASE("strongly informative data keeps top prefixes stable under resampling") {
  SyntheticSpec spec;
  spec.levels = 2;
  spec.base_size = 8;       // K = 8 + 16
  spec.samples = 3000;
  spec.decay_rate = 0.4;
  spec.classes = 4;
  spec.seed = 11;
  auto generated = generate_synthetic(spec);
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<int> prefixes{8, 16};
  auto iou = ranking_stability(generated.data, seeds, 0.8, prefixes);
  for (const auto& row : iou) {
    for (double value : row) CHECK(value == 1.0);
  }
}

TEST_CASE("rank correlation on the documented examples") {
  std::vector<int> identity{0, 1, 2, 3};
  auto self = rank_correlation(identity, identity);
  CHECK(self.spearman == doctest::Approx(1.0));
  CHECK(self.kendall == doctest::Approx(1.0));

  std::vector<int> reversed{3, 2, 1, 0};
  auto anti = rank_correlation(identity, reversed);
  CHECK(anti.spearman == doctest::Approx(-1.0));
  CHECK(anti.kendall == doctest::Approx(-1.0));

  std::vector<int> swapped{0, 2, 1, 3};
  auto mid = rank_correlation(identity, swapped);
  CHECK(mid.spearman == doctest::Approx(0.8));
  CHECK(mid.kendall == doctest::Approx(2.0 / 3.0));

  std::vector<int> shorter{0, 1, 2};
  CHECK_THROWS_AS(rank_correlation(identity, shorter), Error);
}

TEST_CASE("top-k prefix scores dominate random subsets on redundant data") {
  SyntheticSpec spec;
  spec.levels = 2;
  spec.base_size = 4;
  spec.samples = 800;
  spec.redundancy_copies = 1;
  spec.seed = 12;
  auto generated = generate_synthetic(spec);
  const int k_total = generated.data.concept_count();
  auto ranking = mrmr_rank(generated.data);

  // The greedy prefix score: sum of the recorded per-step scores.
  const int k = 4;
  double prefix_score = 0.0;
  for (int t = 0; t < k; ++t) prefix_score += ranking.steps[static_cast<std::size_t>(t)].score;

  // Any random k-subset, scored by the same greedy-restricted rule.
  auto subset_score = [&generated](std::vector<int> subset) {
    Dataset sub = generated.data.select_concepts(subset);
    auto restricted = mrmr_rank(sub);
    double total = 0.0;
    for (const auto& step : restricted.steps) total += step.score;
    return total;
  };

  CounterRng rng(39);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> all(static_cast<std::size_t>(k_total));
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    all.resize(k);
    std::sort(all.begin(), all.end());
    CHECK(subset_score(all) <= prefix_score + 1e-9);
  }
}
