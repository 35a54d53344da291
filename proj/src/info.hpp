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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace mcbm {

/// Plug-in mutual information of two discrete series, in nats.
struct MiEstimate {
  double value = 0.0;
  int support_x = 0;
  int support_y = 0;
};

MiEstimate mutual_information(std::span<const int> x, std::span<const int> y);

/// Per-concept mutual information with the labels.
std::vector<double> relevance_vector(const Dataset& dataset);

struct RankStep {
  int concept_index = 0;
  double relevance = 0.0;
  double redundancy = 0.0;  ///< mean pairwise MI to the already selected set
  double score = 0.0;       ///< relevance - redundancy at selection time
};

/// Greedy relevance-minus-redundancy ordering. `order[t]` is the concept
/// selected at step t; ties break toward the lowest original index.
struct ConceptRanking {
  std::vector<int> order;
  std::vector<RankStep> steps;
  std::vector<std::string> names;  ///< snapshot of the dataset's concept names

  int size() const { return static_cast<int>(order.size()); }
  void validate() const;

  /// positions[concept] = rank of that concept.
  std::vector<int> positions() const;
};

ConceptRanking mrmr_rank(const Dataset& dataset);

/// Identity ordering with per-step bookkeeping filled from the data; useful
/// as a baseline ranking and for datasets ordered by construction.
ConceptRanking identity_ranking(const Dataset& dataset);

/// Ranking with the given order; relevance/redundancy recomputed from data.
ConceptRanking ranking_from_order(const Dataset& dataset, std::span<const int> order);

void save_ranking_csv(const ConceptRanking& ranking, const std::string& path);
std::string ranking_to_csv(const ConceptRanking& ranking);
ConceptRanking load_ranking_csv(const std::string& path);

/// For each seed, reruns the ranking on a row resample (without replacement,
/// `resample_fraction` of the rows; 1.0 keeps the data as-is) and reports the
/// intersection-over-union of top-k sets against the full-data ranking.
/// Result is indexed [seed][prefix].
std::vector<std::vector<double>> ranking_stability(const Dataset& dataset,
                                                   std::span<const std::uint64_t> seeds,
                                                   double resample_fraction,
                                                   std::span<const int> prefix_sizes);

struct RankCorrelation {
  double spearman = 0.0;
  double kendall = 0.0;
};

/// Spearman and Kendall tau between two permutations of [0, K).
RankCorrelation rank_correlation(std::span<const int> order_a, std::span<const int> order_b);

}  // namespace mcbm
