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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"

namespace mcbm {

/// Replaces the first k coordinates with hard 0/1 ground truth; later
/// coordinates are left untouched. Inputs are already in ranking order.
std::vector<double> intervene_prefix(std::span<const double> probs_ordered,
                                     std::span<const std::uint8_t> truth_ordered, int k);

enum class HeadPolicy { matched, full_head };

const char* head_policy_name(HeadPolicy policy);

struct CurvePoint {
  int k = 0;
  double accuracy = 0.0;
};

/// Per-sample record of the intervention simulation.
struct InterventionTrace {
  std::size_t sample_id = 0;
  HeadPolicy head_policy = HeadPolicy::matched;
  int base_prediction = 0;
  std::map<int, int> per_k_predictions;
  int minimal_sufficient_level = kNever;  ///< 1-based schedule level, or kNever

  static constexpr int kNever = -1;
};

struct TraceRow {
  std::size_t sample_id = 0;
  HeadPolicy policy = HeadPolicy::matched;
  int k = 0;
  int prediction = 0;
  bool correct = false;
};

std::string traces_to_csv(std::span<const TraceRow> rows);
void save_traces_csv(std::span<const TraceRow> rows, const std::string& path);

std::string curve_to_csv(std::span<const CurvePoint> curve, HeadPolicy policy,
                         const std::string& ordering);
void save_curve_csv(std::span<const CurvePoint> curve, HeadPolicy policy,
                    const std::string& ordering, const std::string& path);

/// Accuracy after correcting the top-k concepts of `ranking_order`. Matched
/// policy predicts with the level-k head (k must be a schedule level in
/// standard mode); full_head always uses the widest head. k = 0 evaluates the
/// widest head without intervention.
std::vector<CurvePoint> accuracy_at_k(const MatryoshkaModel& model, const Dataset& dataset,
                                      std::span<const int> ranking_order,
                                      std::span<const int> k_grid, HeadPolicy policy,
                                      std::vector<TraceRow>* traces = nullptr);

struct LevelHistogram {
  std::vector<int> schedule;        ///< prefix widths defining the levels
  std::vector<std::int64_t> counts; ///< per level, same length as schedule
  std::int64_t never = 0;           ///< samples no level corrects
  std::int64_t evaluated = 0;
  bool empty_warning = false;       ///< no sample qualified for evaluation
};

/// Generic lazy-verification driver. `base_probs(i)` supplies the uncorrected
/// ordered concept vector of sample i; `predict(vec, d)` returns the class
/// decided from an intervened vector at prefix width d.
LevelHistogram minimal_sufficient_levels_generic(
    const std::function<std::vector<double>(std::size_t)>& base_probs,
    const std::function<int(std::span<const double>, int)>& predict, const Dataset& dataset,
    std::span<const int> ranking_order, std::span<const int> schedule, bool misclassified_only,
    std::vector<InterventionTrace>* traces = nullptr);

/// Smallest schedule level whose cumulative-prefix intervention fixes each
/// sample, using matched heads. By default only initially misclassified
/// samples are simulated.
LevelHistogram minimal_sufficient_levels(const MatryoshkaModel& model, const Dataset& dataset,
                                         std::span<const int> ranking_order,
                                         bool misclassified_only = true,
                                         std::vector<InterventionTrace>* traces = nullptr);

std::string histogram_to_csv(const LevelHistogram& histogram);
void save_histogram_csv(const LevelHistogram& histogram, const std::string& path);
LevelHistogram load_histogram_csv(const std::string& path);

struct DecayFit {
  double gamma_hat = 0.0;
  double r_squared = 0.0;
  double c_hat = 0.0;  ///< fitted count at level 1
  int levels_used = 0;
};

/// Least-squares fit of log counts against the level index; slope = ln gamma.
/// Levels with zero count are skipped; at least two non-empty levels needed.
DecayFit fit_geometric_decay(std::span<const double> counts);

/// E = sum_i cost_i * P(level = i), with the never bucket charged the last
/// (largest) level cost.
double expected_cost(std::span<const double> counts, double never_count,
                     std::span<const double> level_costs);

}  // namespace mcbm
