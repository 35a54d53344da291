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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "info.hpp"
#include "model.hpp"

namespace mcbm {

enum class Regime { efficient, balanced, heavy_tailed };

const char* regime_name(Regime regime);

struct RegimeClassification {
  Regime regime = Regime::balanced;
  std::optional<double> alpha;  ///< 1 + log_r gamma, set in the heavy-tailed regime
};

/// efficient iff gamma < 1/r, balanced within 1e-12 of the boundary,
/// heavy-tailed otherwise.
RegimeClassification regime_classify(double growth_rate, double decay_rate);

struct RegimeParams {
  double growth_rate = 2.0;   ///< r > 1
  double decay_rate = 0.5;    ///< gamma in (0, 1)
  double base_size = 1.0;     ///< k1
  int levels = 1;             ///< L
  double norm_const = 1.0;    ///< C in P(level=i) <= C * gamma^(i-1)

  double spectral_ratio() const { return growth_rate * decay_rate; }
  void validate() const;
};

/// Closed form of C * k1 * sum_{i=1..L} (r*gamma)^(i-1).
double expected_cost_bound(const RegimeParams& params);

struct RegimeRow {
  int levels = 0;
  double concept_count = 0.0;  ///< total concepts across the level blocks
  double e_empirical = 0.0;
  double e_bound = 0.0;
  Regime regime = Regime::balanced;
};

struct RegimeTable {
  std::vector<RegimeRow> rows;
  double alpha_fit = 0.0;  ///< log-log slope of E against K
};

/// Draws stopping levels from the truncated normalized geometric law for each
/// L in the grid, reports empirical expected cost next to the closed-form
/// bound, and fits the scaling exponent.
RegimeTable simulate_regimes(double growth_rate, double decay_rate, int base_size,
                             std::span<const int> level_grid, std::int64_t samples,
                             std::uint64_t seed);

std::string regime_table_to_csv(const RegimeTable& table);
void save_regime_table_csv(const RegimeTable& table, const std::string& path);

/// Enumerable joint over (Y, C*) with per-coordinate prediction channels:
/// coordinate j of the predicted vector flips the true bit with probability
/// flip[j], independently. Intervening on the first k coordinates replaces
/// them by the true bits, which is exactly representable by skipping those
/// channels.
struct ChannelFamily {
  int classes = 0;
  int concept_count = 0;
  std::vector<double> joint;  ///< classes x 2^concept_count, [y * 2^K + bits]
  std::vector<double> flip;   ///< per-coordinate channel flip probability

  void validate() const;
  std::size_t cells() const { return joint.size(); }

  double label_entropy() const;
  /// Joint over (Y, intervened vector at prefix k), same indexing as `joint`.
  std::vector<double> intervened_joint(int k) const;
  double mutual_info_intervened(int k) const;
  /// Bayes error of the matched classifier under the level-k distribution.
  double bayes_error(int k) const;
  /// Error of the Bayes classifier trained at k = 0 and applied at level k.
  double mismatched_error(int k) const;
  /// KL(P_k || P_0) over the concept-vector marginals.
  double epsilon(int k, double floor = 1e-9, int* floored_points = nullptr) const;
};

inline constexpr int kExactEnumerationMaxConcepts = 16;

/// Plug-in I(Y; intervened vector) in nats; errors out above the exact
/// enumeration capacity (use the empirical plug-in path instead).
double exact_mutual_info_intervened(const ChannelFamily& family, int k);

/// Plug-in MI of an explicit joint table indexed [label * keys + key].
double mutual_info_from_joint(std::span<const double> joint, int labels, std::size_t keys);

using VectorKey = std::vector<std::int8_t>;
using VectorDistribution = std::map<VectorKey, double>;

/// Nearest-bin discretization of a soft concept vector.
VectorKey discretize(std::span<const double> probs, std::span<const double> bins);

inline const std::vector<double>& default_bins() {
  static const std::vector<double> bins{0.0, 0.25, 0.5, 0.75, 1.0};
  return bins;
}

struct EpsilonEstimate {
  double value = 0.0;
  int floored_points = 0;  ///< support points where the train mass hit the floor
};

/// KL(P_int || P_train) over a shared discretized support; train-side zeros
/// contribute through the additive floor and are counted.
EpsilonEstimate estimate_epsilon(const VectorDistribution& intervened,
                                 const VectorDistribution& train, double floor = 1e-9);

struct BoundReport {
  int k = 0;
  double label_entropy = 0.0;   ///< H(Y), nats
  double mutual_info = 0.0;     ///< I(Y; intervened vector), nats
  double epsilon = 0.0;         ///< KL shift penalty, nats
  double bound_value = 0.0;     ///< (H - I)/2 + sqrt(eps/2)
  double empirical_error = 0.0; ///< measured full-head intervention error
  int floored_points = 0;
  bool exact_mode = false;      ///< support small enough for exact enumeration
  bool holds = false;           ///< empirical_error <= bound_value
};

/// Per-k error-bound report for a trained model on a small dataset. Soft
/// vectors are discretized with `bins` before the information measures.
std::vector<BoundReport> hellman_raviv_report(const MatryoshkaModel& model,
                                              const Dataset& dataset,
                                              std::span<const int> ranking_order,
                                              std::span<const int> k_grid,
                                              std::span<const double> bins = {});

std::string bound_reports_to_json(std::span<const BoundReport> reports,
                                  std::span<const double> bins);
void save_bound_reports_json(std::span<const BoundReport> reports, std::span<const double> bins,
                             const std::string& path);

}  // namespace mcbm
