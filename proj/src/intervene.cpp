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

#include "intervene.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "textio.hpp"

namespace mcbm {

std::vector<double> intervene_prefix(std::span<const double> probs_ordered,
                                     std::span<const std::uint8_t> truth_ordered, int k) {
  require(probs_ordered.size() == truth_ordered.size(), ErrorCode::shape,
          "intervene_prefix: probability and truth lengths differ");
  require(k >= 0 && k <= static_cast<int>(probs_ordered.size()), ErrorCode::spec,
          "intervene_prefix: k outside [0, K]");
  std::vector<double> out(probs_ordered.begin(), probs_ordered.end());
  for (int t = 0; t < k; ++t) {
    out[static_cast<std::size_t>(t)] = truth_ordered[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
  }
  return out;
}

const char* head_policy_name(HeadPolicy policy) {
  return policy == HeadPolicy::matched ? "matched" : "full_head";
}

namespace {

/// Ground-truth bits of sample i arranged in `ranking_order`.
std::vector<std::uint8_t> ordered_truth(const Dataset& dataset, std::size_t i,
                                        std::span<const int> ranking_order) {
  const auto row = dataset.concept_row(i);
  std::vector<std::uint8_t> out(ranking_order.size());
  for (std::size_t t = 0; t < ranking_order.size(); ++t) {
    out[t] = row[static_cast<std::size_t>(ranking_order[t])];
  }
  return out;
}

/// Writes the top-k concepts of `ranking_order` (hard 0/1) into a vector that
/// lives in the model's own ordering.
void intervene_into_model_order(std::vector<double>& probs_model_order,
                                const Dataset& dataset, std::size_t i,
                                std::span<const int> ranking_order,
                                std::span<const int> position_of_concept, int k) {
  const auto row = dataset.concept_row(i);
  for (int t = 0; t < k; ++t) {
    const int concept_id = ranking_order[static_cast<std::size_t>(t)];
    const int position = position_of_concept[static_cast<std::size_t>(concept_id)];
    probs_model_order[static_cast<std::size_t>(position)] = row[static_cast<std::size_t>(concept_id)] ? 1.0 : 0.0;
  }
}

std::vector<int> positions_from_permutation(std::span<const int> permutation) {
  std::vector<int> positions(permutation.size());
  for (std::size_t t = 0; t < permutation.size(); ++t) {
    positions[static_cast<std::size_t>(permutation[t])] = static_cast<int>(t);
  }
  return positions;
}

}  // namespace

std::vector<CurvePoint> accuracy_at_k(const MatryoshkaModel& model, const Dataset& dataset,
                                      std::span<const int> ranking_order,
                                      std::span<const int> k_grid, HeadPolicy policy,
                                      std::vector<TraceRow>* traces) {
  model.validate();
  dataset.validate();
  require(dataset.rows() >= 1, ErrorCode::spec, "accuracy_at_k: empty dataset");
  require(static_cast<int>(ranking_order.size()) == model.concept_count, ErrorCode::shape,
          "ranking order must cover all concepts");
  for (int k : k_grid) {
    require(k >= 0 && k <= model.concept_count, ErrorCode::spec, "k outside [0, K]");
    if (policy == HeadPolicy::matched && k > 0) model.resolve_level(k);
  }

  const auto positions = positions_from_permutation(model.permutation);
  const int widest = model.widest_level();

  std::vector<CurvePoint> curve;
  curve.reserve(k_grid.size());
  std::vector<long long> correct(k_grid.size(), 0);

  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    const auto base = model.ordered_probs(dataset.feature_row(i));
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
      const int k = k_grid[g];
      std::vector<double> probs = base;
      intervene_into_model_order(probs, dataset, i, ranking_order, positions, k);
      const int level = (policy == HeadPolicy::matched && k > 0) ? k : widest;
      const int predicted = model.predict_class(probs, level);
      const bool hit = predicted == dataset.labels[i];
      if (hit) ++correct[g];
      if (traces != nullptr) traces->push_back({i, policy, k, predicted, hit});
    }
  }

  for (std::size_t g = 0; g < k_grid.size(); ++g) {
    curve.push_back({k_grid[g], static_cast<double>(correct[g]) / static_cast<double>(dataset.rows())});
  }
  return curve;
}

LevelHistogram minimal_sufficient_levels_generic(
    const std::function<std::vector<double>(std::size_t)>& base_probs,
    const std::function<int(std::span<const double>, int)>& predict, const Dataset& dataset,
    std::span<const int> ranking_order, std::span<const int> schedule, bool misclassified_only,
    std::vector<InterventionTrace>* traces) {
  dataset.validate();
  require(!schedule.empty(), ErrorCode::spec, "minimal_sufficient_levels: empty schedule");
  require(static_cast<int>(ranking_order.size()) == dataset.concept_count(), ErrorCode::shape,
          "ranking order must cover all concepts");

  LevelHistogram histogram;
  histogram.schedule.assign(schedule.begin(), schedule.end());
  histogram.counts.assign(schedule.size(), 0);

  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    const auto base = base_probs(i);
    const int truth = dataset.labels[i];
    const int base_prediction = predict(base, static_cast<int>(schedule.back()));
    if (misclassified_only && base_prediction == truth) continue;
    ++histogram.evaluated;

    InterventionTrace trace;
    trace.sample_id = i;
    trace.base_prediction = base_prediction;

    const auto bits = ordered_truth(dataset, i, ranking_order);
    int found_level = InterventionTrace::kNever;
    for (std::size_t level = 0; level < schedule.size(); ++level) {
      const int k = schedule[level];
      const auto probs = intervene_prefix(base, bits, k);
      const int predicted = predict(probs, k);
      trace.per_k_predictions[k] = predicted;
      if (predicted == truth) {
        found_level = static_cast<int>(level) + 1;
        break;
      }
    }
    if (found_level == InterventionTrace::kNever) {
      ++histogram.never;
    } else {
      ++histogram.counts[static_cast<std::size_t>(found_level - 1)];
    }
    trace.minimal_sufficient_level = found_level;
    if (traces != nullptr) traces->push_back(std::move(trace));
  }

  histogram.empty_warning = histogram.evaluated == 0;
  return histogram;
}

LevelHistogram minimal_sufficient_levels(const MatryoshkaModel& model, const Dataset& dataset,
                                         std::span<const int> ranking_order,
                                         bool misclassified_only,
                                         std::vector<InterventionTrace>* traces) {
  model.validate();
  require(static_cast<int>(ranking_order.size()) == model.concept_count, ErrorCode::shape,
          "ranking order must cover all concepts");

  // The intervention writes into model ordering; the generic driver hands us
  // vectors ordered by `ranking_order`, so remap before predicting.
  const auto positions = positions_from_permutation(model.permutation);

  auto base_probs = [&](std::size_t i) {
    const auto model_ordered = model.ordered_probs(dataset.feature_row(i));
    std::vector<double> by_ranking(model_ordered.size());
    for (std::size_t t = 0; t < ranking_order.size(); ++t) {
      by_ranking[t] = model_ordered[static_cast<std::size_t>(
          positions[static_cast<std::size_t>(ranking_order[t])])];
    }
    return by_ranking;
  };
  auto predict = [&](std::span<const double> by_ranking, int d) {
    std::vector<double> model_ordered(by_ranking.size());
    for (std::size_t t = 0; t < ranking_order.size(); ++t) {
      model_ordered[static_cast<std::size_t>(positions[static_cast<std::size_t>(ranking_order[t])])] =
          by_ranking[t];
    }
    return model.predict_class(model_ordered, d);
  };

  return minimal_sufficient_levels_generic(base_probs, predict, dataset, ranking_order,
                                           model.schedule.levels, misclassified_only, traces);
}

std::string traces_to_csv(std::span<const TraceRow> rows) {
  std::string text = "sample_id,policy,k,prediction,correct\n";
  for (const TraceRow& row : rows) {
    text += std::to_string(row.sample_id);
    text += ',';
    text += head_policy_name(row.policy);
    text += ',' + std::to_string(row.k);
    text += ',' + std::to_string(row.prediction);
    text += row.correct ? ",1\n" : ",0\n";
  }
  return text;
}

void save_traces_csv(std::span<const TraceRow> rows, const std::string& path) {
  io::write_file_atomic(path, traces_to_csv(rows));
}

std::string curve_to_csv(std::span<const CurvePoint> curve, HeadPolicy policy,
                         const std::string& ordering) {
  std::string text = "k,accuracy,policy,ordering\n";
  for (const CurvePoint& point : curve) {
    text += std::to_string(point.k);
    text += ',' + io::format_double(point.accuracy);
    text += ',';
    text += head_policy_name(policy);
    text += ',' + ordering;
    text += '\n';
  }
  return text;
}

void save_curve_csv(std::span<const CurvePoint> curve, HeadPolicy policy,
                    const std::string& ordering, const std::string& path) {
  io::write_file_atomic(path, curve_to_csv(curve, policy, ordering));
}

std::string histogram_to_csv(const LevelHistogram& histogram) {
  std::string text = "level,prefix,count\n";
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    text += std::to_string(i + 1);
    text += ',' + std::to_string(histogram.schedule[i]);
    text += ',' + std::to_string(histogram.counts[i]);
    text += '\n';
  }
  text += "never,," + std::to_string(histogram.never) + "\n";
  return text;
}

void save_histogram_csv(const LevelHistogram& histogram, const std::string& path) {
  io::write_file_atomic(path, histogram_to_csv(histogram));
}

LevelHistogram load_histogram_csv(const std::string& path) {
  auto lines = io::split_lines(io::read_file(path));
  require(!lines.empty() && lines[0] == "level,prefix,count", ErrorCode::parse,
          "unexpected histogram header in " + path);
  LevelHistogram histogram;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = io::split(lines[i], ',');
    const std::string where = path + " line " + std::to_string(i + 1);
    require(fields.size() == 3, ErrorCode::parse, where + ": expected 3 columns");
    if (fields[0] == "never") {
      histogram.never = io::parse_int(fields[2], where);
      continue;
    }
    const long long level = io::parse_int(fields[0], where);
    require(level == static_cast<long long>(histogram.counts.size() + 1), ErrorCode::parse,
            where + ": levels must be sequential from 1");
    histogram.schedule.push_back(fields[1].empty() ? static_cast<int>(level)
                                                   : static_cast<int>(io::parse_int(fields[1], where)));
    histogram.counts.push_back(io::parse_int(fields[2], where));
  }
  require(!histogram.counts.empty(), ErrorCode::parse, "histogram has no level rows: " + path);
  for (std::int64_t c : histogram.counts) histogram.evaluated += c;
  histogram.evaluated += histogram.never;
  return histogram;
}

DecayFit fit_geometric_decay(std::span<const double> counts) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    require(counts[i] >= 0.0, ErrorCode::spec, "histogram counts must be non-negative");
    if (counts[i] > 0.0) {
      xs.push_back(static_cast<double>(i));  // level index minus 1
      ys.push_back(std::log(counts[i]));
    }
  }
  require(xs.size() >= 2, ErrorCode::fit,
          "fit_geometric_decay needs at least 2 non-empty levels");

  const double n = static_cast<double>(xs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_x;

  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fitted = intercept + slope * xs[i];
    ss_res += (ys[i] - fitted) * (ys[i] - fitted);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }

  DecayFit fit;
  fit.gamma_hat = std::exp(slope);
  fit.c_hat = std::exp(intercept);
  fit.levels_used = static_cast<int>(xs.size());
  fit.r_squared = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double expected_cost(std::span<const double> counts, double never_count,
                     std::span<const double> level_costs) {
  require(counts.size() == level_costs.size(), ErrorCode::shape,
          "expected_cost: counts and level costs differ in length");
  require(!counts.empty(), ErrorCode::spec, "expected_cost: empty histogram");
  double total = never_count;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    require(counts[i] >= 0.0, ErrorCode::spec, "expected_cost: negative count");
    require(level_costs[i] > 0.0, ErrorCode::spec, "expected_cost: level costs must be positive");
    total += counts[i];
  }
  require(total > 0.0, ErrorCode::fit, "expected_cost: all-zero histogram");

  double cost = never_count * level_costs.back();  // never bucket pays full inspection
  for (std::size_t i = 0; i < counts.size(); ++i) cost += counts[i] * level_costs[i];
  return cost / total;
}

}  // namespace mcbm
