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

#include "theory.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "error.hpp"
#include "intervene.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace mcbm {

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::efficient: return "efficient";
    case Regime::balanced: return "balanced";
    case Regime::heavy_tailed: return "heavy_tailed";
  }
  return "unknown";
}

RegimeClassification regime_classify(double growth_rate, double decay_rate) {
  require(growth_rate > 1.0, ErrorCode::spec, "growth rate must be > 1");
  require(decay_rate > 0.0 && decay_rate < 1.0, ErrorCode::spec, "decay rate must lie in (0, 1)");
  RegimeClassification out;
  const double boundary = 1.0 / growth_rate;
  if (std::abs(decay_rate - boundary) < 1e-12) {
    out.regime = Regime::balanced;
  } else if (decay_rate < boundary) {
    out.regime = Regime::efficient;
  } else {
    out.regime = Regime::heavy_tailed;
    out.alpha = 1.0 + std::log(decay_rate) / std::log(growth_rate);
  }
  return out;
}

void RegimeParams::validate() const {
  require(growth_rate > 1.0, ErrorCode::spec, "growth rate must be > 1");
  require(decay_rate > 0.0 && decay_rate < 1.0, ErrorCode::spec, "decay rate must lie in (0, 1)");
  require(base_size > 0.0, ErrorCode::spec, "base size must be positive");
  require(levels >= 1, ErrorCode::spec, "levels must be >= 1");
  require(norm_const > 0.0, ErrorCode::spec, "normalization constant must be positive");
}

double expected_cost_bound(const RegimeParams& params) {
  params.validate();
  const double rho = params.spectral_ratio();
  double series;
  if (rho == 1.0) {
    series = static_cast<double>(params.levels);
  } else {
    // (rho^L - 1) / (rho - 1), kept stable near the balanced boundary.
    series = std::expm1(params.levels * std::log(rho)) / (rho - 1.0);
  }
  return params.norm_const * params.base_size * series;
}

RegimeTable simulate_regimes(double growth_rate, double decay_rate, int base_size,
                             std::span<const int> level_grid, std::int64_t samples,
                             std::uint64_t seed) {
  require(base_size >= 1, ErrorCode::spec, "base size must be >= 1");
  require(samples >= 1000, ErrorCode::spec, "simulate_regimes needs at least 1000 samples");
  require(!level_grid.empty(), ErrorCode::spec, "empty level grid");
  const RegimeClassification classification = regime_classify(growth_rate, decay_rate);

  RegimeTable table;
  CounterRng master(seed, 31);

  for (int levels : level_grid) {
    require(levels >= 1, ErrorCode::spec, "levels must be >= 1");
    std::vector<double> weights(static_cast<std::size_t>(levels));
    std::vector<double> cdf(static_cast<std::size_t>(levels));
    double total = 0.0;
    for (int i = 0; i < levels; ++i) {
      weights[static_cast<std::size_t>(i)] = std::pow(decay_rate, i);
      total += weights[static_cast<std::size_t>(i)];
      cdf[static_cast<std::size_t>(i)] = total;
    }

    double concept_count = 0.0;
    std::vector<double> costs(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
      costs[static_cast<std::size_t>(i)] = base_size * std::pow(growth_rate, i);
      concept_count += std::llround(base_size * std::pow(growth_rate, i));
    }

    CounterRng rng = master.substream(static_cast<std::uint64_t>(levels));
    double cost_sum = 0.0;
    for (std::int64_t s = 0; s < samples; ++s) {
      const double u = rng.next_double() * total;
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      const auto level = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
          it - cdf.begin(), static_cast<std::ptrdiff_t>(levels) - 1));
      cost_sum += costs[level];
    }

    RegimeParams params{growth_rate, decay_rate, static_cast<double>(base_size), levels,
                        (1.0 - decay_rate) / (1.0 - std::pow(decay_rate, levels))};
    RegimeRow row;
    row.levels = levels;
    row.concept_count = concept_count;
    row.e_empirical = cost_sum / static_cast<double>(samples);
    row.e_bound = expected_cost_bound(params);
    row.regime = classification.regime;
    table.rows.push_back(row);
  }

  // Scaling exponent: least squares of ln E against ln K.
  if (table.rows.size() >= 2) {
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const RegimeRow& row : table.rows) {
      mean_x += std::log(row.concept_count);
      mean_y += std::log(row.e_empirical);
    }
    mean_x /= static_cast<double>(table.rows.size());
    mean_y /= static_cast<double>(table.rows.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (const RegimeRow& row : table.rows) {
      const double dx = std::log(row.concept_count) - mean_x;
      sxx += dx * dx;
      sxy += dx * (std::log(row.e_empirical) - mean_y);
    }
    table.alpha_fit = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return table;
}

std::string regime_table_to_csv(const RegimeTable& table) {
  std::string text = "L,K,E_empirical,E_bound,regime,alpha_fit\n";
  for (const RegimeRow& row : table.rows) {
    text += std::to_string(row.levels);
    text += ',' + io::format_double(row.concept_count);
    text += ',' + io::format_double(row.e_empirical);
    text += ',' + io::format_double(row.e_bound);
    text += ',';
    text += regime_name(row.regime);
    text += ',' + io::format_double(table.alpha_fit);
    text += '\n';
  }
  return text;
}

void save_regime_table_csv(const RegimeTable& table, const std::string& path) {
  io::write_file_atomic(path, regime_table_to_csv(table));
}

void ChannelFamily::validate() const {
  require(classes >= 2, ErrorCode::spec, "channel family needs at least 2 classes");
  require(concept_count >= 1 && concept_count <= kExactEnumerationMaxConcepts, ErrorCode::capacity,
          "channel family supports up to " + std::to_string(kExactEnumerationMaxConcepts) +
              " concepts in exact mode; use the empirical plug-in path beyond that");
  const std::size_t expected =
      static_cast<std::size_t>(classes) << static_cast<std::size_t>(concept_count);
  require(joint.size() == expected, ErrorCode::shape, "joint table has the wrong size");
  require(flip.size() == static_cast<std::size_t>(concept_count), ErrorCode::shape,
          "flip vector has the wrong size");
  double total = 0.0;
  for (double p : joint) {
    require(p >= 0.0, ErrorCode::spec, "joint probabilities must be non-negative");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::spec, "joint must sum to 1");
  for (double q : flip) {
    require(q >= 0.0 && q < 0.5, ErrorCode::spec, "channel flips must lie in [0, 0.5)");
  }
}

namespace {

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double ChannelFamily::label_entropy() const {
  std::vector<double> marginal(static_cast<std::size_t>(classes), 0.0);
  const std::size_t nbits = 1ULL << concept_count;
  for (int y = 0; y < classes; ++y) {
    for (std::size_t b = 0; b < nbits; ++b) {
      marginal[static_cast<std::size_t>(y)] += joint[static_cast<std::size_t>(y) * nbits + b];
    }
  }
  return entropy_of(marginal);
}

std::vector<double> ChannelFamily::intervened_joint(int k) const {
  validate();
  require(k >= 0 && k <= concept_count, ErrorCode::spec, "prefix k outside [0, K]");
  const std::size_t nbits = 1ULL << concept_count;
  std::vector<double> table = joint;
  // Coordinates at or beyond k pass through their flip channel; one in-place
  // pairwise pass per coordinate converts c*_j into the predicted coordinate.
  for (int j = k; j < concept_count; ++j) {
    const double q = flip[static_cast<std::size_t>(j)];
    if (q == 0.0) continue;
    const std::size_t bit = 1ULL << j;
    for (int y = 0; y < classes; ++y) {
      double* row = table.data() + static_cast<std::size_t>(y) * nbits;
      for (std::size_t b = 0; b < nbits; ++b) {
        if (b & bit) continue;
        const double p0 = row[b];
        const double p1 = row[b | bit];
        row[b] = p0 * (1.0 - q) + p1 * q;
        row[b | bit] = p0 * q + p1 * (1.0 - q);
      }
    }
  }
  return table;
}

double mutual_info_from_joint(std::span<const double> joint, int labels, std::size_t keys) {
  require(joint.size() == static_cast<std::size_t>(labels) * keys, ErrorCode::shape,
          "joint table has the wrong size");
  std::vector<double> label_marginal(static_cast<std::size_t>(labels), 0.0);
  std::vector<double> key_marginal(keys, 0.0);
  for (int y = 0; y < labels; ++y) {
    for (std::size_t z = 0; z < keys; ++z) {
      const double p = joint[static_cast<std::size_t>(y) * keys + z];
      label_marginal[static_cast<std::size_t>(y)] += p;
      key_marginal[z] += p;
    }
  }
  double mi = 0.0;
  for (int y = 0; y < labels; ++y) {
    for (std::size_t z = 0; z < keys; ++z) {
      const double p = joint[static_cast<std::size_t>(y) * keys + z];
      if (p <= 0.0) continue;
      mi += p * std::log(p / (label_marginal[static_cast<std::size_t>(y)] * key_marginal[z]));
    }
  }
  return mi > 0.0 ? mi : 0.0;
}

double ChannelFamily::mutual_info_intervened(int k) const {
  const auto table = intervened_joint(k);
  return mutual_info_from_joint(table, classes, 1ULL << concept_count);
}

double ChannelFamily::bayes_error(int k) const {
  const auto table = intervened_joint(k);
  const std::size_t nbits = 1ULL << concept_count;
  double error = 0.0;
  for (std::size_t b = 0; b < nbits; ++b) {
    double mass = 0.0;
    double best = 0.0;
    for (int y = 0; y < classes; ++y) {
      const double p = table[static_cast<std::size_t>(y) * nbits + b];
      mass += p;
      best = std::max(best, p);
    }
    error += mass - best;
  }
  return error;
}

double ChannelFamily::mismatched_error(int k) const {
  const auto train = intervened_joint(0);
  const auto current = intervened_joint(k);
  const std::size_t nbits = 1ULL << concept_count;
  double error = 0.0;
  for (std::size_t b = 0; b < nbits; ++b) {
    int decide = 0;
    double best = -1.0;
    for (int y = 0; y < classes; ++y) {
      const double p = train[static_cast<std::size_t>(y) * nbits + b];
      if (p > best) {
        best = p;
        decide = y;
      }
    }
    for (int y = 0; y < classes; ++y) {
      if (y != decide) error += current[static_cast<std::size_t>(y) * nbits + b];
    }
  }
  return error;
}

double ChannelFamily::epsilon(int k, double floor, int* floored_points) const {
  const auto train = intervened_joint(0);
  const auto current = intervened_joint(k);
  const std::size_t nbits = 1ULL << concept_count;
  double kl = 0.0;
  int floored = 0;
  for (std::size_t b = 0; b < nbits; ++b) {
    double p_cur = 0.0;
    double p_train = 0.0;
    for (int y = 0; y < classes; ++y) {
      p_cur += current[static_cast<std::size_t>(y) * nbits + b];
      p_train += train[static_cast<std::size_t>(y) * nbits + b];
    }
    if (p_cur <= 0.0) continue;
    if (p_train <= 0.0) {
      p_train = floor;
      ++floored;
    }
    kl += p_cur * std::log(p_cur / p_train);
  }
  if (floored_points != nullptr) *floored_points = floored;
  return kl > 0.0 ? kl : 0.0;
}

double exact_mutual_info_intervened(const ChannelFamily& family, int k) {
  require(family.concept_count <= kExactEnumerationMaxConcepts, ErrorCode::capacity,
          "support too large for exact enumeration; use the empirical plug-in path");
  return family.mutual_info_intervened(k);
}

VectorKey discretize(std::span<const double> probs, std::span<const double> bins) {
  require(!bins.empty(), ErrorCode::spec, "discretize: empty bin grid");
  VectorKey key(probs.size());
  for (std::size_t t = 0; t < probs.size(); ++t) {
    int best = 0;
    double best_distance = std::abs(probs[t] - bins[0]);
    for (int b = 1; b < static_cast<int>(bins.size()); ++b) {
      const double distance = std::abs(probs[t] - bins[static_cast<std::size_t>(b)]);
      if (distance < best_distance) {
        best_distance = distance;
        best = b;
      }
    }
    key[t] = static_cast<std::int8_t>(best);
  }
  return key;
}

EpsilonEstimate estimate_epsilon(const VectorDistribution& intervened,
                                 const VectorDistribution& train, double floor) {
  require(!intervened.empty() && !train.empty(), ErrorCode::spec,
          "estimate_epsilon: empty support");
  EpsilonEstimate out;
  for (const auto& [key, p_int] : intervened) {
    if (p_int <= 0.0) continue;
    double p_train = floor;
    if (auto it = train.find(key); it != train.end() && it->second > 0.0) {
      p_train = it->second;
    } else {
      ++out.floored_points;
    }
    out.value += p_int * std::log(p_int / p_train);
  }
  if (out.value < 0.0) out.value = 0.0;
  return out;
}

std::vector<BoundReport> hellman_raviv_report(const MatryoshkaModel& model,
                                              const Dataset& dataset,
                                              std::span<const int> ranking_order,
                                              std::span<const int> k_grid,
                                              std::span<const double> bins) {
  model.validate();
  dataset.validate();
  require(dataset.rows() >= 1, ErrorCode::spec, "hellman_raviv_report: empty dataset");
  const std::vector<double> grid =
      bins.empty() ? default_bins() : std::vector<double>(bins.begin(), bins.end());

  const double n = static_cast<double>(dataset.rows());
  const bool exact_mode = model.concept_count <= kExactEnumerationMaxConcepts && model.class_count <= 8;

  // H(Y) from the empirical label distribution.
  std::vector<double> label_marginal(static_cast<std::size_t>(model.class_count), 0.0);
  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    label_marginal[static_cast<std::size_t>(dataset.labels[i])] += 1.0 / n;
  }
  const double h_y = entropy_of(label_marginal);

  // Soft ordered vectors once; intervened variants per k.
  const auto positions = [&] {
    std::vector<int> p(model.permutation.size());
    for (std::size_t t = 0; t < p.size(); ++t) p[static_cast<std::size_t>(model.permutation[t])] = static_cast<int>(t);
    return p;
  }();

  std::vector<std::vector<double>> soft(dataset.rows());
  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    soft[i] = model.ordered_probs(dataset.feature_row(i));
  }

  VectorDistribution train_distribution;
  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    train_distribution[discretize(soft[i], grid)] += 1.0 / n;
  }

  std::vector<BoundReport> reports;
  for (int k : k_grid) {
    require(k >= 0 && k <= model.concept_count, ErrorCode::spec, "k outside [0, K]");
    BoundReport report;
    report.k = k;
    report.label_entropy = h_y;
    report.exact_mode = exact_mode;

    VectorDistribution intervened_distribution;
    std::map<std::pair<int, VectorKey>, double> joint;
    long long wrong = 0;
    for (std::size_t i = 0; i < dataset.rows(); ++i) {
      std::vector<double> probs = soft[i];
      const auto row = dataset.concept_row(i);
      for (int t = 0; t < k; ++t) {
        const int concept_id = ranking_order[static_cast<std::size_t>(t)];
        probs[static_cast<std::size_t>(positions[static_cast<std::size_t>(concept_id)])] =
            row[static_cast<std::size_t>(concept_id)] ? 1.0 : 0.0;
      }
      const auto key = discretize(probs, grid);
      intervened_distribution[key] += 1.0 / n;
      joint[{dataset.labels[i], key}] += 1.0 / n;
      if (model.predict_class(probs, model.widest_level()) != dataset.labels[i]) ++wrong;
    }

    // Plug-in I(Y; intervened vector) over the empirical joint.
    double mi = 0.0;
    for (const auto& [yk, p] : joint) {
      if (p <= 0.0) continue;
      const double p_y = label_marginal[static_cast<std::size_t>(yk.first)];
      const double p_z = intervened_distribution.at(yk.second);
      mi += p * std::log(p / (p_y * p_z));
    }
    report.mutual_info = mi > 0.0 ? mi : 0.0;

    const EpsilonEstimate eps = estimate_epsilon(intervened_distribution, train_distribution);
    report.epsilon = eps.value;
    report.floored_points = eps.floored_points;
    report.bound_value = 0.5 * (report.label_entropy - report.mutual_info) +
                         std::sqrt(report.epsilon / 2.0);
    report.empirical_error = static_cast<double>(wrong) / n;
    report.holds = report.empirical_error <= report.bound_value;
    reports.push_back(report);
  }
  return reports;
}

std::string bound_reports_to_json(std::span<const BoundReport> reports,
                                  std::span<const double> bins) {
  nlohmann::ordered_json j;
  j["bins"] = bins.empty() ? default_bins() : std::vector<double>(bins.begin(), bins.end());
  auto rows = nlohmann::ordered_json::array();
  for (const BoundReport& report : reports) {
    rows.push_back(nlohmann::ordered_json{{"k", report.k},
                                          {"label_entropy", report.label_entropy},
                                          {"mutual_info", report.mutual_info},
                                          {"epsilon", report.epsilon},
                                          {"bound_value", report.bound_value},
                                          {"empirical_error", report.empirical_error},
                                          {"floored_points", report.floored_points},
                                          {"exact_mode", report.exact_mode},
                                          {"holds", report.holds}});
  }
  j["reports"] = rows;
  return j.dump(2) + "\n";
}

void save_bound_reports_json(std::span<const BoundReport> reports, std::span<const double> bins,
                             const std::string& path) {
  io::write_file_atomic(path, bound_reports_to_json(reports, bins));
}

}  // namespace mcbm
