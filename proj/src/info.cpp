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

#include "info.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace mcbm {

namespace {

/// Remaps arbitrary discrete values to dense ids [0, support) by value order.
std::vector<int> densify(std::span<const int> series, int* support) {
  std::vector<int> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  *support = static_cast<int>(sorted.size());
  std::vector<int> dense(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    dense[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), series[i]) - sorted.begin());
  }
  return dense;
}

}  // namespace

MiEstimate mutual_information(std::span<const int> x, std::span<const int> y) {
  require(x.size() == y.size(), ErrorCode::shape, "mutual_information: series lengths differ");
  require(!x.empty(), ErrorCode::shape, "mutual_information: empty series");

  MiEstimate out;
  auto dense_x = densify(x, &out.support_x);
  auto dense_y = densify(y, &out.support_y);

  const auto sx = static_cast<std::size_t>(out.support_x);
  const auto sy = static_cast<std::size_t>(out.support_y);
  std::vector<long long> joint(sx * sy, 0);
  std::vector<long long> marginal_x(sx, 0);
  std::vector<long long> marginal_y(sy, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++joint[static_cast<std::size_t>(dense_x[i]) * sy + static_cast<std::size_t>(dense_y[i])];
    ++marginal_x[static_cast<std::size_t>(dense_x[i])];
    ++marginal_y[static_cast<std::size_t>(dense_y[i])];
  }

  const double n = static_cast<double>(x.size());
  double value = 0.0;
  for (std::size_t a = 0; a < sx; ++a) {
    for (std::size_t b = 0; b < sy; ++b) {
      const long long count = joint[a * sy + b];
      if (count == 0) continue;  // 0 * log 0 := 0
      const double p_xy = static_cast<double>(count) / n;
      const double p_x = static_cast<double>(marginal_x[a]) / n;
      const double p_y = static_cast<double>(marginal_y[b]) / n;
      value += p_xy * std::log(p_xy / (p_x * p_y));
    }
  }
  out.value = value > 0.0 ? value : 0.0;
  return out;
}

std::vector<double> relevance_vector(const Dataset& dataset) {
  dataset.validate();
  const int k = dataset.concept_count();
  std::vector<double> relevance(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    auto column = dataset.concept_column(j);
    relevance[static_cast<std::size_t>(j)] = mutual_information(column, dataset.labels).value;
  }
  return relevance;
}

void ConceptRanking::validate() const {
  const int k = size();
  require(k >= 1, ErrorCode::shape, "ranking is empty");
  require(steps.size() == order.size(), ErrorCode::shape, "ranking steps/order size mismatch");
  std::vector<bool> seen(static_cast<std::size_t>(k), false);
  for (int c : order) {
    require(c >= 0 && c < k, ErrorCode::shape, "ranking entry out of range");
    require(!seen[static_cast<std::size_t>(c)], ErrorCode::shape, "ranking repeats a concept");
    seen[static_cast<std::size_t>(c)] = true;
  }
}

std::vector<int> ConceptRanking::positions() const {
  std::vector<int> pos(order.size());
  for (std::size_t t = 0; t < order.size(); ++t) pos[static_cast<std::size_t>(order[t])] = static_cast<int>(t);
  return pos;
}

ConceptRanking mrmr_rank(const Dataset& dataset) {
  dataset.validate();
  const int k = dataset.concept_count();
  require(k >= 1, ErrorCode::spec, "mrmr_rank: empty concept matrix");

  std::vector<std::vector<int>> columns(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) columns[static_cast<std::size_t>(j)] = dataset.concept_column(j);

  std::vector<double> relevance(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    relevance[static_cast<std::size_t>(j)] = mutual_information(columns[static_cast<std::size_t>(j)], dataset.labels).value;
  }

  ConceptRanking ranking;
  ranking.names = dataset.concept_names;
  std::vector<bool> selected(static_cast<std::size_t>(k), false);
  // Running sum of MI(candidate, selected); one MI evaluation per (step,
  // candidate) pair keeps the whole ordering at O(K^2 N).
  std::vector<double> redundancy_sum(static_cast<std::size_t>(k), 0.0);

  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_score = 0.0;
    double best_redundancy = 0.0;
    for (int j = 0; j < k; ++j) {
      if (selected[static_cast<std::size_t>(j)]) continue;
      const double redundancy = step == 0 ? 0.0 : redundancy_sum[static_cast<std::size_t>(j)] / step;
      const double score = relevance[static_cast<std::size_t>(j)] - redundancy;
      if (best < 0 || score > best_score) {
        best = j;
        best_score = score;
        best_redundancy = redundancy;
      }
    }
    selected[static_cast<std::size_t>(best)] = true;
    ranking.order.push_back(best);
    ranking.steps.push_back({best, relevance[static_cast<std::size_t>(best)], best_redundancy, best_score});
    if (step + 1 < k) {
      for (int j = 0; j < k; ++j) {
        if (selected[static_cast<std::size_t>(j)]) continue;
        redundancy_sum[static_cast<std::size_t>(j)] +=
            mutual_information(columns[static_cast<std::size_t>(j)], columns[static_cast<std::size_t>(best)]).value;
      }
    }
  }
  ranking.validate();
  return ranking;
}

ConceptRanking ranking_from_order(const Dataset& dataset, std::span<const int> order) {
  dataset.validate();
  const int k = dataset.concept_count();
  require(static_cast<int>(order.size()) == k, ErrorCode::shape, "ranking order must cover all concepts");

  std::vector<std::vector<int>> columns(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) columns[static_cast<std::size_t>(j)] = dataset.concept_column(j);

  ConceptRanking ranking;
  ranking.names = dataset.concept_names;
  ranking.order.assign(order.begin(), order.end());
  for (int step = 0; step < k; ++step) {
    const int j = order[static_cast<std::size_t>(step)];
    require(j >= 0 && j < k, ErrorCode::shape, "ranking order entry out of range");
    double relevance = mutual_information(columns[static_cast<std::size_t>(j)], dataset.labels).value;
    double redundancy = 0.0;
    for (int t = 0; t < step; ++t) {
      redundancy += mutual_information(columns[static_cast<std::size_t>(j)],
                                       columns[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])]).value;
    }
    if (step > 0) redundancy /= step;
    ranking.steps.push_back({j, relevance, redundancy, relevance - redundancy});
  }
  ranking.validate();
  return ranking;
}

ConceptRanking identity_ranking(const Dataset& dataset) {
  std::vector<int> order(static_cast<std::size_t>(dataset.concept_count()));
  std::iota(order.begin(), order.end(), 0);
  return ranking_from_order(dataset, order);
}

std::string ranking_to_csv(const ConceptRanking& ranking) {
  std::string text = "rank,concept_index,concept_name,score,relevance,redundancy\n";
  for (std::size_t t = 0; t < ranking.order.size(); ++t) {
    const RankStep& step = ranking.steps[t];
    text += std::to_string(t + 1);
    text += ',' + std::to_string(step.concept_index);
    text += ',' + ranking.names[static_cast<std::size_t>(step.concept_index)];
    text += ',' + io::format_fixed(step.score, 4);
    text += ',' + io::format_fixed(step.relevance, 4);
    text += ',' + io::format_fixed(step.redundancy, 4);
    text += '\n';
  }
  return text;
}

void save_ranking_csv(const ConceptRanking& ranking, const std::string& path) {
  io::write_file_atomic(path, ranking_to_csv(ranking));
}

ConceptRanking load_ranking_csv(const std::string& path) {
  auto lines = io::split_lines(io::read_file(path));
  require(lines.size() >= 2, ErrorCode::parse, "ranking file has no rows: " + path);
  require(lines[0] == "rank,concept_index,concept_name,score,relevance,redundancy", ErrorCode::parse,
          "unexpected ranking header in " + path);
  ConceptRanking ranking;
  std::size_t rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = io::split(lines[i], ',');
    const std::string where = path + " line " + std::to_string(i + 1);
    require(fields.size() == 6, ErrorCode::parse, where + ": expected 6 columns");
    ++rows;
    require(io::parse_int(fields[0], where) == static_cast<long long>(rows), ErrorCode::parse,
            where + ": ranks must be sequential from 1");
    RankStep step;
    step.concept_index = static_cast<int>(io::parse_int(fields[1], where));
    step.score = io::parse_double(fields[3], where);
    step.relevance = io::parse_double(fields[4], where);
    step.redundancy = io::parse_double(fields[5], where);
    ranking.order.push_back(step.concept_index);
    ranking.steps.push_back(step);
    ranking.names.push_back(fields[2]);
  }
  // Names arrive in rank order; store them by concept index.
  std::vector<std::string> by_index(ranking.names.size());
  for (std::size_t t = 0; t < ranking.order.size(); ++t) {
    const int j = ranking.order[t];
    require(j >= 0 && j < static_cast<int>(by_index.size()), ErrorCode::parse,
            path + ": concept_index out of range");
    by_index[static_cast<std::size_t>(j)] = ranking.names[t];
  }
  ranking.names = std::move(by_index);
  ranking.validate();
  return ranking;
}

std::vector<std::vector<double>> ranking_stability(const Dataset& dataset,
                                                   std::span<const std::uint64_t> seeds,
                                                   double resample_fraction,
                                                   std::span<const int> prefix_sizes) {
  dataset.validate();
  require(resample_fraction > 0.0 && resample_fraction <= 1.0, ErrorCode::spec,
          "resample_fraction must lie in (0, 1]");
  const int k = dataset.concept_count();
  for (int prefix : prefix_sizes) {
    require(prefix >= 1 && prefix <= k, ErrorCode::spec, "prefix size out of range");
  }

  const ConceptRanking reference = mrmr_rank(dataset);
  std::vector<std::vector<double>> iou(seeds.size(), std::vector<double>(prefix_sizes.size(), 0.0));

  for (std::size_t s = 0; s < seeds.size(); ++s) {
    ConceptRanking resampled;
    if (resample_fraction == 1.0) {
      resampled = reference;
    } else {
      const std::size_t n = dataset.rows();
      auto m = static_cast<std::size_t>(static_cast<double>(n) * resample_fraction);
      if (m < 1) m = 1;
      std::vector<std::size_t> indices(n);
      std::iota(indices.begin(), indices.end(), 0);
      CounterRng rng(seeds[s], 17);
      rng.shuffle(indices);
      indices.resize(m);
      std::sort(indices.begin(), indices.end());

      Dataset sub;
      sub.concept_names = dataset.concept_names;
      sub.class_count = dataset.class_count;
      sub.feature_dim = dataset.feature_dim;
      for (std::size_t i : indices) {
        sub.labels.push_back(dataset.labels[i]);
        auto crow = dataset.concept_row(i);
        sub.concepts.insert(sub.concepts.end(), crow.begin(), crow.end());
        auto frow = dataset.feature_row(i);
        sub.features.insert(sub.features.end(), frow.begin(), frow.end());
      }
      resampled = mrmr_rank(sub);
    }
    for (std::size_t p = 0; p < prefix_sizes.size(); ++p) {
      const auto prefix = static_cast<std::size_t>(prefix_sizes[p]);
      std::set<int> a(reference.order.begin(), reference.order.begin() + prefix);
      std::set<int> b(resampled.order.begin(), resampled.order.begin() + prefix);
      std::size_t inter = 0;
      for (int c : a) inter += b.count(c);
      iou[s][p] = static_cast<double>(inter) / static_cast<double>(2 * prefix - inter);
    }
  }
  return iou;
}

RankCorrelation rank_correlation(std::span<const int> order_a, std::span<const int> order_b) {
  require(order_a.size() == order_b.size(), ErrorCode::shape, "rank_correlation: length mismatch");
  const auto k = order_a.size();
  require(k >= 2, ErrorCode::shape, "rank_correlation: need at least 2 elements");

  auto positions = [k](std::span<const int> order) {
    std::vector<int> pos(k, -1);
    for (std::size_t t = 0; t < k; ++t) {
      const int c = order[t];
      require(c >= 0 && static_cast<std::size_t>(c) < k, ErrorCode::shape,
              "rank_correlation: not a permutation");
      require(pos[static_cast<std::size_t>(c)] == -1, ErrorCode::shape,
              "rank_correlation: repeated element");
      pos[static_cast<std::size_t>(c)] = static_cast<int>(t);
    }
    return pos;
  };
  const auto pos_a = positions(order_a);
  const auto pos_b = positions(order_b);

  double d_squared = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double d = pos_a[c] - pos_b[c];
    d_squared += d * d;
  }
  const double n = static_cast<double>(k);
  RankCorrelation out;
  out.spearman = 1.0 - 6.0 * d_squared / (n * (n * n - 1.0));

  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const int da = pos_a[i] - pos_a[j];
      const int db = pos_b[i] - pos_b[j];
      if ((da > 0 && db > 0) || (da < 0 && db < 0)) ++concordant;
      else ++discordant;
    }
  }
  out.kendall = static_cast<double>(concordant - discordant) / (n * (n - 1.0) / 2.0);
  return out;
}

}  // namespace mcbm
