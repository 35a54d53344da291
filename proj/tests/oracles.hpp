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

// Test-only reference implementations, kept independent of the library code
// paths they check: a map-based plug-in MI, a literal set-enumerating greedy
// ranker, closed forms for the truncated stopping law, a plain multinomial
// logistic trainer, and small statistical tables.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace oracle {

/// Plug-in mutual information in nats over map-accumulated frequencies.
inline double mutual_information(std::span<const int> x, std::span<const int> y) {
  std::map<std::pair<int, int>, long long> joint;
  std::map<int, long long> mx;
  std::map<int, long long> my;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++joint[{x[i], y[i]}];
    ++mx[x[i]];
    ++my[y[i]];
  }
  const double n = static_cast<double>(x.size());
  double value = 0.0;
  for (const auto& [key, count] : joint) {
    const double pxy = count / n;
    const double px = mx.at(key.first) / n;
    const double py = my.at(key.second) / n;
    value += pxy * std::log(pxy / (px * py));
  }
  return value < 0.0 ? 0.0 : value;
}

/// Literal greedy ranker: at each step scores every remaining concept by
/// relevance minus mean pairwise MI to the explicit selected set, breaking
/// ties toward the lowest index. Columns are given column-major.
inline std::vector<int> brute_mrmr(const std::vector<std::vector<int>>& columns,
                                   std::span<const int> labels) {
  const int k = static_cast<int>(columns.size());
  std::vector<int> order;
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < k; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      double redundancy = 0.0;
      for (int s : order) redundancy += mutual_information(columns[static_cast<std::size_t>(j)],
                                                           columns[static_cast<std::size_t>(s)]);
      if (!order.empty()) redundancy /= static_cast<double>(order.size());
      const double score = mutual_information(columns[static_cast<std::size_t>(j)], labels) - redundancy;
      if (best < 0 || score > best_score) {
        best = j;
        best_score = score;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    order.push_back(best);
  }
  return order;
}

/// Exact expectation of the inspection cost under the truncated normalized
/// geometric stopping law with cost k1 * r^(i-1) at level i.
inline double truncated_expected_cost(double r, double gamma, double k1, int levels) {
  double normalizer = 0.0;
  double cost = 0.0;
  for (int i = 1; i <= levels; ++i) {
    const double p = std::pow(gamma, i - 1);
    normalizer += p;
    cost += p * k1 * std::pow(r, i - 1);
  }
  return cost / normalizer;
}

/// Least-squares slope/intercept/R^2.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
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
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fitted = fit.intercept + fit.slope * xs[i];
    ss_res += (ys[i] - fitted) * (ys[i] - fitted);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

/// Chi-square critical values at significance 0.01 for df = 1..12.
inline double chi_square_critical_01(int df) {
  static const double table[] = {6.635, 9.210, 11.345, 13.277, 15.086, 16.812,
                                 18.475, 20.090, 21.666, 23.209, 24.725, 26.217};
  return table[df - 1];
}

/// Exact E[IoU of two independent uniform k-subsets of [0, K)] via the
/// hypergeometric law of their intersection size.
inline double expected_random_iou(int k, int total) {
  auto log_choose = [](int n, int m) {
    return std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
  };
  double expectation = 0.0;
  for (int j = std::max(0, 2 * k - total); j <= k; ++j) {
    const double log_p = log_choose(k, j) + log_choose(total - k, k - j) - log_choose(total, k);
    expectation += std::exp(log_p) * (static_cast<double>(j) / (2.0 * k - j));
  }
  return expectation;
}

/// Plain multinomial logistic regression with fixed shuffling order supplied
/// by the caller; mirrors one independent optimization route for a single
/// linear head on fixed inputs.
struct LogisticModel {
  std::vector<double> weights;  // classes x dims
  std::vector<double> bias;     // classes
};

inline LogisticModel train_logistic(const std::vector<std::vector<double>>& inputs,
                                    std::span<const int> labels, int classes, double lr,
                                    int epochs, int batch_size,
                                    const std::vector<std::vector<std::size_t>>& epoch_orders,
                                    LogisticModel init) {
  const int dims = static_cast<int>(inputs[0].size());
  LogisticModel model = std::move(init);
  std::vector<double> scores(static_cast<std::size_t>(classes));
  std::vector<double> grad_w(model.weights.size());
  std::vector<double> grad_b(model.bias.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto& order = epoch_orders[static_cast<std::size_t>(epoch)];
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      const double batch_n = static_cast<double>(stop - start);
      for (std::size_t t = start; t < stop; ++t) {
        const auto& x = inputs[order[t]];
        const int y = labels[order[t]];
        double top = -1e300;
        for (int c = 0; c < classes; ++c) {
          scores[static_cast<std::size_t>(c)] = model.bias[static_cast<std::size_t>(c)];
          for (int d = 0; d < dims; ++d) {
            scores[static_cast<std::size_t>(c)] +=
                model.weights[static_cast<std::size_t>(c) * dims + d] * x[static_cast<std::size_t>(d)];
          }
          top = std::max(top, scores[static_cast<std::size_t>(c)]);
        }
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) denom += std::exp(scores[static_cast<std::size_t>(c)] - top);
        for (int c = 0; c < classes; ++c) {
          const double softmax = std::exp(scores[static_cast<std::size_t>(c)] - top) / denom;
          const double delta = (softmax - (c == y ? 1.0 : 0.0)) / batch_n;
          for (int d = 0; d < dims; ++d) {
            grad_w[static_cast<std::size_t>(c) * dims + d] += delta * x[static_cast<std::size_t>(d)];
          }
          grad_b[static_cast<std::size_t>(c)] += delta;
        }
      }
      for (std::size_t i = 0; i < model.weights.size(); ++i) model.weights[i] -= lr * grad_w[i];
      for (std::size_t i = 0; i < model.bias.size(); ++i) model.bias[i] -= lr * grad_b[i];
    }
  }
  return model;
}

inline double logistic_accuracy(const LogisticModel& model,
                                const std::vector<std::vector<double>>& inputs,
                                std::span<const int> labels, int classes) {
  const int dims = static_cast<int>(inputs[0].size());
  long long correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    int best = 0;
    double best_score = -1e300;
    for (int c = 0; c < classes; ++c) {
      double score = model.bias[static_cast<std::size_t>(c)];
      for (int d = 0; d < dims; ++d) {
        score += model.weights[static_cast<std::size_t>(c) * dims + d] * inputs[i][static_cast<std::size_t>(d)];
      }
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(inputs.size());
}

}  // namespace oracle
