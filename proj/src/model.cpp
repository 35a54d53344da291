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

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace mcbm {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// log(1 + e^l) - l*c, computed without overflow.
double stable_bce(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

double log_sum_exp(std::span<const double> scores) {
  double top = scores[0];
  for (double s : scores) top = std::max(top, s);
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - top);
  return top + std::log(sum);
}

int argmax_lowest(std::span<const double> scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

}  // namespace

void NestingSchedule::validate(int concept_count) const {
  require(!levels.empty(), ErrorCode::spec, "nesting schedule is empty");
  int previous = 0;
  for (int d : levels) {
    require(d >= 1, ErrorCode::spec, "schedule levels must be >= 1");
    require(d > previous, ErrorCode::spec, "schedule levels must be strictly increasing");
    previous = d;
  }
  require(levels.back() <= concept_count, ErrorCode::spec,
          "largest schedule level exceeds the concept count");
}

bool NestingSchedule::contains(int d) const {
  return std::find(levels.begin(), levels.end(), d) != levels.end();
}

void LossConfig::validate(std::size_t schedule_size) const {
  require(alpha >= 0.0, ErrorCode::spec, "alpha must be >= 0");
  require(learning_rate > 0.0, ErrorCode::spec, "learning_rate must be > 0");
  require(epochs >= 0, ErrorCode::spec, "epochs must be >= 0");
  require(batch_size >= 1, ErrorCode::spec, "batch_size must be >= 1");
  require(lambdas.empty() || lambdas.size() == schedule_size, ErrorCode::spec,
          "lambdas must match the schedule length");
  for (double l : lambdas) require(l >= 0.0, ErrorCode::spec, "lambdas must be >= 0");
}

double LossConfig::lambda_at(std::size_t level_index) const {
  return lambdas.empty() ? 1.0 : lambdas[level_index];
}

std::vector<std::uint8_t> mask_for_level(int d, int concept_count) {
  require(concept_count >= 0, ErrorCode::spec, "concept_count must be >= 0");
  require(d >= 0 && d <= concept_count, ErrorCode::spec,
          "mask level must lie in [0, concept_count]");
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(concept_count), 0);
  for (int t = 0; t < d; ++t) mask[static_cast<std::size_t>(t)] = 1;
  return mask;
}

std::vector<double> MatryoshkaModel::concept_logits(std::span<const double> features) const {
  require(static_cast<int>(features.size()) == feature_dim, ErrorCode::shape,
          "feature length mismatch");
  const auto k = static_cast<std::size_t>(concept_count);
  std::vector<double> logits(encoder_bias);
  for (int f = 0; f < feature_dim; ++f) {
    const double x = features[static_cast<std::size_t>(f)];
    if (x == 0.0) continue;
    const double* row = encoder_weights.data() + static_cast<std::size_t>(f) * k;
    for (std::size_t j = 0; j < k; ++j) logits[j] += x * row[j];
  }
  return logits;
}

std::vector<double> MatryoshkaModel::ordered_probs(std::span<const double> features) const {
  auto logits = concept_logits(features);
  std::vector<double> ordered(logits.size());
  for (std::size_t t = 0; t < ordered.size(); ++t) {
    ordered[t] = sigmoid(logits[static_cast<std::size_t>(permutation[t])]);
  }
  return ordered;
}

const Head& MatryoshkaModel::head_for_level(int d) const {
  if (mode == HeadMode::efficient) return heads.front();
  for (const Head& head : heads) {
    if (head.level == d) return head;
  }
  fail(ErrorCode::level, "no head for level " + std::to_string(d));
}

int MatryoshkaModel::resolve_level(int d) const {
  if (mode == HeadMode::standard) {
    require(schedule.contains(d), ErrorCode::level,
            "level " + std::to_string(d) + " is not in the nesting schedule (standard mode)");
  } else {
    require(d >= 1 && d <= concept_count, ErrorCode::level,
            "level " + std::to_string(d) + " outside [1, concept_count]");
  }
  return d;
}

int MatryoshkaModel::widest_level() const {
  return mode == HeadMode::standard ? schedule.widest() : concept_count;
}

std::vector<double> MatryoshkaModel::level_scores(std::span<const double> ordered, int d) const {
  resolve_level(d);
  require(static_cast<int>(ordered.size()) == concept_count, ErrorCode::shape,
          "ordered concept vector has wrong length");
  const Head& head = head_for_level(d);
  const int width = head.level;
  std::vector<double> scores(head.bias);
  for (int c = 0; c < class_count; ++c) {
    const double* row = head.weights.data() + static_cast<std::size_t>(c) * width;
    double acc = 0.0;
    for (int t = 0; t < d; ++t) acc += row[t] * ordered[static_cast<std::size_t>(t)];
    scores[static_cast<std::size_t>(c)] += acc;
  }
  return scores;
}

std::vector<double> MatryoshkaModel::level_scores_masked(std::span<const double> ordered, int d) const {
  require(mode == HeadMode::efficient, ErrorCode::level,
          "masked scoring applies to the efficient (shared-matrix) mode");
  resolve_level(d);
  const Head& head = heads.front();
  const auto mask = mask_for_level(d, concept_count);
  std::vector<double> scores(head.bias);
  for (int c = 0; c < class_count; ++c) {
    const double* row = head.weights.data() + static_cast<std::size_t>(c) * concept_count;
    double acc = 0.0;
    for (int t = 0; t < concept_count; ++t) {
      acc += (row[t] * mask[static_cast<std::size_t>(t)]) * ordered[static_cast<std::size_t>(t)];
    }
    scores[static_cast<std::size_t>(c)] += acc;
  }
  return scores;
}

std::vector<double> MatryoshkaModel::predict_at(std::span<const double> ordered, int d) const {
  auto scores = level_scores(ordered, d);
  const double lse = log_sum_exp(scores);
  for (double& s : scores) s = std::exp(s - lse);
  return scores;
}

int MatryoshkaModel::predict_class(std::span<const double> ordered, int d) const {
  auto scores = level_scores(ordered, d);
  return argmax_lowest(scores);
}

void MatryoshkaModel::validate() const {
  require(feature_dim >= 1 && concept_count >= 1 && class_count >= 1, ErrorCode::shape,
          "model dimensions must be positive");
  schedule.validate(concept_count);
  require(static_cast<int>(permutation.size()) == concept_count, ErrorCode::shape,
          "permutation must cover all concepts");
  std::vector<bool> seen(static_cast<std::size_t>(concept_count), false);
  for (int c : permutation) {
    require(c >= 0 && c < concept_count, ErrorCode::shape, "permutation entry out of range");
    require(!seen[static_cast<std::size_t>(c)], ErrorCode::shape, "permutation repeats a concept");
    seen[static_cast<std::size_t>(c)] = true;
  }
  require(encoder_weights.size() ==
              static_cast<std::size_t>(feature_dim) * static_cast<std::size_t>(concept_count),
          ErrorCode::shape, "encoder weight shape mismatch");
  require(encoder_bias.size() == static_cast<std::size_t>(concept_count), ErrorCode::shape,
          "encoder bias shape mismatch");
  if (mode == HeadMode::efficient) {
    require(heads.size() == 1, ErrorCode::shape, "efficient mode keeps exactly one shared matrix");
    require(heads[0].level == concept_count, ErrorCode::shape, "shared matrix must have width K");
  } else {
    require(heads.size() == schedule.levels.size(), ErrorCode::shape,
            "standard mode needs one head per schedule level");
    for (std::size_t i = 0; i < heads.size(); ++i) {
      require(heads[i].level == schedule.levels[i], ErrorCode::shape,
              "head levels must mirror the schedule");
    }
  }
  for (const Head& head : heads) {
    require(head.weights.size() ==
                static_cast<std::size_t>(class_count) * static_cast<std::size_t>(head.level),
            ErrorCode::shape, "head weight shape mismatch");
    require(head.bias.size() == static_cast<std::size_t>(class_count), ErrorCode::shape,
            "head bias shape mismatch");
  }
}

MatryoshkaModel init_model(int feature_dim, int concept_count, int class_count,
                           NestingSchedule schedule, HeadMode mode, TrainingMode training,
                           const ConceptRanking& ranking, std::uint64_t seed) {
  require(feature_dim >= 1, ErrorCode::spec, "feature_dim must be >= 1");
  require(concept_count >= 1, ErrorCode::spec, "concept_count must be >= 1");
  require(class_count >= 2, ErrorCode::spec, "class_count must be >= 2");
  schedule.validate(concept_count);
  require(ranking.size() == concept_count, ErrorCode::spec, "ranking must cover all concepts");
  ranking.validate();

  MatryoshkaModel model;
  model.feature_dim = feature_dim;
  model.concept_count = concept_count;
  model.class_count = class_count;
  model.mode = mode;
  model.training = training;
  model.schedule = std::move(schedule);
  model.permutation = ranking.order;

  CounterRng rng(seed, 7);
  auto uniform_signed = [&rng](double range) { return (2.0 * rng.next_double() - 1.0) * range; };

  const double encoder_range = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  model.encoder_weights.resize(static_cast<std::size_t>(feature_dim) *
                               static_cast<std::size_t>(concept_count));
  for (auto& w : model.encoder_weights) w = uniform_signed(encoder_range);
  model.encoder_bias.assign(static_cast<std::size_t>(concept_count), 0.0);

  auto make_head = [&](int level) {
    Head head;
    head.level = level;
    const double range = 1.0 / std::sqrt(static_cast<double>(level));
    head.weights.resize(static_cast<std::size_t>(class_count) * static_cast<std::size_t>(level));
    for (auto& w : head.weights) w = uniform_signed(range);
    head.bias.assign(static_cast<std::size_t>(class_count), 0.0);
    return head;
  };

  if (mode == HeadMode::efficient) {
    model.heads.push_back(make_head(concept_count));
  } else {
    for (int level : model.schedule.levels) model.heads.push_back(make_head(level));
  }
  model.validate();
  return model;
}

void Gradients::resize_like(const MatryoshkaModel& model) {
  encoder_weights.assign(model.encoder_weights.size(), 0.0);
  encoder_bias.assign(model.encoder_bias.size(), 0.0);
  head_weights.resize(model.heads.size());
  head_bias.resize(model.heads.size());
  for (std::size_t h = 0; h < model.heads.size(); ++h) {
    head_weights[h].assign(model.heads[h].weights.size(), 0.0);
    head_bias[h].assign(model.heads[h].bias.size(), 0.0);
  }
}

void Gradients::clear() {
  std::fill(encoder_weights.begin(), encoder_weights.end(), 0.0);
  std::fill(encoder_bias.begin(), encoder_bias.end(), 0.0);
  for (auto& w : head_weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : head_bias) std::fill(b.begin(), b.end(), 0.0);
}

double batch_loss_and_gradients(const MatryoshkaModel& model, const Dataset& data,
                                std::span<const std::size_t> batch, const LossConfig& config,
                                LossPhase phase, std::span<const int> active_levels,
                                Gradients* grads, std::vector<double>* ordered_grad_sq) {
  require(!batch.empty(), ErrorCode::shape, "empty batch");
  require(data.feature_dim == model.feature_dim && data.concept_count() == model.concept_count &&
              data.class_count <= model.class_count,
          ErrorCode::shape, "model and dataset dimensions disagree");

  const auto k = static_cast<std::size_t>(model.concept_count);
  const double batch_n = static_cast<double>(batch.size());
  const bool use_concept = phase != LossPhase::task_only;
  const bool use_task = phase != LossPhase::concept_only;
  // Sequential phase one trains on the concept loss alone, unweighted.
  const double concept_weight = phase == LossPhase::concept_only ? 1.0 : config.alpha;

  std::vector<int> levels(active_levels.begin(), active_levels.end());
  if (levels.empty()) levels = model.schedule.levels;

  double total_loss = 0.0;
  std::vector<double> logit_grad(k);
  std::vector<double> ordered_grad(k);

  for (std::size_t index : batch) {
    const auto features = data.feature_row(index);
    const auto bits = data.concept_row(index);
    const int label = data.labels[index];

    const auto logits = model.concept_logits(features);
    std::vector<double> ordered(k);
    for (std::size_t t = 0; t < k; ++t) {
      ordered[t] = sigmoid(logits[static_cast<std::size_t>(model.permutation[t])]);
    }

    std::fill(logit_grad.begin(), logit_grad.end(), 0.0);
    std::fill(ordered_grad.begin(), ordered_grad.end(), 0.0);

    if (use_concept && concept_weight > 0.0) {
      const double scale = concept_weight / (batch_n * static_cast<double>(k));
      double bce = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double target = bits[j];
        bce += stable_bce(logits[j], target);
        logit_grad[j] += scale * (sigmoid(logits[j]) - target);
      }
      total_loss += concept_weight * bce / (batch_n * static_cast<double>(k));
    }

    if (use_task) {
      for (std::size_t li = 0; li < model.schedule.levels.size(); ++li) {
        const int d = model.schedule.levels[li];
        if (std::find(levels.begin(), levels.end(), d) == levels.end()) continue;
        const double lambda = config.lambda_at(li);
        if (lambda == 0.0) continue;

        auto scores = model.level_scores(ordered, d);
        const double lse = log_sum_exp(scores);
        total_loss += lambda * (lse - scores[static_cast<std::size_t>(label)]) / batch_n;

        if (grads != nullptr || ordered_grad_sq != nullptr) {
          const Head& head = model.head_for_level(d);
          const std::size_t h = static_cast<std::size_t>(&head - model.heads.data());
          const int width = head.level;
          for (int c = 0; c < model.class_count; ++c) {
            const double softmax_c = std::exp(scores[static_cast<std::size_t>(c)] - lse);
            const double dscore = lambda * (softmax_c - (c == label ? 1.0 : 0.0)) / batch_n;
            if (dscore == 0.0) continue;
            const double* row = head.weights.data() + static_cast<std::size_t>(c) * width;
            if (grads != nullptr) {
              double* grad_row = grads->head_weights[h].data() + static_cast<std::size_t>(c) * width;
              for (int t = 0; t < d; ++t) grad_row[t] += dscore * ordered[static_cast<std::size_t>(t)];
              grads->head_bias[h][static_cast<std::size_t>(c)] += dscore;
            }
            for (int t = 0; t < d; ++t) ordered_grad[static_cast<std::size_t>(t)] += dscore * row[t];
          }
        }
      }
    }

    if (ordered_grad_sq != nullptr) {
      for (std::size_t t = 0; t < k; ++t) {
        (*ordered_grad_sq)[t] += ordered_grad[t] * ordered_grad[t];
      }
    }

    if (grads != nullptr && phase != LossPhase::task_only) {
      // Route task gradients through the sigmoid and the permutation.
      for (std::size_t t = 0; t < k; ++t) {
        const double p = ordered[t];
        logit_grad[static_cast<std::size_t>(model.permutation[t])] += ordered_grad[t] * p * (1.0 - p);
      }
      for (int f = 0; f < model.feature_dim; ++f) {
        const double x = features[static_cast<std::size_t>(f)];
        if (x == 0.0) continue;
        double* grad_row = grads->encoder_weights.data() + static_cast<std::size_t>(f) * k;
        for (std::size_t j = 0; j < k; ++j) grad_row[j] += x * logit_grad[j];
      }
      for (std::size_t j = 0; j < k; ++j) grads->encoder_bias[j] += logit_grad[j];
    }
  }
  return total_loss;
}

namespace {

struct LevelEval {
  double loss = 0.0;
  double accuracy = 0.0;
};

LevelEval concept_eval(const MatryoshkaModel& model, const Dataset& data) {
  LevelEval out;
  const auto k = static_cast<std::size_t>(model.concept_count);
  long long correct = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto logits = model.concept_logits(data.feature_row(i));
    const auto bits = data.concept_row(i);
    for (std::size_t j = 0; j < k; ++j) {
      out.loss += stable_bce(logits[j], bits[j]);
      if ((logits[j] > 0.0) == (bits[j] == 1)) ++correct;
    }
  }
  const double denom = static_cast<double>(data.rows()) * static_cast<double>(k);
  out.loss /= denom;
  out.accuracy = static_cast<double>(correct) / denom;
  return out;
}

LevelEval task_eval(const MatryoshkaModel& model, const Dataset& data, int d) {
  LevelEval out;
  long long correct = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto ordered = model.ordered_probs(data.feature_row(i));
    const auto scores = model.level_scores(ordered, d);
    const double lse = log_sum_exp(scores);
    out.loss += lse - scores[static_cast<std::size_t>(data.labels[i])];
    if (argmax_lowest(scores) == data.labels[i]) ++correct;
  }
  out.loss /= static_cast<double>(data.rows());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.rows());
  return out;
}

void record_epoch(TrainHistory& history, const MatryoshkaModel& model, const Dataset& train_set,
                  const Dataset* val_set, int epoch, bool concept_rows, bool task_rows) {
  auto add = [&history, epoch](const std::string& split, int level, LevelEval eval) {
    history.records.push_back({epoch, level, split, eval.loss, eval.accuracy});
  };
  if (concept_rows) {
    add("train", 0, concept_eval(model, train_set));
    if (val_set != nullptr) add("val", 0, concept_eval(model, *val_set));
  }
  if (task_rows) {
    for (int d : model.schedule.levels) {
      add("train", d, task_eval(model, train_set, d));
      if (val_set != nullptr) add("val", d, task_eval(model, *val_set, d));
    }
  }
}

void run_phase(MatryoshkaModel& model, const Dataset& train_set, const Dataset* val_set,
               const LossConfig& config, LossPhase phase, int epoch_offset,
               TrainHistory& history, GradDiagnostics* diagnostics) {
  const std::size_t n = train_set.rows();
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);

  Gradients grads;
  grads.resize_like(model);

  const bool update_encoder = phase != LossPhase::task_only;
  const bool update_heads = phase != LossPhase::concept_only;
  const bool sample_level = model.mode == HeadMode::efficient &&
                            config.efficient_training == EfficientTraining::random_level &&
                            phase != LossPhase::concept_only;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    CounterRng shuffle_rng(config.seed, 101 + static_cast<std::uint64_t>(phase));
    CounterRng level_rng = CounterRng(config.seed, 211 + static_cast<std::uint64_t>(phase))
                               .substream(static_cast<std::uint64_t>(epoch));
    CounterRng epoch_rng = shuffle_rng.substream(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(indices);

    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::span<const std::size_t> batch(indices.data() + start, stop - start);

      std::vector<int> active;
      if (sample_level) {
        active.push_back(model.schedule.levels[static_cast<std::size_t>(
            level_rng.next_below(model.schedule.levels.size()))]);
      }

      grads.clear();
      const double loss = batch_loss_and_gradients(
          model, train_set, batch, config, phase, active, &grads,
          diagnostics != nullptr ? &diagnostics->ordered_grad_sq : nullptr);
      require(std::isfinite(loss), ErrorCode::diverged,
              "training diverged (non-finite loss) at epoch " +
                  std::to_string(epoch_offset + epoch + 1));

      const double lr = config.learning_rate;
      if (update_encoder) {
        for (std::size_t i = 0; i < model.encoder_weights.size(); ++i) {
          model.encoder_weights[i] -= lr * grads.encoder_weights[i];
        }
        for (std::size_t i = 0; i < model.encoder_bias.size(); ++i) {
          model.encoder_bias[i] -= lr * grads.encoder_bias[i];
        }
      }
      if (update_heads) {
        for (std::size_t h = 0; h < model.heads.size(); ++h) {
          for (std::size_t i = 0; i < model.heads[h].weights.size(); ++i) {
            model.heads[h].weights[i] -= lr * grads.head_weights[h][i];
          }
          for (std::size_t i = 0; i < model.heads[h].bias.size(); ++i) {
            model.heads[h].bias[i] -= lr * grads.head_bias[h][i];
          }
        }
      }
    }

    record_epoch(history, model, train_set, val_set, epoch_offset + epoch + 1,
                 phase != LossPhase::task_only, phase != LossPhase::concept_only);
  }
}

}  // namespace

TrainHistory train(MatryoshkaModel& model, const Dataset& train_set, const Dataset* val_set,
                   const LossConfig& config, GradDiagnostics* diagnostics) {
  model.validate();
  train_set.validate();
  config.validate(model.schedule.levels.size());
  require(train_set.rows() >= 1, ErrorCode::spec, "training set is empty");
  require(train_set.feature_dim == model.feature_dim &&
              train_set.concept_count() == model.concept_count &&
              train_set.class_count <= model.class_count,
          ErrorCode::shape, "model and dataset dimensions disagree");
  if (val_set != nullptr) {
    require(val_set->feature_dim == model.feature_dim &&
                val_set->concept_count() == model.concept_count &&
                val_set->class_count <= model.class_count,
            ErrorCode::shape, "model and validation set dimensions disagree");
  }

  if (diagnostics != nullptr) {
    diagnostics->ordered_grad_sq.assign(static_cast<std::size_t>(model.concept_count), 0.0);
  }

  TrainHistory history;
  if (model.training == TrainingMode::joint) {
    run_phase(model, train_set, val_set, config, LossPhase::joint, 0, history, diagnostics);
  } else {
    run_phase(model, train_set, val_set, config, LossPhase::concept_only, 0, history, nullptr);
    run_phase(model, train_set, val_set, config, LossPhase::task_only, config.epochs, history,
              diagnostics);
  }
  return history;
}

std::string history_to_csv(const TrainHistory& history) {
  std::string text = "epoch,level,split,loss,accuracy\n";
  for (const EpochRecord& r : history.records) {
    text += std::to_string(r.epoch);
    text += ',' + std::to_string(r.level);
    text += ',' + r.split;
    text += ',' + io::format_double(r.loss);
    text += ',' + io::format_double(r.accuracy);
    text += '\n';
  }
  return text;
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
  io::write_file_atomic(path, history_to_csv(history));
}

EvalResult evaluate(const MatryoshkaModel& model, const Dataset& dataset, int d) {
  require(dataset.rows() >= 1, ErrorCode::spec, "evaluate: empty dataset");
  require(dataset.feature_dim == model.feature_dim &&
              dataset.concept_count() == model.concept_count,
          ErrorCode::shape, "model and dataset dimensions disagree");
  model.resolve_level(d);

  const int c = model.class_count;
  std::vector<long long> true_positive(static_cast<std::size_t>(c), 0);
  std::vector<long long> false_positive(static_cast<std::size_t>(c), 0);
  std::vector<long long> false_negative(static_cast<std::size_t>(c), 0);
  long long correct = 0;

  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    const auto ordered = model.ordered_probs(dataset.feature_row(i));
    const int predicted = model.predict_class(ordered, d);
    const int truth = dataset.labels[i];
    if (predicted == truth) {
      ++correct;
      ++true_positive[static_cast<std::size_t>(truth)];
    } else {
      ++false_positive[static_cast<std::size_t>(predicted)];
      ++false_negative[static_cast<std::size_t>(truth)];
    }
  }

  EvalResult out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.rows());
  double f1_sum = 0.0;
  for (int y = 0; y < c; ++y) {
    const auto yi = static_cast<std::size_t>(y);
    const double tp = static_cast<double>(true_positive[yi]);
    const double denom = 2.0 * tp + static_cast<double>(false_positive[yi]) +
                         static_cast<double>(false_negative[yi]);
    f1_sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;  // empty-class F1 := 0
  }
  out.macro_f1 = f1_sum / static_cast<double>(c);
  return out;
}

std::vector<int> weight_based_order(const MatryoshkaModel& model) {
  const Head* widest = nullptr;
  for (const Head& head : model.heads) {
    if (head.level == model.concept_count) widest = &head;
  }
  require(widest != nullptr, ErrorCode::level, "weight_based_order needs a head of width K");

  const int k = model.concept_count;
  std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < model.class_count; ++c) {
    const double* row = widest->weights.data() + static_cast<std::size_t>(c) * k;
    for (int t = 0; t < k; ++t) {
      mass[static_cast<std::size_t>(model.permutation[static_cast<std::size_t>(t)])] += std::abs(row[t]);
    }
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&mass](int a, int b) {
    const double ma = mass[static_cast<std::size_t>(a)];
    const double mb = mass[static_cast<std::size_t>(b)];
    if (ma != mb) return ma > mb;
    return a < b;
  });
  return order;
}

namespace {

nlohmann::ordered_json head_to_json(const Head& head) {
  return nlohmann::ordered_json{{"level", head.level}, {"weights", head.weights}, {"bias", head.bias}};
}

Head head_from_json(const nlohmann::json& j) {
  Head head;
  head.level = j.at("level").get<int>();
  head.weights = j.at("weights").get<std::vector<double>>();
  head.bias = j.at("bias").get<std::vector<double>>();
  return head;
}

}  // namespace

std::string model_to_json(const MatryoshkaModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "mcbm-model";
  j["version"] = 1;
  j["mode"] = model.mode == HeadMode::standard ? "standard" : "efficient";
  j["training"] = model.training == TrainingMode::joint ? "joint" : "sequential";
  j["feature_dim"] = model.feature_dim;
  j["concept_count"] = model.concept_count;
  j["class_count"] = model.class_count;
  j["schedule"] = model.schedule.levels;
  j["permutation"] = model.permutation;
  j["encoder"] = nlohmann::ordered_json{{"weights", model.encoder_weights},
                                        {"bias", model.encoder_bias}};
  auto heads = nlohmann::ordered_json::array();
  for (const Head& head : model.heads) heads.push_back(head_to_json(head));
  j["heads"] = heads;
  return j.dump(2) + "\n";
}

void save_model_json(const MatryoshkaModel& model, const std::string& path) {
  io::write_file_atomic(path, model_to_json(model));
}

MatryoshkaModel load_model_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, "invalid model file " + path + ": " + e.what());
  }
  try {
    require(j.at("format") == "mcbm-model", ErrorCode::parse, "not a model file: " + path);
    require(j.at("version") == 1, ErrorCode::parse, "unsupported model version in " + path);
    MatryoshkaModel model;
    model.mode = j.at("mode") == "standard" ? HeadMode::standard : HeadMode::efficient;
    model.training = j.at("training") == "joint" ? TrainingMode::joint : TrainingMode::sequential;
    model.feature_dim = j.at("feature_dim").get<int>();
    model.concept_count = j.at("concept_count").get<int>();
    model.class_count = j.at("class_count").get<int>();
    model.schedule.levels = j.at("schedule").get<std::vector<int>>();
    model.permutation = j.at("permutation").get<std::vector<int>>();
    model.encoder_weights = j.at("encoder").at("weights").get<std::vector<double>>();
    model.encoder_bias = j.at("encoder").at("bias").get<std::vector<double>>();
    for (const auto& head : j.at("heads")) model.heads.push_back(head_from_json(head));
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, "invalid model file " + path + ": " + e.what());
  }
}

}  // namespace mcbm
