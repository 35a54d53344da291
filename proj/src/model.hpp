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
#include "info.hpp"

namespace mcbm {

/// Prefix lengths at which prediction heads exist; strictly increasing,
/// bounded by the concept count.
struct NestingSchedule {
  std::vector<int> levels;

  void validate(int concept_count) const;
  bool contains(int d) const;
  int widest() const { return levels.back(); }
};

enum class HeadMode { standard, efficient };
enum class TrainingMode { joint, sequential };
enum class EfficientTraining { all_levels, random_level };

struct LossConfig {
  double alpha = 1.0;            ///< weight on the concept alignment loss
  std::vector<double> lambdas;   ///< per-level task weights; empty = all 1
  int epochs = 50;
  double learning_rate = 0.1;
  int batch_size = 32;
  EfficientTraining efficient_training = EfficientTraining::all_levels;
  std::uint64_t seed = 0;

  void validate(std::size_t schedule_size) const;
  double lambda_at(std::size_t level_index) const;
};

struct Head {
  int level = 0;                 ///< prefix width this head consumes
  std::vector<double> weights;   ///< class_count x level, row-major
  std::vector<double> bias;      ///< class_count
};

/// Linear concept encoder plus nested linear heads over the mRMR-permuted
/// sigmoid concept probabilities. Standard mode keeps one head per schedule
/// level; efficient mode keeps a single class_count x concept_count matrix
/// that is prefix-masked on demand, so inference may stop at any width.
struct MatryoshkaModel {
  int feature_dim = 0;
  int concept_count = 0;
  int class_count = 0;
  HeadMode mode = HeadMode::standard;
  TrainingMode training = TrainingMode::joint;
  NestingSchedule schedule;
  std::vector<int> permutation;        ///< rank position -> original concept index
  std::vector<double> encoder_weights; ///< feature_dim x concept_count, row-major
  std::vector<double> encoder_bias;    ///< concept_count
  std::vector<Head> heads;

  /// Raw concept logits in original concept order.
  std::vector<double> concept_logits(std::span<const double> features) const;
  /// Sigmoid probabilities permuted into ranking order.
  std::vector<double> ordered_probs(std::span<const double> features) const;

  /// Class scores of the level-d head on the ordered prefix.
  std::vector<double> level_scores(std::span<const double> ordered, int d) const;
  /// Same scores via the literal mask broadcast over the shared matrix
  /// (efficient mode); bit-identical to level_scores.
  std::vector<double> level_scores_masked(std::span<const double> ordered, int d) const;

  /// Softmax class distribution at level d.
  std::vector<double> predict_at(std::span<const double> ordered, int d) const;
  int predict_class(std::span<const double> ordered, int d) const;

  /// Validates d for this mode and returns it (standard: d must be in the
  /// schedule; efficient: any d in [1, concept_count]).
  int resolve_level(int d) const;
  /// Widest usable level: last schedule entry (standard) or K (efficient).
  int widest_level() const;

  const Head& head_for_level(int d) const;
  void validate() const;
};

/// Binary prefix mask: exactly d leading ones.
std::vector<std::uint8_t> mask_for_level(int d, int concept_count);

MatryoshkaModel init_model(int feature_dim, int concept_count, int class_count,
                           NestingSchedule schedule, HeadMode mode, TrainingMode training,
                           const ConceptRanking& ranking, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  int level = 0;  ///< 0 = concept/encoder row, otherwise a schedule level
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
};

std::string history_to_csv(const TrainHistory& history);
void save_history_csv(const TrainHistory& history, const std::string& path);

/// Which loss terms a pass computes. Joint training uses `joint`; sequential
/// training runs `concept_only` (encoder) then `task_only` (frozen encoder).
enum class LossPhase { joint, concept_only, task_only };

struct Gradients {
  std::vector<double> encoder_weights;
  std::vector<double> encoder_bias;
  std::vector<std::vector<double>> head_weights;
  std::vector<std::vector<double>> head_bias;

  void resize_like(const MatryoshkaModel& model);
  void clear();
};

/// Mean loss over the batch; fills analytic gradients when `grads` is given.
/// `active_levels` restricts which schedule levels contribute task loss
/// (empty = all). `ordered_grad_sq`, when given, accumulates the squared
/// task-loss gradient on each ordered concept coordinate across samples.
double batch_loss_and_gradients(const MatryoshkaModel& model, const Dataset& data,
                                std::span<const std::size_t> batch, const LossConfig& config,
                                LossPhase phase, std::span<const int> active_levels,
                                Gradients* grads, std::vector<double>* ordered_grad_sq = nullptr);

struct GradDiagnostics {
  std::vector<double> ordered_grad_sq;  ///< per ordered coordinate, summed over samples
};

/// Mini-batch gradient descent under the joint objective (or the two-phase
/// sequential protocol). History rows: level 0 carries the concept loss and
/// bit accuracy; schedule levels carry task loss and accuracy per split.
TrainHistory train(MatryoshkaModel& model, const Dataset& train_set, const Dataset* val_set,
                   const LossConfig& config, GradDiagnostics* diagnostics = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

EvalResult evaluate(const MatryoshkaModel& model, const Dataset& dataset, int d);

/// Concepts sorted by descending column mass (sum of absolute weights) of the
/// width-K head; ties break toward the lower original concept index.
std::vector<int> weight_based_order(const MatryoshkaModel& model);

std::string model_to_json(const MatryoshkaModel& model);
void save_model_json(const MatryoshkaModel& model, const std::string& path);
MatryoshkaModel load_model_json(const std::string& path);

}  // namespace mcbm
