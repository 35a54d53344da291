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

#include "mcbm/mcbm.h"

#include <cstring>
#include <exception>
#include <numeric>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "info.hpp"
#include "intervene.hpp"
#include "model.hpp"
#include "theory.hpp"
#include "version.hpp"

namespace {

thread_local int g_last_code = MCBM_OK;
thread_local std::string g_last_message;

void set_last(int code, const std::string& message) {
  g_last_code = code;
  g_last_message = message;
}

int translate(const mcbm::Error& error) {
  return static_cast<int>(error.code());
}

/// Runs `fn`, translating exceptions into status codes + thread-local message.
template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    set_last(MCBM_OK, "");
    return MCBM_OK;
  } catch (const mcbm::Error& error) {
    set_last(translate(error), error.what());
    return translate(error);
  } catch (const std::exception& error) {
    set_last(MCBM_E_INTERNAL, error.what());
    return MCBM_E_INTERNAL;
  } catch (...) {
    set_last(MCBM_E_INTERNAL, "unknown error");
    return MCBM_E_INTERNAL;
  }
}

void check_arg(bool condition, const char* message) {
  mcbm::require(condition, mcbm::ErrorCode::spec, message);
}

}  // namespace

struct mcbm_dataset {
  mcbm::Dataset data;
};

struct mcbm_ranking {
  mcbm::ConceptRanking ranking;
};

struct mcbm_model {
  mcbm::MatryoshkaModel model;
};

namespace {

std::vector<int> ranking_or_identity(const mcbm_ranking* ranking, int concept_count) {
  if (ranking != nullptr) return ranking->ranking.order;
  std::vector<int> identity(static_cast<std::size_t>(concept_count));
  std::iota(identity.begin(), identity.end(), 0);
  return identity;
}

}  // namespace

extern "C" {

const char* mcbm_version(void) { return mcbm::kVersion; }

int mcbm_last_error_code(void) { return g_last_code; }

const char* mcbm_last_error_message(void) { return g_last_message.c_str(); }

int mcbm_dataset_load_csv(const char* path, mcbm_dataset** out) {
  return guarded([&] {
    check_arg(path != nullptr && out != nullptr, "null argument");
    *out = new mcbm_dataset{mcbm::load_csv(path)};
  });
}

int mcbm_dataset_load_cub(const char* attributes_path, const char* image_class_path,
                          const char* names_path, mcbm_dataset** out) {
  return guarded([&] {
    check_arg(attributes_path != nullptr && image_class_path != nullptr && out != nullptr,
              "null argument");
    *out = new mcbm_dataset{mcbm::load_cub_attributes(
        attributes_path, image_class_path, names_path != nullptr ? names_path : "")};
  });
}

void mcbm_synthetic_spec_init(mcbm_synthetic_spec* spec) {
  if (spec == nullptr) return;
  const mcbm::SyntheticSpec defaults;
  spec->levels = defaults.levels;
  spec->base_size = defaults.base_size;
  spec->growth_rate = defaults.growth_rate;
  spec->decay_rate = defaults.decay_rate;
  spec->classes = defaults.classes;
  spec->samples = defaults.samples;
  spec->redundancy_copies = defaults.redundancy_copies;
  spec->noise = defaults.noise;
  spec->seed = defaults.seed;
  spec->feature_dim = defaults.feature_dim;
  spec->feature_sigma = defaults.feature_sigma;
  spec->teacher_margin = defaults.teacher_margin;
}

int mcbm_dataset_generate(const mcbm_synthetic_spec* spec, mcbm_dataset** out,
                          int32_t* planted_levels) {
  return guarded([&] {
    check_arg(spec != nullptr && out != nullptr, "null argument");
    mcbm::SyntheticSpec cxx;
    cxx.levels = spec->levels;
    cxx.base_size = spec->base_size;
    cxx.growth_rate = spec->growth_rate;
    cxx.decay_rate = spec->decay_rate;
    cxx.classes = spec->classes;
    cxx.samples = spec->samples;
    cxx.redundancy_copies = spec->redundancy_copies;
    cxx.noise = spec->noise;
    cxx.seed = spec->seed;
    cxx.feature_dim = spec->feature_dim;
    cxx.feature_sigma = spec->feature_sigma;
    cxx.teacher_margin = spec->teacher_margin;
    auto generated = mcbm::generate_synthetic(cxx);
    if (planted_levels != nullptr) {
      for (std::size_t i = 0; i < generated.planted_level.size(); ++i) {
        planted_levels[i] = generated.planted_level[i];
      }
    }
    *out = new mcbm_dataset{std::move(generated.data)};
  });
}

int mcbm_dataset_split(const mcbm_dataset* dataset, double train_fraction, double val_fraction,
                       double test_fraction, uint64_t seed, mcbm_dataset** out_train,
                       mcbm_dataset** out_val, mcbm_dataset** out_test) {
  return guarded([&] {
    check_arg(dataset != nullptr && out_train != nullptr && out_val != nullptr &&
                  out_test != nullptr,
              "null argument");
    auto result = mcbm::split(dataset->data, train_fraction, val_fraction, test_fraction, seed);
    *out_train = new mcbm_dataset{std::move(result.train)};
    *out_val = new mcbm_dataset{std::move(result.val)};
    *out_test = new mcbm_dataset{std::move(result.test)};
  });
}

int mcbm_dataset_save_csv(const mcbm_dataset* dataset, const char* path) {
  return guarded([&] {
    check_arg(dataset != nullptr && path != nullptr, "null argument");
    mcbm::save_csv(dataset->data, path);
  });
}

int mcbm_dataset_select_concepts(const mcbm_dataset* dataset, const int32_t* keep, int32_t count,
                                 mcbm_dataset** out) {
  return guarded([&] {
    check_arg(dataset != nullptr && keep != nullptr && out != nullptr && count >= 1,
              "null argument");
    std::vector<int> indices(keep, keep + count);
    *out = new mcbm_dataset{dataset->data.select_concepts(indices)};
  });
}

int64_t mcbm_dataset_rows(const mcbm_dataset* dataset) {
  return dataset == nullptr ? 0 : static_cast<int64_t>(dataset->data.rows());
}

int32_t mcbm_dataset_concepts(const mcbm_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->data.concept_count();
}

int32_t mcbm_dataset_features(const mcbm_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->data.feature_dim;
}

int32_t mcbm_dataset_classes(const mcbm_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->data.class_count;
}

const char* mcbm_dataset_concept_name(const mcbm_dataset* dataset, int32_t index) {
  if (dataset == nullptr || index < 0 || index >= dataset->data.concept_count()) return nullptr;
  return dataset->data.concept_names[static_cast<std::size_t>(index)].c_str();
}

void mcbm_dataset_free(mcbm_dataset* dataset) { delete dataset; }

int mcbm_mutual_information(const int32_t* x, const int32_t* y, int64_t length, double* out_nats) {
  return guarded([&] {
    check_arg(x != nullptr && y != nullptr && out_nats != nullptr && length >= 1,
              "null argument");
    std::vector<int> xs(x, x + length);
    std::vector<int> ys(y, y + length);
    *out_nats = mcbm::mutual_information(xs, ys).value;
  });
}

int mcbm_mrmr_rank(const mcbm_dataset* dataset, mcbm_ranking** out) {
  return guarded([&] {
    check_arg(dataset != nullptr && out != nullptr, "null argument");
    *out = new mcbm_ranking{mcbm::mrmr_rank(dataset->data)};
  });
}

int mcbm_ranking_save_csv(const mcbm_ranking* ranking, const char* path) {
  return guarded([&] {
    check_arg(ranking != nullptr && path != nullptr, "null argument");
    mcbm::save_ranking_csv(ranking->ranking, path);
  });
}

int mcbm_ranking_load_csv(const char* path, mcbm_ranking** out) {
  return guarded([&] {
    check_arg(path != nullptr && out != nullptr, "null argument");
    *out = new mcbm_ranking{mcbm::load_ranking_csv(path)};
  });
}

int32_t mcbm_ranking_size(const mcbm_ranking* ranking) {
  return ranking == nullptr ? 0 : ranking->ranking.size();
}

int mcbm_ranking_order(const mcbm_ranking* ranking, int32_t* out, int32_t capacity) {
  return guarded([&] {
    check_arg(ranking != nullptr && out != nullptr, "null argument");
    check_arg(capacity >= ranking->ranking.size(), "output buffer too small");
    for (int t = 0; t < ranking->ranking.size(); ++t) {
      out[t] = ranking->ranking.order[static_cast<std::size_t>(t)];
    }
  });
}

void mcbm_ranking_free(mcbm_ranking* ranking) { delete ranking; }

int mcbm_rank_correlation(const int32_t* order_a, const int32_t* order_b, int32_t length,
                          double* out_spearman, double* out_kendall) {
  return guarded([&] {
    check_arg(order_a != nullptr && order_b != nullptr && length >= 2, "null argument");
    std::vector<int> a(order_a, order_a + length);
    std::vector<int> b(order_b, order_b + length);
    auto correlation = mcbm::rank_correlation(a, b);
    if (out_spearman != nullptr) *out_spearman = correlation.spearman;
    if (out_kendall != nullptr) *out_kendall = correlation.kendall;
  });
}

int mcbm_ranking_stability(const mcbm_dataset* dataset, const uint64_t* seeds, int32_t n_seeds,
                           double resample_fraction, const int32_t* prefix_sizes,
                           int32_t n_prefixes, double* out_iou) {
  return guarded([&] {
    check_arg(dataset != nullptr && seeds != nullptr && prefix_sizes != nullptr &&
                  out_iou != nullptr && n_seeds >= 1 && n_prefixes >= 1,
              "null argument");
    std::vector<std::uint64_t> seed_list(seeds, seeds + n_seeds);
    std::vector<int> prefixes(prefix_sizes, prefix_sizes + n_prefixes);
    auto iou = mcbm::ranking_stability(dataset->data, seed_list, resample_fraction, prefixes);
    for (int s = 0; s < n_seeds; ++s) {
      for (int p = 0; p < n_prefixes; ++p) {
        out_iou[s * n_prefixes + p] = iou[static_cast<std::size_t>(s)][static_cast<std::size_t>(p)];
      }
    }
  });
}

void mcbm_train_config_init(mcbm_train_config* config) {
  if (config == nullptr) return;
  const mcbm::LossConfig defaults;
  config->alpha = defaults.alpha;
  config->learning_rate = defaults.learning_rate;
  config->epochs = defaults.epochs;
  config->batch_size = defaults.batch_size;
  config->mode = MCBM_MODE_STANDARD;
  config->training = MCBM_TRAIN_JOINT;
  config->efficient_training = MCBM_LEVELS_ALL;
  config->seed = defaults.seed;
  config->lambdas = nullptr;
}

int mcbm_model_train(const mcbm_dataset* train_set, const mcbm_dataset* val_set,
                     const mcbm_ranking* ranking, const int32_t* schedule, int32_t schedule_len,
                     const mcbm_train_config* config, const char* history_csv_path,
                     mcbm_model** out) {
  return guarded([&] {
    check_arg(train_set != nullptr && ranking != nullptr && schedule != nullptr &&
                  config != nullptr && out != nullptr && schedule_len >= 1,
              "null argument");
    mcbm::NestingSchedule nesting;
    nesting.levels.assign(schedule, schedule + schedule_len);

    mcbm::LossConfig loss;
    loss.alpha = config->alpha;
    loss.learning_rate = config->learning_rate;
    loss.epochs = config->epochs;
    loss.batch_size = config->batch_size;
    loss.efficient_training = config->efficient_training == MCBM_LEVELS_RANDOM
                                  ? mcbm::EfficientTraining::random_level
                                  : mcbm::EfficientTraining::all_levels;
    loss.seed = config->seed;
    if (config->lambdas != nullptr) {
      loss.lambdas.assign(config->lambdas, config->lambdas + schedule_len);
    }

    auto model = mcbm::init_model(
        train_set->data.feature_dim, train_set->data.concept_count(), train_set->data.class_count,
        nesting,
        config->mode == MCBM_MODE_EFFICIENT ? mcbm::HeadMode::efficient : mcbm::HeadMode::standard,
        config->training == MCBM_TRAIN_SEQUENTIAL ? mcbm::TrainingMode::sequential
                                                  : mcbm::TrainingMode::joint,
        ranking->ranking, config->seed);
    auto history = mcbm::train(model, train_set->data,
                               val_set != nullptr ? &val_set->data : nullptr, loss);
    if (history_csv_path != nullptr) mcbm::save_history_csv(history, history_csv_path);
    *out = new mcbm_model{std::move(model)};
  });
}

int mcbm_model_save(const mcbm_model* model, const char* path) {
  return guarded([&] {
    check_arg(model != nullptr && path != nullptr, "null argument");
    mcbm::save_model_json(model->model, path);
  });
}

int mcbm_model_load(const char* path, mcbm_model** out) {
  return guarded([&] {
    check_arg(path != nullptr && out != nullptr, "null argument");
    *out = new mcbm_model{mcbm::load_model_json(path)};
  });
}

int mcbm_model_evaluate(const mcbm_model* model, const mcbm_dataset* dataset, int32_t level,
                        double* out_accuracy, double* out_macro_f1) {
  return guarded([&] {
    check_arg(model != nullptr && dataset != nullptr, "null argument");
    auto result = mcbm::evaluate(model->model, dataset->data, level);
    if (out_accuracy != nullptr) *out_accuracy = result.accuracy;
    if (out_macro_f1 != nullptr) *out_macro_f1 = result.macro_f1;
  });
}

int32_t mcbm_model_concepts(const mcbm_model* model) {
  return model == nullptr ? 0 : model->model.concept_count;
}

int32_t mcbm_model_classes(const mcbm_model* model) {
  return model == nullptr ? 0 : model->model.class_count;
}

int mcbm_model_schedule(const mcbm_model* model, int32_t* out, int32_t capacity) {
  return guarded([&] {
    check_arg(model != nullptr && out != nullptr, "null argument");
    const auto& levels = model->model.schedule.levels;
    check_arg(capacity >= static_cast<int32_t>(levels.size()), "output buffer too small");
    for (std::size_t i = 0; i < levels.size(); ++i) out[i] = levels[i];
  });
}

int mcbm_model_weight_order(const mcbm_model* model, int32_t* out, int32_t capacity) {
  return guarded([&] {
    check_arg(model != nullptr && out != nullptr, "null argument");
    check_arg(capacity >= model->model.concept_count, "output buffer too small");
    auto order = mcbm::weight_based_order(model->model);
    for (std::size_t i = 0; i < order.size(); ++i) out[i] = order[i];
  });
}

void mcbm_model_free(mcbm_model* model) { delete model; }

int mcbm_accuracy_at_k(const mcbm_model* model, const mcbm_dataset* dataset,
                       const mcbm_ranking* ranking, const int32_t* k_grid, int32_t n_k,
                       int32_t policy, double* out_accuracy, const char* trace_csv_path) {
  return guarded([&] {
    check_arg(model != nullptr && dataset != nullptr && k_grid != nullptr &&
                  out_accuracy != nullptr && n_k >= 1,
              "null argument");
    std::vector<int> grid(k_grid, k_grid + n_k);
    auto order = ranking_or_identity(ranking, model->model.concept_count);
    std::vector<mcbm::TraceRow> traces;
    auto curve = mcbm::accuracy_at_k(
        model->model, dataset->data, order, grid,
        policy == MCBM_POLICY_FULL_HEAD ? mcbm::HeadPolicy::full_head : mcbm::HeadPolicy::matched,
        trace_csv_path != nullptr ? &traces : nullptr);
    for (int i = 0; i < n_k; ++i) out_accuracy[i] = curve[static_cast<std::size_t>(i)].accuracy;
    if (trace_csv_path != nullptr) mcbm::save_traces_csv(traces, trace_csv_path);
  });
}

int mcbm_minimal_sufficient_levels(const mcbm_model* model, const mcbm_dataset* dataset,
                                   const mcbm_ranking* ranking, int32_t misclassified_only,
                                   int64_t* out_counts, int64_t* out_evaluated,
                                   const char* histogram_csv_path) {
  return guarded([&] {
    check_arg(model != nullptr && dataset != nullptr && out_counts != nullptr, "null argument");
    auto order = ranking_or_identity(ranking, model->model.concept_count);
    auto histogram = mcbm::minimal_sufficient_levels(model->model, dataset->data, order,
                                                     misclassified_only != 0);
    for (std::size_t i = 0; i < histogram.counts.size(); ++i) out_counts[i] = histogram.counts[i];
    out_counts[histogram.counts.size()] = histogram.never;
    if (out_evaluated != nullptr) *out_evaluated = histogram.evaluated;
    if (histogram_csv_path != nullptr) mcbm::save_histogram_csv(histogram, histogram_csv_path);
  });
}

int mcbm_fit_geometric_decay(const double* counts, int32_t n_levels, double* out_gamma,
                             double* out_r_squared, double* out_c) {
  return guarded([&] {
    check_arg(counts != nullptr && n_levels >= 1, "null argument");
    std::vector<double> values(counts, counts + n_levels);
    auto fit = mcbm::fit_geometric_decay(values);
    if (out_gamma != nullptr) *out_gamma = fit.gamma_hat;
    if (out_r_squared != nullptr) *out_r_squared = fit.r_squared;
    if (out_c != nullptr) *out_c = fit.c_hat;
  });
}

int mcbm_expected_cost(const double* counts, int32_t n_levels, double never_count,
                       const double* level_costs, double* out_cost) {
  return guarded([&] {
    check_arg(counts != nullptr && level_costs != nullptr && out_cost != nullptr && n_levels >= 1,
              "null argument");
    std::vector<double> values(counts, counts + n_levels);
    std::vector<double> costs(level_costs, level_costs + n_levels);
    *out_cost = mcbm::expected_cost(values, never_count, costs);
  });
}

int mcbm_regime_classify(double growth_rate, double decay_rate, int32_t* out_regime,
                         double* out_alpha) {
  return guarded([&] {
    check_arg(out_regime != nullptr, "null argument");
    auto result = mcbm::regime_classify(growth_rate, decay_rate);
    switch (result.regime) {
      case mcbm::Regime::efficient: *out_regime = MCBM_REGIME_EFFICIENT; break;
      case mcbm::Regime::balanced: *out_regime = MCBM_REGIME_BALANCED; break;
      case mcbm::Regime::heavy_tailed: *out_regime = MCBM_REGIME_HEAVY_TAILED; break;
    }
    if (out_alpha != nullptr) *out_alpha = result.alpha.value_or(0.0);
  });
}

int mcbm_expected_cost_bound(double growth_rate, double decay_rate, double base_size,
                             int32_t levels, double norm_const, double* out_bound) {
  return guarded([&] {
    check_arg(out_bound != nullptr, "null argument");
    mcbm::RegimeParams params{growth_rate, decay_rate, base_size, levels, norm_const};
    *out_bound = mcbm::expected_cost_bound(params);
  });
}

int mcbm_simulate_regimes(double growth_rate, double decay_rate, int32_t base_size,
                          const int32_t* level_grid, int32_t n_levels, int64_t samples,
                          uint64_t seed, double* out_e_empirical, double* out_e_bound,
                          double* out_alpha_fit, const char* csv_path) {
  return guarded([&] {
    check_arg(level_grid != nullptr && n_levels >= 1, "null argument");
    std::vector<int> grid(level_grid, level_grid + n_levels);
    auto table = mcbm::simulate_regimes(growth_rate, decay_rate, base_size, grid, samples, seed);
    for (int i = 0; i < n_levels; ++i) {
      if (out_e_empirical != nullptr) out_e_empirical[i] = table.rows[static_cast<std::size_t>(i)].e_empirical;
      if (out_e_bound != nullptr) out_e_bound[i] = table.rows[static_cast<std::size_t>(i)].e_bound;
    }
    if (out_alpha_fit != nullptr) *out_alpha_fit = table.alpha_fit;
    if (csv_path != nullptr) mcbm::save_regime_table_csv(table, csv_path);
  });
}

int mcbm_hellman_raviv_report(const mcbm_model* model, const mcbm_dataset* dataset,
                              const mcbm_ranking* ranking, const int32_t* k_grid, int32_t n_k,
                              const char* json_path) {
  return guarded([&] {
    check_arg(model != nullptr && dataset != nullptr && k_grid != nullptr && json_path != nullptr &&
                  n_k >= 1,
              "null argument");
    std::vector<int> grid(k_grid, k_grid + n_k);
    auto order = ranking_or_identity(ranking, model->model.concept_count);
    auto reports = mcbm::hellman_raviv_report(model->model, dataset->data, order, grid);
    mcbm::save_bound_reports_json(reports, {}, json_path);
  });
}

}  // extern "C"
