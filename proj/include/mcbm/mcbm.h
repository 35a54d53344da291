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

/* C binding of the MCBM library: concept datasets, mRMR ordering, nested
 * (Matryoshka) prediction heads, intervention simulation, and the cost-regime
 * and error-bound analyzers. All functions return MCBM_OK or an error code;
 * the message for the most recent failure on the calling thread is available
 * via mcbm_last_error_message(). Handles are opaque and must be released with
 * their matching *_free function. */

#ifndef MCBM_H
#define MCBM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  MCBM_OK = 0,
  MCBM_E_SPEC = 1,      /* parameter outside its documented domain */
  MCBM_E_PARSE = 2,     /* malformed input file */
  MCBM_E_SHAPE = 3,     /* dimension mismatch */
  MCBM_E_LEVEL = 4,     /* nesting level unsupported by the model */
  MCBM_E_CAPACITY = 5,  /* exact enumeration too large */
  MCBM_E_DIVERGED = 6,  /* training produced a non-finite loss */
  MCBM_E_IO = 7,        /* file could not be read or written */
  MCBM_E_FIT = 8,       /* not enough data to fit */
  MCBM_E_INTERNAL = 9
};

enum { MCBM_MODE_STANDARD = 0, MCBM_MODE_EFFICIENT = 1 };
enum { MCBM_TRAIN_JOINT = 0, MCBM_TRAIN_SEQUENTIAL = 1 };
enum { MCBM_LEVELS_ALL = 0, MCBM_LEVELS_RANDOM = 1 };
enum { MCBM_POLICY_MATCHED = 0, MCBM_POLICY_FULL_HEAD = 1 };
enum { MCBM_REGIME_EFFICIENT = 0, MCBM_REGIME_BALANCED = 1, MCBM_REGIME_HEAVY_TAILED = 2 };

typedef struct mcbm_dataset mcbm_dataset;
typedef struct mcbm_ranking mcbm_ranking;
typedef struct mcbm_model mcbm_model;

const char* mcbm_version(void);
int mcbm_last_error_code(void);
const char* mcbm_last_error_message(void);

/* ---------------------------------------------------------------- datasets */

int mcbm_dataset_load_csv(const char* path, mcbm_dataset** out);

/* attributes file: image_id attribute_id is_present certainty rows;
 * image_class file: image_id class_id rows; names file optional (NULL). */
int mcbm_dataset_load_cub(const char* attributes_path, const char* image_class_path,
                          const char* names_path, mcbm_dataset** out);

typedef struct mcbm_synthetic_spec {
  int32_t levels;
  int32_t base_size;
  double growth_rate;
  double decay_rate;
  int32_t classes;
  int64_t samples;
  int32_t redundancy_copies;
  double noise;
  uint64_t seed;
  int32_t feature_dim;    /* 0 selects the default 2*K */
  double feature_sigma;
  double teacher_margin;
} mcbm_synthetic_spec;

void mcbm_synthetic_spec_init(mcbm_synthetic_spec* spec);

/* planted_levels (optional, length spec->samples) receives the 1-based level
 * from which each sample's class is decodable. */
int mcbm_dataset_generate(const mcbm_synthetic_spec* spec, mcbm_dataset** out,
                          int32_t* planted_levels);

int mcbm_dataset_split(const mcbm_dataset* dataset, double train_fraction, double val_fraction,
                       double test_fraction, uint64_t seed, mcbm_dataset** out_train,
                       mcbm_dataset** out_val, mcbm_dataset** out_test);

int mcbm_dataset_save_csv(const mcbm_dataset* dataset, const char* path);
int mcbm_dataset_select_concepts(const mcbm_dataset* dataset, const int32_t* keep, int32_t count,
                                 mcbm_dataset** out);

int64_t mcbm_dataset_rows(const mcbm_dataset* dataset);
int32_t mcbm_dataset_concepts(const mcbm_dataset* dataset);
int32_t mcbm_dataset_features(const mcbm_dataset* dataset);
int32_t mcbm_dataset_classes(const mcbm_dataset* dataset);
const char* mcbm_dataset_concept_name(const mcbm_dataset* dataset, int32_t index);

void mcbm_dataset_free(mcbm_dataset* dataset);

/* -------------------------------------------------------- mRMR / rankings */

/* Plug-in mutual information of two discrete series, in nats. */
int mcbm_mutual_information(const int32_t* x, const int32_t* y, int64_t length, double* out_nats);

int mcbm_mrmr_rank(const mcbm_dataset* dataset, mcbm_ranking** out);
int mcbm_ranking_save_csv(const mcbm_ranking* ranking, const char* path);
int mcbm_ranking_load_csv(const char* path, mcbm_ranking** out);
int32_t mcbm_ranking_size(const mcbm_ranking* ranking);
/* Copies the permutation (concept index per rank) into `out`. */
int mcbm_ranking_order(const mcbm_ranking* ranking, int32_t* out, int32_t capacity);
void mcbm_ranking_free(mcbm_ranking* ranking);

int mcbm_rank_correlation(const int32_t* order_a, const int32_t* order_b, int32_t length,
                          double* out_spearman, double* out_kendall);

/* out_iou is seed-major: out_iou[s * n_prefixes + p]. */
int mcbm_ranking_stability(const mcbm_dataset* dataset, const uint64_t* seeds, int32_t n_seeds,
                           double resample_fraction, const int32_t* prefix_sizes,
                           int32_t n_prefixes, double* out_iou);

/* ------------------------------------------------------------------ model */

typedef struct mcbm_train_config {
  double alpha;
  double learning_rate;
  int32_t epochs;
  int32_t batch_size;
  int32_t mode;               /* MCBM_MODE_* */
  int32_t training;           /* MCBM_TRAIN_* */
  int32_t efficient_training; /* MCBM_LEVELS_* */
  uint64_t seed;
  const double* lambdas;      /* optional, length = schedule length */
} mcbm_train_config;

void mcbm_train_config_init(mcbm_train_config* config);

int mcbm_model_train(const mcbm_dataset* train_set, const mcbm_dataset* val_set,
                     const mcbm_ranking* ranking, const int32_t* schedule, int32_t schedule_len,
                     const mcbm_train_config* config, const char* history_csv_path,
                     mcbm_model** out);

int mcbm_model_save(const mcbm_model* model, const char* path);
int mcbm_model_load(const char* path, mcbm_model** out);
int mcbm_model_evaluate(const mcbm_model* model, const mcbm_dataset* dataset, int32_t level,
                        double* out_accuracy, double* out_macro_f1);
int32_t mcbm_model_concepts(const mcbm_model* model);
int32_t mcbm_model_classes(const mcbm_model* model);
int mcbm_model_schedule(const mcbm_model* model, int32_t* out, int32_t capacity);
/* Concepts ordered by the absolute weight mass of the width-K head. */
int mcbm_model_weight_order(const mcbm_model* model, int32_t* out, int32_t capacity);
void mcbm_model_free(mcbm_model* model);

/* ----------------------------------------------------------- intervention */

/* ranking may be NULL to intervene in the model's own concept order.
 * out_accuracy has n_k entries; trace_csv_path is optional. */
int mcbm_accuracy_at_k(const mcbm_model* model, const mcbm_dataset* dataset,
                       const mcbm_ranking* ranking, const int32_t* k_grid, int32_t n_k,
                       int32_t policy, double* out_accuracy, const char* trace_csv_path);

/* out_counts has (schedule length + 1) entries; the last is the never
 * bucket. Returns the number of simulated samples via out_evaluated. */
int mcbm_minimal_sufficient_levels(const mcbm_model* model, const mcbm_dataset* dataset,
                                   const mcbm_ranking* ranking, int32_t misclassified_only,
                                   int64_t* out_counts, int64_t* out_evaluated,
                                   const char* histogram_csv_path);

int mcbm_fit_geometric_decay(const double* counts, int32_t n_levels, double* out_gamma,
                             double* out_r_squared, double* out_c);

int mcbm_expected_cost(const double* counts, int32_t n_levels, double never_count,
                       const double* level_costs, double* out_cost);

/* ----------------------------------------------------------------- theory */

int mcbm_regime_classify(double growth_rate, double decay_rate, int32_t* out_regime,
                         double* out_alpha);

int mcbm_expected_cost_bound(double growth_rate, double decay_rate, double base_size,
                             int32_t levels, double norm_const, double* out_bound);

/* Simulates the truncated geometric stopping law for every L in the grid.
 * out_e_empirical/out_e_bound (optional) have n_levels entries; the fitted
 * log-log exponent lands in out_alpha_fit; csv_path (optional) receives the
 * regime table. */
int mcbm_simulate_regimes(double growth_rate, double decay_rate, int32_t base_size,
                          const int32_t* level_grid, int32_t n_levels, int64_t samples,
                          uint64_t seed, double* out_e_empirical, double* out_e_bound,
                          double* out_alpha_fit, const char* csv_path);

/* Writes the per-k error-bound report as JSON; ranking may be NULL for the
 * model's own order. */
int mcbm_hellman_raviv_report(const mcbm_model* model, const mcbm_dataset* dataset,
                              const mcbm_ranking* ranking, const int32_t* k_grid, int32_t n_k,
                              const char* json_path);

#ifdef __cplusplus
}
#endif

#endif /* MCBM_H */
