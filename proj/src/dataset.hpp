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

namespace mcbm {

/// Tabular concept dataset: N feature rows, N binary concept rows, N labels.
struct Dataset {
  std::vector<double> features;        ///< N x F, row-major
  std::vector<std::uint8_t> concepts;  ///< N x K, row-major, entries 0/1
  std::vector<int> labels;             ///< N, values in [0, class_count)
  std::vector<std::string> concept_names;  ///< K unique names
  int feature_dim = 0;
  int class_count = 0;

  std::size_t rows() const { return labels.size(); }
  int concept_count() const { return static_cast<int>(concept_names.size()); }

  std::span<const double> feature_row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(feature_dim),
            static_cast<std::size_t>(feature_dim)};
  }
  std::span<const std::uint8_t> concept_row(std::size_t i) const {
    auto k = static_cast<std::size_t>(concept_count());
    return {concepts.data() + i * k, k};
  }

  /// Column j as an int series (for information-theoretic routines).
  std::vector<int> concept_column(int j) const;

  /// Copy with only the listed concept columns (original order preserved).
  Dataset select_concepts(std::span<const int> keep) const;

  /// Throws if any structural invariant is broken.
  void validate() const;
};

enum class DataFormat { csv, cub_attributes };

Dataset load_csv(const std::string& path);
void save_csv(const Dataset& dataset, const std::string& path);
std::string to_csv(const Dataset& dataset);

/// Loads whitespace-separated `image_id attribute_id is_present certainty`
/// rows (extra trailing columns ignored) plus the image->class sidecar.
/// Attribute presence is majority-voted per (class, attribute); every image
/// row receives its class-level concept vector. `names_path` may be empty, in
/// which case columns are named attr_1..attr_K.
Dataset load_cub_attributes(const std::string& attributes_path,
                            const std::string& image_class_path,
                            const std::string& names_path);

Dataset load_concept_dataset(const std::string& path, DataFormat format);

/// Parameters of the planted-structure generator. Concepts come in `levels`
/// blocks whose sizes grow geometrically by `growth_rate`; a sample's class
/// is decodable from the concept prefix up to its planted level, and planted
/// levels follow the truncated law P(level=i) proportional to decay^(i-1).
struct SyntheticSpec {
  int levels = 3;
  int base_size = 2;
  double growth_rate = 2.0;
  double decay_rate = 0.5;
  int classes = 4;
  std::int64_t samples = 1000;
  int redundancy_copies = 0;   ///< near-duplicate clones appended per informative concept
  double noise = 0.0;          ///< flip probability applied to observed concepts
  std::uint64_t seed = 0;
  int feature_dim = 0;         ///< 0 selects the default 2*K
  double feature_sigma = 0.1;  ///< Gaussian noise on the feature embedding
  double teacher_margin = 0.5; ///< required score margin of the planted decoders

  void validate() const;
  std::vector<int> level_sizes() const;
  int informative_concepts() const;
  int total_concepts() const;
};

/// Per-level affine decoders planted by the generator. Level i scores the
/// concept prefix covering blocks 1..i against one sign code per class and
/// outputs the argmax; by construction a sample decodes correctly exactly
/// from its planted level on. Sign codes keep the decoders linearly
/// separable with margin, so trained linear heads can recover them.
struct LevelTeacher {
  int classes = 0;
  std::vector<int> prefix_dims;               ///< cumulative block sizes
  std::vector<std::vector<double>> weights;   ///< per level: classes x prefix_dims[level]
  std::vector<std::vector<double>> biases;    ///< per level: classes

  int predict(std::span<const double> prefix, int level) const;
  int predict_bits(std::span<const std::uint8_t> bits, int level) const;
};

struct SyntheticDataset {
  Dataset data;
  std::vector<int> planted_level;  ///< 1-based level per sample
  LevelTeacher teacher;
  std::vector<int> level_sizes;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Deterministic disjoint partition; stratified per class when every class
/// has at least 3 samples.
SplitResult split(const Dataset& dataset, double train_fraction, double val_fraction,
                  double test_fraction, std::uint64_t seed);

}  // namespace mcbm
