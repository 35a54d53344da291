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

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace mcbm {

namespace {

constexpr std::uint64_t kTeacherStream = 1;
constexpr std::uint64_t kEmbedStream = 2;
constexpr std::uint64_t kSplitStream = 3;
constexpr std::uint64_t kSampleStreamBase = 1ULL << 32;

constexpr double kCloneFlipNoise = 0.02;
constexpr int kEnumerationCap = 12;  // blocks up to 2^12 patterns are enumerated

bool is_feature_name(const std::string& name) {
  return name.rfind("f_", 0) == 0;
}

}  // namespace

std::vector<int> Dataset::concept_column(int j) const {
  require(j >= 0 && j < concept_count(), ErrorCode::shape, "concept column out of range");
  std::vector<int> column(rows());
  const auto k = static_cast<std::size_t>(concept_count());
  for (std::size_t i = 0; i < rows(); ++i) {
    column[i] = concepts[i * k + static_cast<std::size_t>(j)];
  }
  return column;
}

Dataset Dataset::select_concepts(std::span<const int> keep) const {
  Dataset out;
  out.feature_dim = feature_dim;
  out.class_count = class_count;
  out.features = features;
  out.labels = labels;
  const auto k = static_cast<std::size_t>(concept_count());
  out.concept_names.reserve(keep.size());
  for (int j : keep) {
    require(j >= 0 && j < concept_count(), ErrorCode::shape, "select_concepts: column out of range");
    out.concept_names.push_back(concept_names[static_cast<std::size_t>(j)]);
  }
  out.concepts.resize(rows() * keep.size());
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t t = 0; t < keep.size(); ++t) {
      out.concepts[i * keep.size() + t] = concepts[i * k + static_cast<std::size_t>(keep[t])];
    }
  }
  out.validate();
  return out;
}

void Dataset::validate() const {
  const std::size_t n = rows();
  const auto k = static_cast<std::size_t>(concept_count());
  require(features.size() == n * static_cast<std::size_t>(feature_dim), ErrorCode::shape,
          "features size does not match rows x feature_dim");
  require(concepts.size() == n * k, ErrorCode::shape, "concepts size does not match rows x concepts");
  require(n == 0 || class_count >= 1, ErrorCode::shape, "class_count must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    require(labels[i] >= 0 && labels[i] < class_count, ErrorCode::shape,
            "label out of range at row " + std::to_string(i + 1));
  }
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    require(concepts[i] == 0 || concepts[i] == 1, ErrorCode::shape, "concept entries must be 0 or 1");
  }
  std::set<std::string> seen;
  for (const auto& name : concept_names) {
    require(!name.empty(), ErrorCode::shape, "empty concept name");
    require(seen.insert(name).second, ErrorCode::shape, "duplicate concept name: " + name);
  }
}

Dataset load_csv(const std::string& path) {
  const std::string text = io::read_file(path);
  auto lines = io::split_lines(text);
  require(!lines.empty() && !lines[0].empty(), ErrorCode::parse, "empty dataset: " + path);

  auto header = io::split(lines[0], ',');
  require(header.size() >= 2, ErrorCode::parse, "header must contain label and at least one concept");
  require(header[0] == "label", ErrorCode::parse, "first header column must be 'label'");

  Dataset out;
  std::size_t col = 1;
  while (col < header.size() && !is_feature_name(header[col])) {
    out.concept_names.push_back(header[col]);
    ++col;
  }
  const int k = static_cast<int>(out.concept_names.size());
  require(k >= 1, ErrorCode::parse, "no concept columns found in header");
  const std::size_t feature_start = col;
  for (; col < header.size(); ++col) {
    require(is_feature_name(header[col]), ErrorCode::parse,
            "feature columns (f_*) must come after all concept columns");
  }
  out.feature_dim = static_cast<int>(header.size() - feature_start);

  int max_label = -1;
  for (std::size_t line_no = 1; line_no < lines.size(); ++line_no) {
    const std::string& line = lines[line_no];
    if (line.empty()) continue;
    auto fields = io::split(line, ',');
    require(fields.size() == header.size(), ErrorCode::parse,
            "line " + std::to_string(line_no + 1) + ": expected " + std::to_string(header.size()) +
                " columns, got " + std::to_string(fields.size()));
    const std::string where = "line " + std::to_string(line_no + 1);
    long long label = io::parse_int(fields[0], where + " col 1");
    require(label >= 0, ErrorCode::parse, where + " col 1: label must be non-negative");
    out.labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
    for (int j = 0; j < k; ++j) {
      const std::string& cell = fields[static_cast<std::size_t>(j) + 1];
      require(cell == "0" || cell == "1", ErrorCode::parse,
              where + " col " + std::to_string(j + 2) + ": concept cell must be 0 or 1, got '" + cell + "'");
      out.concepts.push_back(cell == "1" ? 1 : 0);
    }
    for (std::size_t f = feature_start; f < header.size(); ++f) {
      out.features.push_back(io::parse_double(fields[f], where + " col " + std::to_string(f + 1)));
    }
  }
  require(!out.labels.empty(), ErrorCode::parse, "empty dataset: " + path);
  out.class_count = max_label + 1;
  out.validate();
  return out;
}

std::string to_csv(const Dataset& dataset) {
  std::string text = "label";
  for (const auto& name : dataset.concept_names) {
    text += ',';
    text += name;
  }
  for (int f = 1; f <= dataset.feature_dim; ++f) {
    text += ",f_" + std::to_string(f);
  }
  text += '\n';
  const auto k = static_cast<std::size_t>(dataset.concept_count());
  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    text += std::to_string(dataset.labels[i]);
    for (std::size_t j = 0; j < k; ++j) {
      text += dataset.concepts[i * k + j] ? ",1" : ",0";
    }
    auto row = dataset.feature_row(i);
    for (double v : row) {
      text += ',';
      text += io::format_double(v);
    }
    text += '\n';
  }
  return text;
}

void save_csv(const Dataset& dataset, const std::string& path) {
  io::write_file_atomic(path, to_csv(dataset));
}

namespace {

std::vector<std::string> whitespace_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

Dataset load_cub_attributes(const std::string& attributes_path,
                            const std::string& image_class_path,
                            const std::string& names_path) {
  std::map<long long, int> image_class;
  {
    auto lines = io::split_lines(io::read_file(image_class_path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto tokens = whitespace_tokens(lines[i]);
      require(tokens.size() >= 2, ErrorCode::parse,
              image_class_path + " line " + std::to_string(i + 1) + ": expected image_id class_id");
      const std::string where = image_class_path + " line " + std::to_string(i + 1);
      long long image = io::parse_int(tokens[0], where);
      long long cls = io::parse_int(tokens[1], where);
      image_class[image] = static_cast<int>(cls);
    }
    require(!image_class.empty(), ErrorCode::parse, "empty dataset: " + image_class_path);
  }

  std::vector<std::string> names;
  if (!names_path.empty()) {
    auto lines = io::split_lines(io::read_file(names_path));
    std::map<long long, std::string> by_id;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto tokens = whitespace_tokens(lines[i]);
      require(tokens.size() >= 2, ErrorCode::parse,
              names_path + " line " + std::to_string(i + 1) + ": expected attribute_id name");
      long long id = io::parse_int(tokens[0], names_path + " line " + std::to_string(i + 1));
      by_id[id] = tokens[1];
    }
    require(!by_id.empty(), ErrorCode::parse, "empty attribute name file: " + names_path);
    long long expected = 1;
    for (const auto& [id, name] : by_id) {
      require(id == expected, ErrorCode::parse, names_path + ": attribute ids must be contiguous from 1");
      names.push_back(name);
      ++expected;
    }
  }

  // votes[(class, attribute)] = {present_votes, total_votes}
  std::map<std::pair<int, int>, std::pair<long long, long long>> votes;
  long long max_attribute = 0;
  {
    auto lines = io::split_lines(io::read_file(attributes_path));
    bool any = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto tokens = whitespace_tokens(lines[i]);
      const std::string where = attributes_path + " line " + std::to_string(i + 1);
      require(tokens.size() >= 4, ErrorCode::parse,
              where + ": expected image_id attribute_id is_present certainty");
      long long image = io::parse_int(tokens[0], where);
      long long attribute = io::parse_int(tokens[1], where);
      long long present = io::parse_int(tokens[2], where);
      require(present == 0 || present == 1, ErrorCode::parse, where + ": is_present must be 0 or 1");
      require(attribute >= 1, ErrorCode::parse, where + ": attribute ids are 1-based");
      if (!names.empty()) {
        require(attribute <= static_cast<long long>(names.size()), ErrorCode::parse,
                where + ": attribute id exceeds the name vocabulary");
      }
      auto it = image_class.find(image);
      require(it != image_class.end(), ErrorCode::parse,
              where + ": image " + std::to_string(image) + " has no class entry");
      max_attribute = std::max(max_attribute, attribute);
      auto& cell = votes[{it->second, static_cast<int>(attribute)}];
      cell.first += present;
      cell.second += 1;
      any = true;
    }
    require(any, ErrorCode::parse, "empty dataset: " + attributes_path);
  }

  const int k = names.empty() ? static_cast<int>(max_attribute) : static_cast<int>(names.size());
  if (names.empty()) {
    for (int j = 1; j <= k; ++j) names.push_back("attr_" + std::to_string(j));
  }

  // Remap class ids to [0, C) by ascending original id.
  std::map<int, int> class_remap;
  for (const auto& [image, cls] : image_class) class_remap.emplace(cls, 0);
  int next_class = 0;
  for (auto& [cls, mapped] : class_remap) mapped = next_class++;

  // Class-level concept vectors by strict majority vote.
  std::vector<std::uint8_t> class_concepts(static_cast<std::size_t>(next_class) * k, 0);
  for (const auto& [key, tally] : votes) {
    const auto [cls, attribute] = key;
    const auto [present, total] = tally;
    if (2 * present > total) {
      class_concepts[static_cast<std::size_t>(class_remap.at(cls)) * k + attribute - 1] = 1;
    }
  }

  Dataset out;
  out.concept_names = names;
  out.class_count = next_class;
  out.feature_dim = k;
  for (const auto& [image, cls] : image_class) {
    const int label = class_remap.at(cls);
    out.labels.push_back(label);
    const std::uint8_t* row = class_concepts.data() + static_cast<std::size_t>(label) * k;
    out.concepts.insert(out.concepts.end(), row, row + k);
    for (int j = 0; j < k; ++j) out.features.push_back(static_cast<double>(row[j]));
  }
  out.validate();
  return out;
}

Dataset load_concept_dataset(const std::string& path, DataFormat format) {
  if (format == DataFormat::csv) return load_csv(path);
  // Sidecars resolved next to the attribute file.
  std::string dir = ".";
  if (auto pos = path.find_last_of('/'); pos != std::string::npos) dir = path.substr(0, pos);
  std::string names = dir + "/attributes.txt";
  std::ifstream probe(names);
  return load_cub_attributes(path, dir + "/image_class.txt", probe.good() ? names : std::string());
}

void SyntheticSpec::validate() const {
  require(levels >= 1, ErrorCode::spec, "levels must be >= 1");
  require(base_size >= 1, ErrorCode::spec, "base_size must be >= 1");
  require(growth_rate > 1.0, ErrorCode::spec, "growth_rate must be > 1");
  require(decay_rate > 0.0 && decay_rate < 1.0, ErrorCode::spec, "decay_rate must lie in (0, 1)");
  require(classes >= 2, ErrorCode::spec, "classes must be >= 2");
  require(samples >= 1, ErrorCode::spec, "samples must be >= 1");
  require(redundancy_copies >= 0, ErrorCode::spec, "redundancy_copies must be >= 0");
  require(noise >= 0.0 && noise < 0.5, ErrorCode::spec, "noise must lie in [0, 0.5)");
  require(feature_dim >= 0, ErrorCode::spec, "feature_dim must be >= 0");
  require(feature_sigma >= 0.0, ErrorCode::spec, "feature_sigma must be >= 0");
  require(teacher_margin >= 0.0, ErrorCode::spec, "teacher_margin must be >= 0");
}

std::vector<int> SyntheticSpec::level_sizes() const {
  std::vector<int> sizes(static_cast<std::size_t>(levels));
  for (int i = 0; i < levels; ++i) {
    sizes[static_cast<std::size_t>(i)] =
        static_cast<int>(std::llround(base_size * std::pow(growth_rate, i)));
  }
  return sizes;
}

int SyntheticSpec::informative_concepts() const {
  int total = 0;
  for (int s : level_sizes()) total += s;
  return total;
}

int SyntheticSpec::total_concepts() const {
  return informative_concepts() * (1 + redundancy_copies);
}

int LevelTeacher::predict(std::span<const double> prefix, int level) const {
  const auto lvl = static_cast<std::size_t>(level);
  require(level >= 0 && lvl < weights.size(), ErrorCode::shape, "teacher level out of range");
  const int dim = prefix_dims[lvl];
  require(static_cast<int>(prefix.size()) >= dim, ErrorCode::shape, "teacher prefix too short");
  const auto& w = weights[lvl];
  const auto& b = biases[lvl];
  int best = 0;
  double best_score = -1e300;
  for (int c = 0; c < classes; ++c) {
    double score = b[static_cast<std::size_t>(c)];
    for (int t = 0; t < dim; ++t) score += w[static_cast<std::size_t>(c) * dim + t] * prefix[t];
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

int LevelTeacher::predict_bits(std::span<const std::uint8_t> bits, int level) const {
  std::vector<double> prefix(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) prefix[i] = bits[i];
  return predict(prefix, level);
}

namespace {

struct TeacherScores {
  int best = 0;
  double margin = 0.0;  // best score minus runner-up
};

TeacherScores score_prefix(const LevelTeacher& teacher, std::span<const std::uint8_t> bits, int level) {
  const int dim = teacher.prefix_dims[static_cast<std::size_t>(level)];
  const auto& w = teacher.weights[static_cast<std::size_t>(level)];
  const auto& b = teacher.biases[static_cast<std::size_t>(level)];
  TeacherScores out;
  double best = -1e300;
  double second = -1e300;
  for (int c = 0; c < teacher.classes; ++c) {
    double score = b[static_cast<std::size_t>(c)];
    for (int t = 0; t < dim; ++t) {
      if (bits[static_cast<std::size_t>(t)]) score += w[static_cast<std::size_t>(c) * dim + t];
    }
    if (score > best) {
      second = best;
      best = score;
      out.best = c;
    } else if (score > second) {
      second = score;
    }
  }
  out.margin = best - second;
  return out;
}

void random_block(CounterRng& rng, std::span<std::uint8_t> block) {
  for (auto& bit : block) bit = rng.next_bernoulli(0.5) ? 1 : 0;
}

void apply_pattern(std::span<std::uint8_t> block, std::uint64_t pattern) {
  for (std::size_t t = 0; t < block.size(); ++t) block[t] = (pattern >> t) & 1;
}

/// Draws one fresh sign-code block per class, keeping pairwise Hamming
/// distance at least max(1, block/4) whenever the block admits that many
/// separated patterns; separated block codes keep every class reachable
/// within its own block regardless of the earlier prefix.
std::vector<std::vector<std::int8_t>> draw_block_codes(CounterRng& rng, int classes, int block) {
  std::vector<std::vector<std::int8_t>> codes;
  const bool can_separate =
      block >= 20 || static_cast<std::uint64_t>(classes) <= (1ULL << block);
  const int min_distance = std::max(1, block / 4);
  for (int c = 0; c < classes; ++c) {
    std::vector<std::int8_t> code(static_cast<std::size_t>(block));
    std::vector<std::int8_t> best_code;
    int best_distance = -1;
    for (int attempt = 0; attempt < 256; ++attempt) {
      for (auto& entry : code) entry = rng.next_bernoulli(0.5) ? 1 : -1;
      int distance = block;
      for (const auto& other : codes) {
        int d = 0;
        for (std::size_t t = 0; t < code.size(); ++t) d += code[t] != other[t];
        distance = std::min(distance, d);
      }
      if (distance > best_distance) {
        best_distance = distance;
        best_code = code;
      }
      if (distance >= min_distance || !can_separate) break;
    }
    codes.push_back(best_code);
  }
  return codes;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::vector<int> sizes = spec.level_sizes();
  const int levels = spec.levels;
  const int informative = spec.informative_concepts();
  const int total = spec.total_concepts();
  const int feature_dim = spec.feature_dim > 0 ? spec.feature_dim : 2 * total;
  const auto n = static_cast<std::size_t>(spec.samples);

  CounterRng master(spec.seed);

  SyntheticDataset out;
  out.level_sizes = sizes;
  out.teacher.classes = spec.classes;
  out.teacher.prefix_dims.resize(static_cast<std::size_t>(levels));
  {
    // Nested sign codes: the level-i code of a class extends its level-(i-1)
    // code with a fresh block, and earlier blocks enter the level-i decoder
    // down-weighted by kDepthDecay per level. Scoring a 0/1 prefix x against
    // a code u is the affine map u.(2x-1): the argmax is the (weighted)
    // nearest code, distinct block patterns separate with margin >= 2, and a
    // block aligned with a class's own code always outweighs any earlier
    // deficit, so the planted structure is satisfiable for every class at
    // every level. Affine decoders keep the labels learnable by linear heads.
    constexpr double kDepthDecay = 0.25;
    CounterRng teacher_rng = master.substream(kTeacherStream);
    std::vector<std::vector<std::int8_t>> codes(static_cast<std::size_t>(spec.classes));
    std::vector<int> block_of_coord;
    int cum = 0;
    for (int i = 0; i < levels; ++i) {
      const auto fresh = draw_block_codes(teacher_rng, spec.classes, sizes[static_cast<std::size_t>(i)]);
      for (int c = 0; c < spec.classes; ++c) {
        codes[static_cast<std::size_t>(c)].insert(codes[static_cast<std::size_t>(c)].end(),
                                                  fresh[static_cast<std::size_t>(c)].begin(),
                                                  fresh[static_cast<std::size_t>(c)].end());
      }
      for (int t = 0; t < sizes[static_cast<std::size_t>(i)]; ++t) block_of_coord.push_back(i);
      cum += sizes[static_cast<std::size_t>(i)];
      out.teacher.prefix_dims[static_cast<std::size_t>(i)] = cum;
      auto& w = out.teacher.weights.emplace_back(static_cast<std::size_t>(spec.classes) * cum, 0.0);
      auto& b = out.teacher.biases.emplace_back(static_cast<std::size_t>(spec.classes), 0.0);
      for (int c = 0; c < spec.classes; ++c) {
        for (int t = 0; t < cum; ++t) {
          const double sign = codes[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
          const double weight = std::pow(kDepthDecay, i - block_of_coord[static_cast<std::size_t>(t)]);
          w[static_cast<std::size_t>(c) * cum + t] = 2.0 * sign * weight;
          b[static_cast<std::size_t>(c)] -= sign * weight;
        }
      }
    }
  }

  // Fixed embedding of the noiseless concept vector into feature space.
  std::vector<double> embedding(static_cast<std::size_t>(feature_dim) * total);
  {
    CounterRng embed_rng = master.substream(kEmbedStream);
    const double scale = 1.0 / std::sqrt(static_cast<double>(total));
    for (auto& v : embedding) v = embed_rng.next_gaussian() * scale;
  }

  // Truncated geometric law over planted levels.
  std::vector<double> level_weights(static_cast<std::size_t>(levels));
  for (int i = 0; i < levels; ++i) level_weights[static_cast<std::size_t>(i)] = std::pow(spec.decay_rate, i);

  Dataset& data = out.data;
  data.class_count = spec.classes;
  data.feature_dim = feature_dim;
  data.concepts.resize(n * static_cast<std::size_t>(total));
  data.features.resize(n * static_cast<std::size_t>(feature_dim));
  data.labels.resize(n);
  out.planted_level.resize(n);

  for (int j = 0; j < informative; ++j) {
    int level = 0;
    int offset = j;
    while (offset >= sizes[static_cast<std::size_t>(level)]) {
      offset -= sizes[static_cast<std::size_t>(level)];
      ++level;
    }
    data.concept_names.push_back("L" + std::to_string(level + 1) + "_c" + std::to_string(j + 1));
  }
  for (int copy = 1; copy <= spec.redundancy_copies; ++copy) {
    for (int j = 0; j < informative; ++j) {
      data.concept_names.push_back(data.concept_names[static_cast<std::size_t>(j)] + "_dup" +
                                   std::to_string(copy));
    }
  }

  std::vector<std::uint8_t> bits(static_cast<std::size_t>(informative));
  std::vector<int> block_start(static_cast<std::size_t>(levels));
  for (int i = 1; i < levels; ++i) {
    block_start[static_cast<std::size_t>(i)] =
        block_start[static_cast<std::size_t>(i - 1)] + sizes[static_cast<std::size_t>(i - 1)];
  }

  // Chooses block-i bits so the level-i decoder outputs `label` with margin:
  // rejection first, exhaustive search on small blocks, then the label's own
  // code block. With nested codes the aligned block never shrinks the
  // label's lead, so a class that won the previous level stays decodable.
  auto solve_block = [&](CounterRng& rng, const LevelTeacher& teacher, int level,
                         std::span<std::uint8_t> block, int label, double margin, int tries) {
    for (int t = 0; t < tries; ++t) {
      random_block(rng, block);
      TeacherScores scored = score_prefix(teacher, bits, level);
      if (scored.best == label && scored.margin >= margin) return true;
    }
    if (static_cast<int>(block.size()) <= kEnumerationCap) {
      double best_margin = -1e300;
      std::uint64_t best_pattern = 0;
      bool any = false;
      for (std::uint64_t pattern = 0; pattern < (1ULL << block.size()); ++pattern) {
        apply_pattern(block, pattern);
        TeacherScores scored = score_prefix(teacher, bits, level);
        if (scored.best == label && scored.margin > best_margin) {
          best_margin = scored.margin;
          best_pattern = pattern;
          any = true;
        }
      }
      if (any && best_margin > 0.0) {
        apply_pattern(block, best_pattern);
        return true;
      }
    }
    {
      const int dim = teacher.prefix_dims[static_cast<std::size_t>(level)];
      const auto& w = teacher.weights[static_cast<std::size_t>(level)];
      const int offset = dim - static_cast<int>(block.size());
      for (std::size_t t = 0; t < block.size(); ++t) {
        block[t] = w[static_cast<std::size_t>(label) * dim + offset + static_cast<int>(t)] > 0.0;
      }
      TeacherScores scored = score_prefix(teacher, bits, level);
      if (scored.best == label && scored.margin > 0.0) return true;
    }
    return false;
  };

  for (std::size_t s = 0; s < n; ++s) {
    CounterRng rng = master.substream(kSampleStreamBase + s);
    const int planted = rng.sample(level_weights);  // 0-based level index
    out.planted_level[s] = planted + 1;
    const int label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.classes)));

    bool sample_ok = false;
    for (int attempt = 0; attempt < 10000 && !sample_ok; ++attempt) {
      for (int i = 0; i < planted; ++i) {
        random_block(rng, std::span<std::uint8_t>(bits.data() + block_start[static_cast<std::size_t>(i)],
                                                  static_cast<std::size_t>(sizes[static_cast<std::size_t>(i)])));
      }
      std::span<std::uint8_t> planted_block(bits.data() + block_start[static_cast<std::size_t>(planted)],
                                            static_cast<std::size_t>(sizes[static_cast<std::size_t>(planted)]));
      if (!solve_block(rng, out.teacher, planted, planted_block, label, spec.teacher_margin, 64)) {
        continue;
      }

      // Earlier prefixes must not already decode the label.
      bool early_collision = false;
      for (int i = 0; i < planted; ++i) {
        if (score_prefix(out.teacher, bits, i).best == label) {
          early_collision = true;
          break;
        }
      }
      if (early_collision) continue;

      // Deeper prefixes must keep decoding the label, so every prefix from
      // the planted level on stays sufficient.
      bool deeper_ok = true;
      for (int i = planted + 1; i < levels && deeper_ok; ++i) {
        std::span<std::uint8_t> block(bits.data() + block_start[static_cast<std::size_t>(i)],
                                      static_cast<std::size_t>(sizes[static_cast<std::size_t>(i)]));
        deeper_ok = solve_block(rng, out.teacher, i, block, label, spec.teacher_margin, 200);
      }
      sample_ok = deeper_ok;
    }
    require(sample_ok, ErrorCode::spec,
            "synthetic generator could not satisfy the planted structure; relax teacher_margin");

    data.labels[s] = label;

    // Observed concepts: informative block with dataset flip noise, then the
    // clone blocks with their own fixed flip noise.
    std::uint8_t* row = data.concepts.data() + s * static_cast<std::size_t>(total);
    for (int j = 0; j < informative; ++j) {
      bool flip = spec.noise > 0.0 && rng.next_bernoulli(spec.noise);
      row[j] = flip ? (1 - bits[static_cast<std::size_t>(j)]) : bits[static_cast<std::size_t>(j)];
    }
    for (int copy = 1; copy <= spec.redundancy_copies; ++copy) {
      for (int j = 0; j < informative; ++j) {
        bool flip = rng.next_bernoulli(kCloneFlipNoise);
        row[copy * informative + j] =
            flip ? (1 - bits[static_cast<std::size_t>(j)]) : bits[static_cast<std::size_t>(j)];
      }
    }

    // Features embed the noiseless concept vector (clones share the source bit).
    double* feature_row = data.features.data() + s * static_cast<std::size_t>(feature_dim);
    for (int f = 0; f < feature_dim; ++f) {
      double value = 0.0;
      const double* embed_row = embedding.data() + static_cast<std::size_t>(f) * total;
      for (int j = 0; j < total; ++j) {
        if (bits[static_cast<std::size_t>(j % informative)]) value += embed_row[j];
      }
      feature_row[f] = value + spec.feature_sigma * rng.next_gaussian();
    }
  }

  data.validate();
  return out;
}

SplitResult split(const Dataset& dataset, double train_fraction, double val_fraction,
                  double test_fraction, std::uint64_t seed) {
  const double fractions[3] = {train_fraction, val_fraction, test_fraction};
  for (double f : fractions) {
    require(f > 0.0 && f < 1.0, ErrorCode::spec, "each split fraction must lie in (0, 1)");
  }
  require(std::abs(train_fraction + val_fraction + test_fraction - 1.0) <= 1e-9, ErrorCode::spec,
          "split fractions must sum to 1");
  const std::size_t n = dataset.rows();
  require(n >= 3, ErrorCode::spec, "split needs at least 3 rows");

  std::vector<std::vector<std::size_t>> groups;
  std::vector<long long> class_counts(static_cast<std::size_t>(dataset.class_count), 0);
  for (std::size_t i = 0; i < n; ++i) ++class_counts[static_cast<std::size_t>(dataset.labels[i])];
  bool stratify = true;
  for (long long c : class_counts) {
    if (c < 3) {
      stratify = false;
      break;
    }
  }

  if (stratify) {
    groups.resize(static_cast<std::size_t>(dataset.class_count));
    for (std::size_t i = 0; i < n; ++i) groups[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  } else {
    groups.emplace_back();
    groups[0].resize(n);
    for (std::size_t i = 0; i < n; ++i) groups[0][i] = i;
  }

  CounterRng master(seed, kSplitStream);
  std::vector<std::size_t> members[3];
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& indices = groups[g];
    CounterRng rng = master.substream(g);
    rng.shuffle(indices);

    // Largest-remainder allocation keeps the partition exhaustive.
    const auto m = static_cast<double>(indices.size());
    std::size_t counts[3];
    double remainders[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      double target = m * fractions[s];
      counts[s] = static_cast<std::size_t>(target);
      remainders[s] = target - static_cast<double>(counts[s]);
      assigned += counts[s];
    }
    while (assigned < indices.size()) {
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (remainders[s] > remainders[best]) best = s;
      }
      ++counts[best];
      remainders[best] = -1.0;
      ++assigned;
    }
    std::size_t cursor = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t t = 0; t < counts[s]; ++t) members[s].push_back(indices[cursor++]);
    }
  }

  auto take = [&dataset](std::vector<std::size_t>& indices) {
    std::sort(indices.begin(), indices.end());
    Dataset out;
    out.concept_names = dataset.concept_names;
    out.class_count = dataset.class_count;
    out.feature_dim = dataset.feature_dim;
    const auto k = static_cast<std::size_t>(dataset.concept_count());
    for (std::size_t i : indices) {
      out.labels.push_back(dataset.labels[i]);
      auto crow = dataset.concept_row(i);
      out.concepts.insert(out.concepts.end(), crow.begin(), crow.end());
      auto frow = dataset.feature_row(i);
      out.features.insert(out.features.end(), frow.begin(), frow.end());
    }
    (void)k;
    return out;
  };

  SplitResult result{take(members[0]), take(members[1]), take(members[2])};
  return result;
}

}  // namespace mcbm
