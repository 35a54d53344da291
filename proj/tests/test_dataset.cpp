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

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "dataset.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

using namespace mcbm;

namespace {

std::string data_dir() { return MCBM_TEST_DATA_DIR; }

std::string temp_path(const std::string& name) {
  return std::string("/tmp/mcbm_test_") + name;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("csv round trip preserves cells verbatim") {
  const std::string csv =
      "label,red,round,f_1,f_2\n"
      "0,1,0,0.5,-1.25\n"
      "1,0,1,2,0.125\n"
      "1,1,1,-3.5,0\n";
  const std::string path = temp_path("roundtrip.csv");
  write_text(path, csv);

  Dataset ds = load_csv(path);
  CHECK(ds.rows() == 3);
  CHECK(ds.concept_count() == 2);
  CHECK(ds.class_count == 2);
  CHECK(ds.feature_dim == 2);
  CHECK(ds.concept_names[0] == "red");
  CHECK(ds.labels == std::vector<int>{0, 1, 1});
  CHECK(ds.concepts == std::vector<std::uint8_t>{1, 0, 0, 1, 1, 1});
  CHECK(ds.features[1] == -1.25);

  CHECK(to_csv(ds) == csv);
}

TEST_CASE("csv loader names the offending cell") {
  const std::string path = temp_path("badcell.csv");
  write_text(path, "label,a,b\n0,1,0\n1,0,2\n");
  try {
    load_csv(path);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("col 3") != std::string::npos);
  }
}

TEST_CASE("csv loader rejects wrong column counts, bad labels, empty files") {
  const std::string path = temp_path("badrows.csv");
  write_text(path, "label,a\n0,1,1\n");
  CHECK_THROWS_AS(load_csv(path), Error);

  write_text(path, "label,a\n-1,1\n");
  CHECK_THROWS_AS(load_csv(path), Error);

  write_text(path, "");
  CHECK_THROWS_AS(load_csv(path), Error);

  write_text(path, "label,a\n");
  CHECK_THROWS_AS(load_csv(path), Error);
}

TEST_CASE("cub attributes aggregate to class level by majority vote") {
  const std::string dir = data_dir() + "/cub";
  Dataset ds = load_cub_attributes(dir + "/image_attribute_labels.txt", dir + "/image_class.txt",
                                   dir + "/attributes.txt");
  CHECK(ds.rows() == 12);
  CHECK(ds.concept_count() == 112);
  CHECK(ds.class_count == 4);
  CHECK(ds.concept_names[0] == "has_shape::perching-like");
  CHECK(ds.concept_names[111] == "has_eye_color::orange");

  // attr 1 is present for classes 1,2 and absent for 3,4; attr 3 has a 2/3
  // majority in class 1 only; attributes without rows default to absent.
  auto concept_at = [&ds](int row, int attr) { return ds.concept_row(row)[attr - 1]; };
  CHECK(concept_at(0, 1) == 1);
  CHECK(concept_at(3, 1) == 1);
  CHECK(concept_at(6, 1) == 0);
  CHECK(concept_at(9, 1) == 0);
  CHECK(concept_at(0, 3) == 1);
  CHECK(concept_at(3, 3) == 0);
  CHECK(concept_at(0, 50) == 0);

  // images of the same class share the class-level vector
  CHECK(ds.concept_row(0)[0] == ds.concept_row(1)[0]);
  CHECK(ds.labels[0] == ds.labels[2]);
}

TEST_CASE("synthetic generation is deterministic and shaped by the spec") {
  SyntheticSpec spec;
  spec.levels = 3;
  spec.base_size = 2;
  spec.growth_rate = 2.0;
  spec.decay_rate = 0.5;
  spec.classes = 4;
  spec.samples = 200;
  spec.seed = 7;

  auto a = generate_synthetic(spec);
  auto b = generate_synthetic(spec);
  CHECK(a.data.concept_count() == 14);  // 2 + 4 + 8
  CHECK(a.data.feature_dim == 28);
  CHECK(a.data.concepts == b.data.concepts);
  CHECK(a.data.labels == b.data.labels);
  CHECK(a.data.features == b.data.features);
  CHECK(a.planted_level == b.planted_level);
  CHECK(to_csv(a.data) == to_csv(b.data));
}

TEST_CASE("degenerate decay keeps every sample at level one") {
  SyntheticSpec spec;
  spec.decay_rate = 1e-6;
  spec.samples = 200;
  spec.seed = 3;
  auto generated = generate_synthetic(spec);
  for (int level : generated.planted_level) CHECK(level == 1);
}

TEST_CASE("redundancy copies append near-duplicate clones") {
  SyntheticSpec spec;
  spec.samples = 400;
  spec.redundancy_copies = 2;
  spec.seed = 9;
  auto generated = generate_synthetic(spec);
  const int informative = 14;
  CHECK(generated.data.concept_count() == informative * 3);
  CHECK(generated.data.concept_names[static_cast<std::size_t>(informative)] == "L1_c1_dup1");

  // Clones flip with probability 0.02, so they agree with the source column
  // almost always but not everywhere.
  long long agreements = 0;
  long long total = 0;
  for (std::size_t i = 0; i < generated.data.rows(); ++i) {
    auto row = generated.data.concept_row(i);
    for (int j = 0; j < informative; ++j) {
      agreements += row[static_cast<std::size_t>(j)] == row[static_cast<std::size_t>(j + informative)];
      ++total;
    }
  }
  const double agree_rate = static_cast<double>(agreements) / static_cast<double>(total);
  CHECK(agree_rate > 0.95);
  CHECK(agree_rate < 1.0);
}

TEST_CASE("planted labels are decodable from the planted prefix and no earlier") {
  SyntheticSpec spec;
  spec.samples = 300;
  spec.seed = 21;
  auto generated = generate_synthetic(spec);
  for (std::size_t i = 0; i < generated.data.rows(); ++i) {
    const int planted = generated.planted_level[i];
    const auto bits = generated.data.concept_row(i);
    for (int level = 0; level < 3; ++level) {
      const int decoded = generated.teacher.predict_bits(bits, level);
      if (level + 1 >= planted) {
        CHECK(decoded == generated.data.labels[i]);
      } else {
        CHECK(decoded != generated.data.labels[i]);
      }
    }
  }
}

TEST_CASE("generator rejects out-of-domain parameters") {
  SyntheticSpec spec;
  spec.growth_rate = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec = SyntheticSpec{};
  spec.decay_rate = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec = SyntheticSpec{};
  spec.noise = 0.5;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
}

TEST_CASE("split produces the documented sizes and is deterministic") {
  SyntheticSpec spec;
  spec.samples = 10;
  spec.classes = 2;
  spec.levels = 1;
  spec.base_size = 2;
  spec.growth_rate = 2.0;
  spec.seed = 5;
  auto generated = generate_synthetic(spec);

  auto parts = split(generated.data, 0.6, 0.2, 0.2, 1);
  CHECK(parts.train.rows() == 6);
  CHECK(parts.val.rows() == 2);
  CHECK(parts.test.rows() == 2);

  auto again = split(generated.data, 0.6, 0.2, 0.2, 1);
  CHECK(parts.train.labels == again.train.labels);
  CHECK(parts.train.features == again.train.features);

  CHECK_THROWS_AS(split(generated.data, 0.5, 0.5, 0.5, 1), Error);
}

TEST_CASE("split partitions are disjoint and exhaustive over random draws") {
  CounterRng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    SyntheticSpec spec;
    spec.samples = 20 + static_cast<std::int64_t>(rng.next_below(180));
    spec.seed = rng.next_u64();
    spec.classes = 2 + static_cast<int>(rng.next_below(4));
    auto generated = generate_synthetic(spec);

    const double f1 = 0.2 + 0.4 * rng.next_double();
    const double f2 = 0.1 + (0.85 - f1) * rng.next_double();
    const double f3 = 1.0 - f1 - f2;
    auto parts = split(generated.data, f1, f2, f3, rng.next_u64());

    CHECK(parts.train.rows() + parts.val.rows() + parts.test.rows() == generated.data.rows());

    // Rebuild the multiset of rows by their unique feature vectors.
    std::multiset<std::string> original;
    for (std::size_t i = 0; i < generated.data.rows(); ++i) {
      auto row = generated.data.feature_row(i);
      std::string key;
      for (double v : row) key += io::format_double(v) + ",";
      original.insert(key);
    }
    std::multiset<std::string> rebuilt;
    for (const Dataset* part : {&parts.train, &parts.val, &parts.test}) {
      for (std::size_t i = 0; i < part->rows(); ++i) {
        auto row = part->feature_row(i);
        std::string key;
        for (double v : row) key += io::format_double(v) + ",";
        rebuilt.insert(key);
      }
    }
    CHECK(original == rebuilt);
  }
}

TEST_CASE("split stratifies when every class has three samples") {
  SyntheticSpec spec;
  spec.samples = 400;
  spec.classes = 4;
  spec.seed = 17;
  auto generated = generate_synthetic(spec);
  auto parts = split(generated.data, 0.5, 0.25, 0.25, 2);

  std::vector<long long> total(4, 0);
  std::vector<long long> in_train(4, 0);
  for (int label : generated.data.labels) ++total[static_cast<std::size_t>(label)];
  for (int label : parts.train.labels) ++in_train[static_cast<std::size_t>(label)];
  for (int c = 0; c < 4; ++c) {
    const double fraction = static_cast<double>(in_train[static_cast<std::size_t>(c)]) /
                            static_cast<double>(total[static_cast<std::size_t>(c)]);
    CHECK(fraction > 0.45);
    CHECK(fraction < 0.55);
  }
}

TEST_CASE("select_concepts keeps the chosen columns in order") {
  SyntheticSpec spec;
  spec.samples = 50;
  spec.seed = 2;
  auto generated = generate_synthetic(spec);
  std::vector<int> keep{0, 3, 7};
  Dataset sub = generated.data.select_concepts(keep);
  CHECK(sub.concept_count() == 3);
  CHECK(sub.concept_names[1] == generated.data.concept_names[3]);
  for (std::size_t i = 0; i < sub.rows(); ++i) {
    CHECK(sub.concept_row(i)[2] == generated.data.concept_row(i)[7]);
  }
}
