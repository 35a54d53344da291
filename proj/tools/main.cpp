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

/* Command-line front end; links only the C API from mcbm/mcbm.h. Every run
 * resolves its configuration (flags > config file > defaults), executes one
 * subcommand, and writes a manifest echoing the resolved configuration next
 * to the outputs, so any run can be replayed byte-identically with
 * `--config <manifest>`. */

#include <mcbm/mcbm.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct CliError : std::runtime_error {
  CliError(int code_in, const std::string& message) : std::runtime_error(message), code(code_in) {}
  int code;
};

const char* status_name(int code) {
  switch (code) {
    case MCBM_E_SPEC: return "spec_error";
    case MCBM_E_PARSE: return "parse_error";
    case MCBM_E_SHAPE: return "shape_error";
    case MCBM_E_LEVEL: return "unsupported_level";
    case MCBM_E_CAPACITY: return "capacity_error";
    case MCBM_E_DIVERGED: return "training_diverged";
    case MCBM_E_IO: return "io_error";
    case MCBM_E_FIT: return "fit_error";
    default: return "internal_error";
  }
}

/// Raises when a library call failed, carrying its thread-local message.
void check(int status) {
  if (status != MCBM_OK) throw CliError(status, mcbm_last_error_message());
}

[[noreturn]] void usage_fail(const std::string& message) {
  throw CLI::ValidationError(message);
}

// ------------------------------------------------------------------ handles

struct DatasetDeleter {
  void operator()(mcbm_dataset* p) const { mcbm_dataset_free(p); }
};
struct RankingDeleter {
  void operator()(mcbm_ranking* p) const { mcbm_ranking_free(p); }
};
struct ModelDeleter {
  void operator()(mcbm_model* p) const { mcbm_model_free(p); }
};
using DatasetPtr = std::unique_ptr<mcbm_dataset, DatasetDeleter>;
using RankingPtr = std::unique_ptr<mcbm_ranking, RankingDeleter>;
using ModelPtr = std::unique_ptr<mcbm_model, ModelDeleter>;

DatasetPtr load_dataset(const std::string& path) {
  mcbm_dataset* raw = nullptr;
  check(mcbm_dataset_load_csv(path.c_str(), &raw));
  return DatasetPtr(raw);
}

RankingPtr load_ranking(const std::string& path) {
  mcbm_ranking* raw = nullptr;
  check(mcbm_ranking_load_csv(path.c_str(), &raw));
  return RankingPtr(raw);
}

ModelPtr load_model(const std::string& path) {
  mcbm_model* raw = nullptr;
  check(mcbm_model_load(path.c_str(), &raw));
  return ModelPtr(raw);
}

std::vector<int32_t> model_schedule(const mcbm_model* model) {
  std::vector<int32_t> schedule(256, -1);
  check(mcbm_model_schedule(model, schedule.data(), 256));
  std::size_t length = 0;
  while (length < schedule.size() && schedule[length] != -1) ++length;
  schedule.resize(length);
  return schedule;
}

// --------------------------------------------------------------- small io

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw CliError(MCBM_E_IO, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw CliError(MCBM_E_IO, "cannot write: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw CliError(MCBM_E_IO, "rename failed: " + path);
  }
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

std::string format_double(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

// ---------------------------------------------------------------- manifest

struct Manifest {
  std::string command;
  std::string out_dir;
  ordered_json resolved_config = ordered_json::object();
  ordered_json input_hashes = ordered_json::object();
  std::vector<std::string> output_files;

  void input(const std::string& label, const std::string& path) {
    if (!path.empty()) input_hashes[label] = fnv1a64_hex(read_file(path));
  }

  std::string path_for(const std::string& name) {
    output_files.push_back(name);
    return out_dir + "/" + name;
  }

  void write() {
    ordered_json j;
    j["tool_version"] = mcbm_version();
    j["command"] = command;
    j["resolved_config"] = resolved_config;
    j["input_hashes"] = input_hashes;
    j["output_files"] = output_files;
    write_file_atomic(out_dir + "/manifest.json", j.dump(2) + "\n");
  }
};

Manifest make_manifest(const std::string& command, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  Manifest manifest;
  manifest.command = command;
  manifest.out_dir = out_dir;
  return manifest;
}

// ------------------------------------------------------------- json config

/// JSON config files for CLI11; a manifest is accepted directly by reading
/// its resolved_config object.
class ConfigJson : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->count() == 1) {
        j[name] = opt->results().at(0);
      } else if (opt->count() > 1) {
        j[name] = opt->results();
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j = json::parse(input);
    if (j.contains("resolved_config")) j = j["resolved_config"];
    std::vector<CLI::ConfigItem> output;
    for (auto it = j.begin(); it != j.end(); ++it) {
      CLI::ConfigItem item;
      item.name = it.key();
      const json& value = *it;
      if (value.is_boolean()) {
        item.inputs = {value.get<bool>() ? "true" : "false"};
      } else if (value.is_number_integer()) {
        item.inputs = {std::to_string(value.get<long long>())};
      } else if (value.is_number_unsigned()) {
        item.inputs = {std::to_string(value.get<unsigned long long>())};
      } else if (value.is_number_float()) {
        item.inputs = {format_double(value.get<double>())};
      } else if (value.is_string()) {
        item.inputs = {value.get<std::string>()};
      } else if (value.is_array()) {
        for (const json& element : value) item.inputs.push_back(element.get<std::string>());
      } else {
        continue;  // nested objects are not options
      }
      output.push_back(item);
    }
    return output;
  }
};

void enable_json_config(CLI::App* cmd) {
  cmd->config_formatter(std::make_shared<ConfigJson>());
  cmd->set_config("--config", "", "JSON config file (a manifest is accepted)");
}

// ------------------------------------------------------------ list parsing

std::vector<int32_t> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int32_t> values;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (token.empty()) continue;
    // a..b expands to the inclusive range
    const auto dots = token.find("..");
    try {
      if (dots != std::string::npos) {
        const int lo = std::stoi(token.substr(0, dots));
        const int hi = std::stoi(token.substr(dots + 2));
        for (int v = lo; v <= hi; ++v) values.push_back(v);
      } else {
        values.push_back(std::stoi(token));
      }
    } catch (const std::exception&) {
      usage_fail("invalid " + what + " entry: '" + token + "'");
    }
  }
  if (values.empty()) usage_fail(what + " must not be empty");
  return values;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (token.empty()) continue;
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      usage_fail("invalid " + what + " entry: '" + token + "'");
    }
  }
  if (values.empty()) usage_fail(what + " must not be empty");
  return values;
}

std::vector<int32_t> default_k_grid(int concepts) {
  std::vector<int32_t> grid;
  const int step = std::max(1, concepts / 16);
  for (int k = 0; k <= concepts; k += step) grid.push_back(k);
  if (grid.back() != concepts) grid.push_back(concepts);
  return grid;
}

std::vector<int32_t> default_schedule(int concepts) {
  std::vector<int32_t> schedule;
  for (int d = 2; d < concepts; d *= 2) schedule.push_back(d);
  if (schedule.empty() || schedule.back() != concepts) schedule.push_back(concepts);
  return schedule;
}

std::string curve_csv(const std::vector<int32_t>& grid, const std::vector<double>& accuracy,
                      const std::string& policy, const std::string& ordering, bool header) {
  std::string text = header ? "k,accuracy,policy,ordering\n" : "";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    text += std::to_string(grid[i]) + ',' + format_double(accuracy[i]) + ',' + policy + ',' +
            ordering + '\n';
  }
  return text;
}

// ----------------------------------------------------------------- shared

struct SynthArgs {
  int32_t levels = 3;
  int32_t base = 2;
  double growth = 2.0;
  double gamma = 0.5;
  int32_t classes = 4;
  std::int64_t n = 1000;
  int32_t copies = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int32_t feature_dim = 0;
  double sigma = 0.1;
  std::string out = "synth_out";
};

void add_synth_options(CLI::App* cmd, SynthArgs& a) {
  cmd->add_option("--levels", a.levels, "geometric level count L");
  cmd->add_option("--base", a.base, "first level size k1");
  cmd->add_option("--r", a.growth, "level growth rate r > 1");
  cmd->add_option("--gamma", a.gamma, "stopping-level decay rate in (0,1)");
  cmd->add_option("--classes", a.classes, "class count");
  cmd->add_option("--n", a.n, "sample count");
  cmd->add_option("--copies", a.copies, "near-duplicate clones per informative concept");
  cmd->add_option("--noise", a.noise, "flip probability on observed concepts");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--feature-dim", a.feature_dim, "feature dimension (0 = 2K)");
  cmd->add_option("--sigma", a.sigma, "feature noise sigma");
}

DatasetPtr generate_from_args(const SynthArgs& a) {
  mcbm_synthetic_spec spec;
  mcbm_synthetic_spec_init(&spec);
  spec.levels = a.levels;
  spec.base_size = a.base;
  spec.growth_rate = a.growth;
  spec.decay_rate = a.gamma;
  spec.classes = a.classes;
  spec.samples = a.n;
  spec.redundancy_copies = a.copies;
  spec.noise = a.noise;
  spec.seed = a.seed;
  spec.feature_dim = a.feature_dim;
  spec.feature_sigma = a.sigma;
  mcbm_dataset* raw = nullptr;
  check(mcbm_dataset_generate(&spec, &raw, nullptr));
  return DatasetPtr(raw);
}

ordered_json synth_config_json(const SynthArgs& a) {
  ordered_json j;
  j["levels"] = a.levels;
  j["base"] = a.base;
  j["r"] = a.growth;
  j["gamma"] = a.gamma;
  j["classes"] = a.classes;
  j["n"] = a.n;
  j["copies"] = a.copies;
  j["noise"] = a.noise;
  j["seed"] = a.seed;
  j["feature-dim"] = a.feature_dim;
  j["sigma"] = a.sigma;
  j["out"] = a.out;
  return j;
}

struct TrainArgs {
  std::string data;
  std::string val;
  std::string ranking;
  std::string schedule;
  std::string mode = "standard";
  std::string training = "joint";
  std::string efficient_training = "all_levels";
  std::string lambdas;
  double alpha = 1.0;
  double lr = 0.1;
  int32_t epochs = 50;
  int32_t batch = 32;
  std::uint64_t seed = 0;
  std::string out = "train_out";
};

mcbm_train_config train_config_from(const TrainArgs& a, const std::vector<double>& lambdas) {
  mcbm_train_config config;
  mcbm_train_config_init(&config);
  config.alpha = a.alpha;
  config.learning_rate = a.lr;
  config.epochs = a.epochs;
  config.batch_size = a.batch;
  if (a.mode == "efficient") config.mode = MCBM_MODE_EFFICIENT;
  else if (a.mode != "standard") usage_fail("--mode must be standard or efficient");
  if (a.training == "sequential") config.training = MCBM_TRAIN_SEQUENTIAL;
  else if (a.training != "joint") usage_fail("--training must be joint or sequential");
  if (a.efficient_training == "random_level") config.efficient_training = MCBM_LEVELS_RANDOM;
  else if (a.efficient_training != "all_levels")
    usage_fail("--efficient-training must be all_levels or random_level");
  config.seed = a.seed;
  if (!lambdas.empty()) config.lambdas = lambdas.data();
  return config;
}

// --------------------------------------------------------------- commands

int run_synth(const SynthArgs& a) {
  Manifest manifest = make_manifest("synth", a.out);
  manifest.resolved_config = synth_config_json(a);
  DatasetPtr dataset = generate_from_args(a);
  check(mcbm_dataset_save_csv(dataset.get(), manifest.path_for("dataset.csv").c_str()));
  manifest.write();
  std::cout << "synth: wrote " << mcbm_dataset_rows(dataset.get()) << " rows, "
            << mcbm_dataset_concepts(dataset.get()) << " concepts, "
            << mcbm_dataset_classes(dataset.get()) << " classes to " << a.out << "/dataset.csv\n";
  return 0;
}

int run_train(const TrainArgs& a) {
  Manifest manifest = make_manifest("train", a.out);
  ordered_json j;
  j["data"] = a.data;
  j["val"] = a.val;
  j["ranking"] = a.ranking;
  j["schedule"] = a.schedule;
  j["mode"] = a.mode;
  j["training"] = a.training;
  j["efficient-training"] = a.efficient_training;
  j["lambdas"] = a.lambdas;
  j["alpha"] = a.alpha;
  j["lr"] = a.lr;
  j["epochs"] = a.epochs;
  j["batch"] = a.batch;
  j["seed"] = a.seed;
  j["out"] = a.out;
  manifest.resolved_config = j;
  manifest.input("data", a.data);
  if (!a.val.empty()) manifest.input("val", a.val);
  if (!a.ranking.empty()) manifest.input("ranking", a.ranking);

  DatasetPtr train_set = load_dataset(a.data);
  DatasetPtr val_set;
  if (!a.val.empty()) val_set = load_dataset(a.val);

  RankingPtr ranking;
  if (!a.ranking.empty()) {
    ranking = load_ranking(a.ranking);
  } else {
    mcbm_ranking* raw = nullptr;
    check(mcbm_mrmr_rank(train_set.get(), &raw));
    ranking.reset(raw);
    check(mcbm_ranking_save_csv(ranking.get(), manifest.path_for("ranking.csv").c_str()));
  }

  std::vector<int32_t> schedule =
      a.schedule.empty() ? default_schedule(mcbm_dataset_concepts(train_set.get()))
                         : parse_int_list(a.schedule, "--schedule");
  std::vector<double> lambdas;
  if (!a.lambdas.empty()) {
    lambdas = parse_double_list(a.lambdas, "--lambdas");
    if (lambdas.size() != schedule.size()) usage_fail("--lambdas must match the schedule length");
  }

  mcbm_train_config config = train_config_from(a, lambdas);
  mcbm_model* raw = nullptr;
  check(mcbm_model_train(train_set.get(), val_set.get(), ranking.get(), schedule.data(),
                         static_cast<int32_t>(schedule.size()), &config,
                         manifest.path_for("history.csv").c_str(), &raw));
  ModelPtr model(raw);
  check(mcbm_model_save(model.get(), manifest.path_for("model.json").c_str()));

  double accuracy = 0.0;
  double f1 = 0.0;
  check(mcbm_model_evaluate(model.get(), train_set.get(), schedule.back(), &accuracy, &f1));
  manifest.write();
  std::cout << "train: level " << schedule.back() << " train accuracy " << accuracy << " macro_f1 "
            << f1 << "\n";
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Matryoshka concept-bottleneck toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mcbm_version());

  // ------------------------------------------------------------------ synth
  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a planted synthetic dataset");
  add_synth_options(synth_cmd, synth);
  synth_cmd->add_option("-o,--out", synth.out, "output directory");
  enable_json_config(synth_cmd);

  // ------------------------------------------------------------------- load
  struct {
    std::string data;
    std::string format = "csv";
    std::string cub_classes;
    std::string cub_names;
    std::string out = "load_out";
  } load;
  CLI::App* load_cmd = app.add_subcommand("load", "validate a dataset and write it normalized");
  load_cmd->add_option("--data", load.data, "input path")->required();
  load_cmd->add_option("--format", load.format, "csv or cub_attributes");
  load_cmd->add_option("--cub-classes", load.cub_classes, "image->class sidecar (cub format)");
  load_cmd->add_option("--cub-names", load.cub_names, "attribute name sidecar (cub format)");
  load_cmd->add_option("-o,--out", load.out, "output directory");
  enable_json_config(load_cmd);

  // ------------------------------------------------------------------- rank
  struct {
    std::string data;
    std::string exclude;
    std::string out = "rank_out";
  } rank;
  CLI::App* rank_cmd = app.add_subcommand("rank", "mRMR concept ordering");
  rank_cmd->add_option("--data", rank.data, "dataset CSV")->required();
  rank_cmd->add_option("--exclude", rank.exclude, "concept indices to drop before ranking");
  rank_cmd->add_option("-o,--out", rank.out, "output directory or .csv path");
  enable_json_config(rank_cmd);

  // -------------------------------------------------------------- stability
  struct {
    std::string data;
    std::string seeds = "1,2,3,4,5";
    double fraction = 0.8;
    std::string prefixes = "8,16";
    std::string out = "stability_out";
  } stability;
  CLI::App* stability_cmd = app.add_subcommand("stability", "ranking stability under resampling");
  stability_cmd->add_option("--data", stability.data, "dataset CSV")->required();
  stability_cmd->add_option("--seeds", stability.seeds, "comma list of seeds");
  stability_cmd->add_option("--fraction", stability.fraction, "resample fraction in (0,1]");
  stability_cmd->add_option("--prefixes", stability.prefixes, "top-k prefix sizes");
  stability_cmd->add_option("-o,--out", stability.out, "output directory");
  enable_json_config(stability_cmd);

  // ------------------------------------------------------------------ train
  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a nested-head model");
  train_cmd->add_option("--data", train.data, "training CSV")->required();
  train_cmd->add_option("--val", train.val, "validation CSV");
  train_cmd->add_option("--ranking", train.ranking, "ranking CSV (computed when absent)");
  train_cmd->add_option("--schedule", train.schedule, "nesting levels, e.g. 8,16,32");
  train_cmd->add_option("--mode", train.mode, "standard or efficient");
  train_cmd->add_option("--training", train.training, "joint or sequential");
  train_cmd->add_option("--efficient-training", train.efficient_training,
                        "all_levels or random_level");
  train_cmd->add_option("--lambdas", train.lambdas, "per-level task weights");
  train_cmd->add_option("--alpha", train.alpha, "concept loss weight");
  train_cmd->add_option("--lr", train.lr, "learning rate");
  train_cmd->add_option("--epochs", train.epochs, "epochs (per phase when sequential)");
  train_cmd->add_option("--batch", train.batch, "batch size");
  train_cmd->add_option("--seed", train.seed, "random seed");
  train_cmd->add_option("-o,--out", train.out, "output directory");
  enable_json_config(train_cmd);

  // --------------------------------------------------------------- evaluate
  struct {
    std::string model;
    std::string data;
    int32_t level = 0;
    std::string out = "eval_out";
  } evaluate;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "accuracy and macro F1 at a level");
  evaluate_cmd->add_option("--model", evaluate.model, "model JSON")->required();
  evaluate_cmd->add_option("--data", evaluate.data, "dataset CSV")->required();
  evaluate_cmd->add_option("--level", evaluate.level, "prefix level (0 = widest)");
  evaluate_cmd->add_option("-o,--out", evaluate.out, "output directory");
  enable_json_config(evaluate_cmd);

  // -------------------------------------------------------------- intervene
  struct {
    std::string model;
    std::string data;
    std::string ranking;
    std::string k_grid;
    std::string policy = "both";
    std::string ordering_label = "model";
    std::string out = "intervene_out";
  } intervene;
  CLI::App* intervene_cmd = app.add_subcommand("intervene", "Accuracy@k intervention curves");
  intervene_cmd->add_option("--model", intervene.model, "model JSON")->required();
  intervene_cmd->add_option("--data", intervene.data, "dataset CSV")->required();
  intervene_cmd->add_option("--ranking", intervene.ranking, "ordering to intervene in");
  intervene_cmd->add_option("--k-grid", intervene.k_grid, "comma list / a..b ranges");
  intervene_cmd->add_option("--policy", intervene.policy, "matched, full_head, or both");
  intervene_cmd->add_option("--ordering-label", intervene.ordering_label,
                            "ordering tag written into curve.csv");
  intervene_cmd->add_option("-o,--out", intervene.out, "output directory");
  enable_json_config(intervene_cmd);

  // -------------------------------------------------------------- decay-fit
  struct {
    std::string histogram;
    std::string model;
    std::string data;
    std::string ranking;
    bool all_samples = false;
    std::string out = "decay_out";
  } decay;
  CLI::App* decay_cmd = app.add_subcommand("decay-fit", "fit the stopping-level decay rate");
  decay_cmd->add_option("--histogram", decay.histogram, "histogram CSV (level,prefix,count)");
  decay_cmd->add_option("--model", decay.model, "model JSON (to simulate the histogram)");
  decay_cmd->add_option("--data", decay.data, "dataset CSV");
  decay_cmd->add_option("--ranking", decay.ranking, "ordering to intervene in");
  decay_cmd->add_flag("--all-samples", decay.all_samples,
                      "simulate every sample, not only initially misclassified ones");
  decay_cmd->add_option("-o,--out", decay.out, "output directory");
  enable_json_config(decay_cmd);

  // ---------------------------------------------------------------- regimes
  struct {
    double growth = 2.0;
    double gamma = 0.5;
    int32_t base = 2;
    std::string level_grid = "1..12";
    std::int64_t samples = 100000;
    std::uint64_t seed = 0;
    std::string out = "regimes_out";
  } regimes;
  CLI::App* regimes_cmd = app.add_subcommand("regimes", "simulate intervention-cost scaling");
  regimes_cmd->add_option("--r", regimes.growth, "concept growth rate r > 1");
  regimes_cmd->add_option("--gamma", regimes.gamma, "stopping decay rate in (0,1)");
  regimes_cmd->add_option("--k1", regimes.base, "first level size");
  regimes_cmd->add_option("--l-grid", regimes.level_grid, "levels, e.g. 1..12 or 2,4,8");
  regimes_cmd->add_option("--samples", regimes.samples, "Monte Carlo draws per L");
  regimes_cmd->add_option("--seed", regimes.seed, "random seed");
  regimes_cmd->add_option("-o,--out", regimes.out, "output directory");
  enable_json_config(regimes_cmd);

  // ------------------------------------------------------------------ bound
  struct {
    std::string model;
    std::string data;
    std::string ranking;
    std::string k_grid;
    std::string out = "bound_out";
  } bound;
  CLI::App* bound_cmd = app.add_subcommand("bound", "per-k intervention error-bound report");
  bound_cmd->add_option("--model", bound.model, "model JSON")->required();
  bound_cmd->add_option("--data", bound.data, "dataset CSV")->required();
  bound_cmd->add_option("--ranking", bound.ranking, "ordering to intervene in");
  bound_cmd->add_option("--k-grid", bound.k_grid, "comma list / a..b ranges");
  bound_cmd->add_option("-o,--out", bound.out, "output directory");
  enable_json_config(bound_cmd);

  // --------------------------------------------------------------- pipeline
  SynthArgs pipeline_synth;
  struct {
    std::string data;
    std::string split = "0.7,0.15,0.15";
    std::string schedule;
    std::string mode = "efficient";
    std::string training = "joint";
    std::string efficient_training = "all_levels";
    double alpha = 1.0;
    double lr = 0.1;
    int32_t epochs = 50;
    int32_t batch = 32;
    std::string k_grid;
    std::int64_t samples = 100000;
    std::uint64_t seed = 0;
    std::string out = "pipeline_out";
  } pipeline;
  CLI::App* pipeline_cmd =
      app.add_subcommand("pipeline", "rank, train, intervene, and analyze in one run");
  pipeline_cmd->add_option("--data", pipeline.data, "dataset CSV (synthesized when absent)");
  add_synth_options(pipeline_cmd, pipeline_synth);
  pipeline_cmd->add_option("--split", pipeline.split, "train,val,test fractions");
  pipeline_cmd->add_option("--schedule", pipeline.schedule, "nesting levels, e.g. 8,16,32");
  pipeline_cmd->add_option("--mode", pipeline.mode, "standard or efficient");
  pipeline_cmd->add_option("--training", pipeline.training, "joint or sequential");
  pipeline_cmd->add_option("--efficient-training", pipeline.efficient_training,
                           "all_levels or random_level");
  pipeline_cmd->add_option("--alpha", pipeline.alpha, "concept loss weight");
  pipeline_cmd->add_option("--lr", pipeline.lr, "learning rate");
  pipeline_cmd->add_option("--epochs", pipeline.epochs, "epochs");
  pipeline_cmd->add_option("--batch", pipeline.batch, "batch size");
  pipeline_cmd->add_option("--k-grid", pipeline.k_grid, "intervention grid");
  pipeline_cmd->add_option("--samples", pipeline.samples, "regime simulation draws");
  pipeline_cmd->add_option("-o,--out", pipeline.out, "output directory");
  enable_json_config(pipeline_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  }

  if (synth_cmd->parsed()) return run_synth(synth);

  if (load_cmd->parsed()) {
    Manifest manifest = make_manifest("load", load.out);
    manifest.resolved_config = ordered_json{{"data", load.data},
                                            {"format", load.format},
                                            {"cub-classes", load.cub_classes},
                                            {"cub-names", load.cub_names},
                                            {"out", load.out}};
    manifest.input("data", load.data);
    DatasetPtr dataset;
    if (load.format == "csv") {
      dataset = load_dataset(load.data);
    } else if (load.format == "cub_attributes") {
      std::string classes_path = load.cub_classes;
      if (classes_path.empty()) {
        classes_path =
            (std::filesystem::path(load.data).parent_path() / "image_class.txt").string();
      }
      manifest.input("cub-classes", classes_path);
      if (!load.cub_names.empty()) manifest.input("cub-names", load.cub_names);
      mcbm_dataset* raw = nullptr;
      check(mcbm_dataset_load_cub(load.data.c_str(), classes_path.c_str(),
                                  load.cub_names.empty() ? nullptr : load.cub_names.c_str(),
                                  &raw));
      dataset.reset(raw);
    } else {
      usage_fail("--format must be csv or cub_attributes");
    }
    check(mcbm_dataset_save_csv(dataset.get(), manifest.path_for("dataset.csv").c_str()));
    manifest.write();
    std::cout << "load: " << mcbm_dataset_rows(dataset.get()) << " rows, "
              << mcbm_dataset_concepts(dataset.get()) << " concepts, "
              << mcbm_dataset_classes(dataset.get()) << " classes\n";
    return 0;
  }

  if (rank_cmd->parsed()) {
    std::string out_dir = rank.out;
    std::string file_name = "ranking.csv";
    if (rank.out.size() > 4 && rank.out.substr(rank.out.size() - 4) == ".csv") {
      const std::filesystem::path path(rank.out);
      out_dir = path.parent_path().empty() ? "." : path.parent_path().string();
      file_name = path.filename().string();
    }
    Manifest manifest = make_manifest("rank", out_dir);
    manifest.resolved_config =
        ordered_json{{"data", rank.data}, {"exclude", rank.exclude}, {"out", rank.out}};
    manifest.input("data", rank.data);

    DatasetPtr dataset = load_dataset(rank.data);
    if (!rank.exclude.empty()) {
      auto drop = parse_int_list(rank.exclude, "--exclude");
      std::vector<int32_t> keep;
      for (int32_t j = 0; j < mcbm_dataset_concepts(dataset.get()); ++j) {
        if (std::find(drop.begin(), drop.end(), j) == drop.end()) keep.push_back(j);
      }
      if (keep.empty()) usage_fail("--exclude drops every concept");
      mcbm_dataset* raw = nullptr;
      check(mcbm_dataset_select_concepts(dataset.get(), keep.data(),
                                         static_cast<int32_t>(keep.size()), &raw));
      dataset.reset(raw);
    }
    mcbm_ranking* raw = nullptr;
    check(mcbm_mrmr_rank(dataset.get(), &raw));
    RankingPtr ranking(raw);
    check(mcbm_ranking_save_csv(ranking.get(), manifest.path_for(file_name).c_str()));
    manifest.write();
    std::cout << "rank: wrote " << mcbm_ranking_size(ranking.get()) << " concepts\n";
    return 0;
  }

  if (stability_cmd->parsed()) {
    Manifest manifest = make_manifest("stability", stability.out);
    manifest.resolved_config = ordered_json{{"data", stability.data},
                                            {"seeds", stability.seeds},
                                            {"fraction", stability.fraction},
                                            {"prefixes", stability.prefixes},
                                            {"out", stability.out}};
    manifest.input("data", stability.data);
    DatasetPtr dataset = load_dataset(stability.data);
    auto seed_values = parse_int_list(stability.seeds, "--seeds");
    std::vector<std::uint64_t> seeds(seed_values.begin(), seed_values.end());
    auto prefixes = parse_int_list(stability.prefixes, "--prefixes");
    std::vector<double> iou(seeds.size() * prefixes.size(), 0.0);
    check(mcbm_ranking_stability(dataset.get(), seeds.data(), static_cast<int32_t>(seeds.size()),
                                 stability.fraction, prefixes.data(),
                                 static_cast<int32_t>(prefixes.size()), iou.data()));
    std::string csv = "seed,k,iou\n";
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      for (std::size_t p = 0; p < prefixes.size(); ++p) {
        csv += std::to_string(seeds[s]) + ',' + std::to_string(prefixes[p]) + ',' +
               format_double(iou[s * prefixes.size() + p]) + '\n';
      }
    }
    write_file_atomic(manifest.path_for("stability.csv"), csv);
    manifest.write();
    std::cout << "stability: wrote " << seeds.size() * prefixes.size() << " rows\n";
    return 0;
  }

  if (train_cmd->parsed()) return run_train(train);

  if (evaluate_cmd->parsed()) {
    Manifest manifest = make_manifest("evaluate", evaluate.out);
    manifest.resolved_config = ordered_json{{"model", evaluate.model},
                                            {"data", evaluate.data},
                                            {"level", evaluate.level},
                                            {"out", evaluate.out}};
    manifest.input("model", evaluate.model);
    manifest.input("data", evaluate.data);
    ModelPtr model = load_model(evaluate.model);
    DatasetPtr dataset = load_dataset(evaluate.data);
    int32_t level = evaluate.level;
    if (level == 0) level = model_schedule(model.get()).back();
    double accuracy = 0.0;
    double f1 = 0.0;
    check(mcbm_model_evaluate(model.get(), dataset.get(), level, &accuracy, &f1));
    ordered_json j{{"level", level}, {"accuracy", accuracy}, {"macro_f1", f1}};
    write_file_atomic(manifest.path_for("eval.json"), j.dump(2) + "\n");
    manifest.write();
    std::cout << "evaluate: level " << level << " accuracy " << accuracy << " macro_f1 " << f1
              << "\n";
    return 0;
  }

  if (intervene_cmd->parsed()) {
    Manifest manifest = make_manifest("intervene", intervene.out);
    manifest.resolved_config = ordered_json{{"model", intervene.model},
                                            {"data", intervene.data},
                                            {"ranking", intervene.ranking},
                                            {"k-grid", intervene.k_grid},
                                            {"policy", intervene.policy},
                                            {"ordering-label", intervene.ordering_label},
                                            {"out", intervene.out}};
    manifest.input("model", intervene.model);
    manifest.input("data", intervene.data);
    if (!intervene.ranking.empty()) manifest.input("ranking", intervene.ranking);

    ModelPtr model = load_model(intervene.model);
    DatasetPtr dataset = load_dataset(intervene.data);
    RankingPtr ranking;
    if (!intervene.ranking.empty()) ranking = load_ranking(intervene.ranking);

    std::vector<int32_t> grid = intervene.k_grid.empty()
                                    ? default_k_grid(mcbm_model_concepts(model.get()))
                                    : parse_int_list(intervene.k_grid, "--k-grid");
    std::vector<std::string> policies;
    if (intervene.policy == "both") policies = {"matched", "full_head"};
    else if (intervene.policy == "matched" || intervene.policy == "full_head")
      policies = {intervene.policy};
    else usage_fail("--policy must be matched, full_head, or both");

    std::string csv;
    bool first = true;
    for (const std::string& policy : policies) {
      std::vector<double> accuracy(grid.size(), 0.0);
      const std::string trace = manifest.path_for("trace_" + policy + ".csv");
      check(mcbm_accuracy_at_k(model.get(), dataset.get(), ranking.get(), grid.data(),
                               static_cast<int32_t>(grid.size()),
                               policy == "matched" ? MCBM_POLICY_MATCHED : MCBM_POLICY_FULL_HEAD,
                               accuracy.data(), trace.c_str()));
      csv += curve_csv(grid, accuracy, policy, intervene.ordering_label, first);
      first = false;
    }
    write_file_atomic(manifest.path_for("curve.csv"), csv);
    manifest.write();
    std::cout << "intervene: wrote curves for " << policies.size() << " policies over "
              << grid.size() << " grid points\n";
    return 0;
  }

  if (decay_cmd->parsed()) {
    Manifest manifest = make_manifest("decay-fit", decay.out);
    manifest.resolved_config = ordered_json{{"histogram", decay.histogram},
                                            {"model", decay.model},
                                            {"data", decay.data},
                                            {"ranking", decay.ranking},
                                            {"all-samples", decay.all_samples},
                                            {"out", decay.out}};
    std::vector<double> counts;
    double never = 0.0;
    if (!decay.histogram.empty()) {
      manifest.input("histogram", decay.histogram);
      // level,prefix,count rows with a trailing never row
      std::istringstream in(read_file(decay.histogram));
      std::string line;
      std::getline(in, line);
      if (line != "level,prefix,count") throw CliError(MCBM_E_PARSE, "unexpected histogram header");
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto first_comma = line.find(',');
        const auto last_comma = line.rfind(',');
        if (first_comma == std::string::npos || last_comma == first_comma) {
          throw CliError(MCBM_E_PARSE, "malformed histogram row: " + line);
        }
        const std::string level = line.substr(0, first_comma);
        double count = 0.0;
        try {
          count = std::stod(line.substr(last_comma + 1));
        } catch (const std::exception&) {
          throw CliError(MCBM_E_PARSE, "malformed histogram count in: " + line);
        }
        if (level == "never") never = count;
        else counts.push_back(count);
      }
    } else {
      if (decay.model.empty() || decay.data.empty()) {
        usage_fail("decay-fit needs --histogram or both --model and --data");
      }
      manifest.input("model", decay.model);
      manifest.input("data", decay.data);
      if (!decay.ranking.empty()) manifest.input("ranking", decay.ranking);
      ModelPtr model = load_model(decay.model);
      DatasetPtr dataset = load_dataset(decay.data);
      RankingPtr ranking;
      if (!decay.ranking.empty()) ranking = load_ranking(decay.ranking);
      const auto schedule = model_schedule(model.get());
      std::vector<int64_t> histogram(schedule.size() + 1, 0);
      int64_t evaluated = 0;
      check(mcbm_minimal_sufficient_levels(model.get(), dataset.get(), ranking.get(),
                                           decay.all_samples ? 0 : 1, histogram.data(), &evaluated,
                                           manifest.path_for("histogram.csv").c_str()));
      for (std::size_t i = 0; i < schedule.size(); ++i) {
        counts.push_back(static_cast<double>(histogram[i]));
      }
      never = static_cast<double>(histogram[schedule.size()]);
    }

    double gamma = 0.0;
    double r_squared = 0.0;
    double c_hat = 0.0;
    check(mcbm_fit_geometric_decay(counts.data(), static_cast<int32_t>(counts.size()), &gamma,
                                   &r_squared, &c_hat));
    ordered_json j{{"gamma_hat", gamma},
                   {"r_squared", r_squared},
                   {"c_hat", c_hat},
                   {"levels", counts.size()},
                   {"never", never}};
    write_file_atomic(manifest.path_for("decay.json"), j.dump(2) + "\n");
    manifest.write();
    std::cout << "decay-fit: gamma_hat " << gamma << " r_squared " << r_squared << "\n";
    return 0;
  }

  if (regimes_cmd->parsed()) {
    Manifest manifest = make_manifest("regimes", regimes.out);
    manifest.resolved_config = ordered_json{{"r", regimes.growth},
                                            {"gamma", regimes.gamma},
                                            {"k1", regimes.base},
                                            {"l-grid", regimes.level_grid},
                                            {"samples", regimes.samples},
                                            {"seed", regimes.seed},
                                            {"out", regimes.out}};
    auto grid = parse_int_list(regimes.level_grid, "--l-grid");
    double alpha_fit = 0.0;
    check(mcbm_simulate_regimes(regimes.growth, regimes.gamma, regimes.base, grid.data(),
                                static_cast<int32_t>(grid.size()), regimes.samples, regimes.seed,
                                nullptr, nullptr, &alpha_fit,
                                manifest.path_for("regimes.csv").c_str()));
    int32_t regime = 0;
    double alpha = 0.0;
    check(mcbm_regime_classify(regimes.growth, regimes.gamma, &regime, &alpha));
    manifest.write();
    const char* names[] = {"efficient", "balanced", "heavy_tailed"};
    std::cout << "regimes: " << names[regime] << " alpha_fit " << alpha_fit << "\n";
    return 0;
  }

  if (bound_cmd->parsed()) {
    Manifest manifest = make_manifest("bound", bound.out);
    manifest.resolved_config = ordered_json{{"model", bound.model},
                                            {"data", bound.data},
                                            {"ranking", bound.ranking},
                                            {"k-grid", bound.k_grid},
                                            {"out", bound.out}};
    manifest.input("model", bound.model);
    manifest.input("data", bound.data);
    if (!bound.ranking.empty()) manifest.input("ranking", bound.ranking);
    ModelPtr model = load_model(bound.model);
    DatasetPtr dataset = load_dataset(bound.data);
    RankingPtr ranking;
    if (!bound.ranking.empty()) ranking = load_ranking(bound.ranking);
    std::vector<int32_t> grid = bound.k_grid.empty()
                                    ? default_k_grid(mcbm_model_concepts(model.get()))
                                    : parse_int_list(bound.k_grid, "--k-grid");
    check(mcbm_hellman_raviv_report(model.get(), dataset.get(), ranking.get(), grid.data(),
                                    static_cast<int32_t>(grid.size()),
                                    manifest.path_for("bound.json").c_str()));
    manifest.write();
    std::cout << "bound: wrote " << grid.size() << " reports\n";
    return 0;
  }

  if (pipeline_cmd->parsed()) {
    Manifest manifest = make_manifest("pipeline", pipeline.out);
    manifest.resolved_config = synth_config_json(pipeline_synth);
    manifest.resolved_config.erase("out");
    manifest.resolved_config["data"] = pipeline.data;
    manifest.resolved_config["split"] = pipeline.split;
    manifest.resolved_config["schedule"] = pipeline.schedule;
    manifest.resolved_config["mode"] = pipeline.mode;
    manifest.resolved_config["training"] = pipeline.training;
    manifest.resolved_config["efficient-training"] = pipeline.efficient_training;
    manifest.resolved_config["alpha"] = pipeline.alpha;
    manifest.resolved_config["lr"] = pipeline.lr;
    manifest.resolved_config["epochs"] = pipeline.epochs;
    manifest.resolved_config["batch"] = pipeline.batch;
    manifest.resolved_config["k-grid"] = pipeline.k_grid;
    manifest.resolved_config["samples"] = pipeline.samples;
    manifest.resolved_config["seed"] = pipeline_synth.seed;
    manifest.resolved_config["out"] = pipeline.out;

    // 1. data
    DatasetPtr dataset;
    if (pipeline.data.empty()) {
      SynthArgs synth_args = pipeline_synth;
      
      dataset = generate_from_args(synth_args);
      check(mcbm_dataset_save_csv(dataset.get(), manifest.path_for("dataset.csv").c_str()));
    } else {
      manifest.input("data", pipeline.data);
      dataset = load_dataset(pipeline.data);
    }

    // 2. split
    auto fractions = parse_double_list(pipeline.split, "--split");
    if (fractions.size() != 3) usage_fail("--split needs three fractions");
    mcbm_dataset* raw_train = nullptr;
    mcbm_dataset* raw_val = nullptr;
    mcbm_dataset* raw_test = nullptr;
    check(mcbm_dataset_split(dataset.get(), fractions[0], fractions[1], fractions[2],
                             pipeline_synth.seed, &raw_train, &raw_val, &raw_test));
    DatasetPtr train_set(raw_train);
    DatasetPtr val_set(raw_val);
    DatasetPtr test_set(raw_test);

    // 3. rank on the training split
    mcbm_ranking* raw_ranking = nullptr;
    check(mcbm_mrmr_rank(train_set.get(), &raw_ranking));
    RankingPtr ranking(raw_ranking);
    check(mcbm_ranking_save_csv(ranking.get(), manifest.path_for("ranking.csv").c_str()));

    // 4. train
    const int32_t concepts = mcbm_dataset_concepts(train_set.get());
    std::vector<int32_t> schedule = pipeline.schedule.empty()
                                        ? default_schedule(concepts)
                                        : parse_int_list(pipeline.schedule, "--schedule");
    TrainArgs train_args;
    train_args.mode = pipeline.mode;
    train_args.training = pipeline.training;
    train_args.efficient_training = pipeline.efficient_training;
    train_args.alpha = pipeline.alpha;
    train_args.lr = pipeline.lr;
    train_args.epochs = pipeline.epochs;
    train_args.batch = pipeline.batch;
    train_args.seed = pipeline_synth.seed;
    mcbm_train_config config = train_config_from(train_args, {});
    mcbm_model* raw_model = nullptr;
    check(mcbm_model_train(train_set.get(), val_set.get(), ranking.get(), schedule.data(),
                           static_cast<int32_t>(schedule.size()), &config,
                           manifest.path_for("history.csv").c_str(), &raw_model));
    ModelPtr model(raw_model);
    check(mcbm_model_save(model.get(), manifest.path_for("model.json").c_str()));

    // 5. evaluate the widest head on the test split
    double accuracy = 0.0;
    double f1 = 0.0;
    check(mcbm_model_evaluate(model.get(), test_set.get(), schedule.back(), &accuracy, &f1));
    ordered_json eval_json{{"level", schedule.back()}, {"accuracy", accuracy}, {"macro_f1", f1}};
    write_file_atomic(manifest.path_for("eval.json"), eval_json.dump(2) + "\n");

    // 6. intervention curves on the test split
    std::vector<int32_t> grid = pipeline.k_grid.empty()
                                    ? default_k_grid(concepts)
                                    : parse_int_list(pipeline.k_grid, "--k-grid");
    if (pipeline.mode == "standard") {
      // matched policy needs schedule levels
      grid.clear();
      grid.push_back(0);
      for (int32_t d : schedule) grid.push_back(d);
    }
    std::string csv;
    bool first = true;
    for (const std::string& policy : {std::string("matched"), std::string("full_head")}) {
      std::vector<double> curve_accuracy(grid.size(), 0.0);
      check(mcbm_accuracy_at_k(model.get(), test_set.get(), ranking.get(), grid.data(),
                               static_cast<int32_t>(grid.size()),
                               policy == "matched" ? MCBM_POLICY_MATCHED : MCBM_POLICY_FULL_HEAD,
                               curve_accuracy.data(),
                               manifest.path_for("trace_" + policy + ".csv").c_str()));
      csv += curve_csv(grid, curve_accuracy, policy, "mrmr", first);
      first = false;
    }
    write_file_atomic(manifest.path_for("curve.csv"), csv);

    // 7. stopping levels of initially misclassified samples
    std::vector<int64_t> histogram(schedule.size() + 1, 0);
    int64_t evaluated = 0;
    check(mcbm_minimal_sufficient_levels(model.get(), test_set.get(), ranking.get(), 1,
                                         histogram.data(), &evaluated,
                                         manifest.path_for("histogram.csv").c_str()));

    // 8. decay fit (needs two non-empty levels; report nulls otherwise)
    ordered_json decay_json;
    std::vector<double> counts(histogram.begin(), histogram.end() - 1);
    double gamma_hat = 0.0;
    double r_squared = 0.0;
    double c_hat = 0.0;
    const int fit_status = mcbm_fit_geometric_decay(
        counts.data(), static_cast<int32_t>(counts.size()), &gamma_hat, &r_squared, &c_hat);
    if (fit_status == MCBM_OK) {
      decay_json = ordered_json{{"gamma_hat", gamma_hat}, {"r_squared", r_squared}, {"c_hat", c_hat}};
    } else if (fit_status == MCBM_E_FIT || fit_status == MCBM_E_SPEC) {
      decay_json = ordered_json{{"gamma_hat", nullptr},
                                {"r_squared", nullptr},
                                {"c_hat", nullptr},
                                {"warning", mcbm_last_error_message()}};
    } else {
      check(fit_status);
    }
    decay_json["evaluated"] = evaluated;
    write_file_atomic(manifest.path_for("decay.json"), decay_json.dump(2) + "\n");

    // 9. regime report: growth estimated from the schedule, decay from the fit
    double r_hat = 2.0;
    if (schedule.size() >= 2) {
      double log_sum = 0.0;
      for (std::size_t i = 1; i < schedule.size(); ++i) {
        log_sum += std::log(static_cast<double>(schedule[i]) / schedule[i - 1]);
      }
      r_hat = std::exp(log_sum / static_cast<double>(schedule.size() - 1));
    }
    ordered_json regime_json{{"r_hat", r_hat}, {"gamma_hat", nullptr}};
    if (fit_status == MCBM_OK && gamma_hat > 0.0 && gamma_hat < 1.0 && r_hat > 1.0) {
      regime_json["gamma_hat"] = gamma_hat;
      regime_json["rho"] = r_hat * gamma_hat;
      int32_t regime = 0;
      double alpha = 0.0;
      check(mcbm_regime_classify(r_hat, gamma_hat, &regime, &alpha));
      const char* names[] = {"efficient", "balanced", "heavy_tailed"};
      regime_json["regime"] = names[regime];
      if (regime == MCBM_REGIME_HEAVY_TAILED) regime_json["alpha"] = alpha;
      // expected inspection cost over the observed histogram; the nested set
      // inspected at level i has schedule[i] concepts
      if (evaluated > 0) {
        std::vector<double> costs(schedule.begin(), schedule.end());
        double cost = 0.0;
        check(mcbm_expected_cost(counts.data(), static_cast<int32_t>(counts.size()),
                                 static_cast<double>(histogram.back()), costs.data(), &cost));
        regime_json["expected_cost"] = cost;
      }
      double bound_value = 0.0;
      const double norm = (1.0 - gamma_hat) /
                          (1.0 - std::pow(gamma_hat, static_cast<double>(schedule.size())));
      check(mcbm_expected_cost_bound(r_hat, gamma_hat, schedule[0],
                                     static_cast<int32_t>(schedule.size()), norm, &bound_value));
      regime_json["cost_bound"] = bound_value;
      std::vector<int32_t> level_grid;
      for (int32_t l = 1; l <= static_cast<int32_t>(schedule.size()); ++l) level_grid.push_back(l);
      double alpha_fit = 0.0;
      check(mcbm_simulate_regimes(r_hat, gamma_hat, schedule[0], level_grid.data(),
                                  static_cast<int32_t>(level_grid.size()), pipeline.samples,
                                  pipeline_synth.seed, nullptr, nullptr, &alpha_fit,
                                  manifest.path_for("regimes.csv").c_str()));
      regime_json["alpha_fit"] = alpha_fit;
    }
    write_file_atomic(manifest.path_for("regime.json"), regime_json.dump(2) + "\n");

    manifest.write();
    std::cout << "pipeline: test accuracy " << accuracy << " at level " << schedule.back()
              << "; outputs in " << pipeline.out << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const CLI::ParseError& error) {
    std::cerr << "error: usage_error: " << error.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  } catch (const CliError& error) {
    std::cerr << "error: " << status_name(error.code) << ": " << error.what() << "\n";
    return 1;
  } catch (const std::exception& error) {
    std::cerr << "error: internal_error: " << error.what() << "\n";
    return 1;
  }
}
