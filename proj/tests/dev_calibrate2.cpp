// Dev-only calibration for the training-strategy and mode-fidelity suites.

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "dataset.hpp"
#include "info.hpp"
#include "model.hpp"

using namespace mcbm;

int main(int argc, char** argv) {
  double sigma = argc > 1 ? std::atof(argv[1]) : 0.5;
  int epochs = argc > 2 ? std::atoi(argv[2]) : 80;
  double alpha = argc > 3 ? std::atof(argv[3]) : 4.0;
  double lr = argc > 4 ? std::atof(argv[4]) : 1.0;
  std::uint64_t seed = argc > 5 ? std::strtoull(argv[5], nullptr, 10) : 1;

  SyntheticSpec spec;
  spec.levels = 3;
  spec.base_size = 2;
  spec.decay_rate = argc > 8 ? std::atof(argv[8]) : 0.5;
  spec.classes = 4;
  spec.samples = argc > 6 ? std::atoll(argv[6]) : 1200;
  spec.feature_sigma = sigma;
  spec.seed = seed;
  auto synthetic = generate_synthetic(spec);
  auto parts = split(synthetic.data, 0.7, 0.15, 0.15, seed);
  auto ranking = mrmr_rank(parts.train);

  NestingSchedule schedule;
  schedule.levels = std::vector<int>{2, 6, 14};
  if (argc > 7 && std::atoi(argv[7]) == 5) schedule.levels = {2, 4, 6, 10, 14};
  if (argc > 7 && std::atoi(argv[7]) == 7) schedule.levels = {6, 10, 14};
  if (argc > 7 && std::atoi(argv[7]) == 8) schedule.levels = {8, 14};

  LossConfig config;
  config.alpha = alpha;
  config.learning_rate = lr;
  config.epochs = epochs;
  config.batch_size = 32;
  config.seed = seed;

  const bool weighted = argc > 9 && std::atoi(argv[9]) == 1;
  auto run = [&](HeadMode mode, EfficientTraining strategy) {
    auto model = init_model(parts.train.feature_dim, 14, spec.classes, schedule, mode,
                            TrainingMode::joint, ranking, seed);
    LossConfig c = config;
    c.efficient_training = strategy;
    if (weighted) {
      c.lambdas.clear();
      for (int d : schedule.levels) c.lambdas.push_back(static_cast<double>(d) / schedule.widest());
    }
    train(model, parts.train, &parts.val, c);
    std::vector<double> acc;
    for (int d : schedule.levels) acc.push_back(evaluate(model, parts.test, d).accuracy);
    return acc;
  };

  auto all_levels = run(HeadMode::efficient, EfficientTraining::all_levels);
  auto random_level = run(HeadMode::efficient, EfficientTraining::random_level);
  auto standard = run(HeadMode::standard, EfficientTraining::all_levels);

  std::printf("level  all_levels  random_level  standard\n");
  for (std::size_t i = 0; i < schedule.levels.size(); ++i) {
    std::printf("%5d  %10.4f  %12.4f  %8.4f\n", schedule.levels[i], all_levels[i],
                random_level[i], standard[i]);
  }
  std::printf("c10 small-head drop: %.4f (need > 0.05); largest-head change: %.4f (need < 0.02)\n",
              all_levels[0] - random_level[0], std::abs(all_levels[2] - random_level[2]));
  std::printf("c9 std-vs-eff gap at K: %.4f (need < 0.02)\n", std::abs(standard[2] - all_levels[2]));
  return 0;
}
