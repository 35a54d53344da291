// Dev-only calibration harness for the intervention suites; not registered
// with ctest. Builds the criterion-7/8 suite at various noise levels and
// prints the averaged curves.

#include <cstdio>
#include <numeric>
#include <vector>

#include "dataset.hpp"
#include "info.hpp"
#include "intervene.hpp"
#include "model.hpp"
#include "rng.hpp"

using namespace mcbm;

int main(int argc, char** argv) {
  double sigma = argc > 1 ? std::atof(argv[1]) : 1.0;
  double gamma = argc > 2 ? std::atof(argv[2]) : 0.5;
  double alpha = argc > 3 ? std::atof(argv[3]) : 4.0;
  int epochs = argc > 4 ? std::atoi(argv[4]) : 120;
  int copies = argc > 5 ? std::atoi(argv[5]) : 2;
  int seeds = argc > 6 ? std::atoi(argv[6]) : 4;

  std::vector<int> grid{0, 2, 6, 14, 28, 42};
  if (copies == 0) grid = {0, 2, 6, 14};
  std::vector<double> matched_mrmr(grid.size(), 0.0);
  std::vector<double> full_mrmr(grid.size(), 0.0);
  std::vector<double> matched_random(grid.size(), 0.0);

  for (int seed = 1; seed <= seeds; ++seed) {
    SyntheticSpec spec;
    spec.levels = 3;
    spec.base_size = 2;
    spec.growth_rate = 2.0;
    spec.decay_rate = gamma;
    spec.classes = 4;
    spec.samples = 1000;
    spec.redundancy_copies = copies;
    spec.feature_sigma = sigma;
    spec.seed = static_cast<std::uint64_t>(seed);
    auto synthetic = generate_synthetic(spec);
    auto parts = split(synthetic.data, 0.7, 0.15, 0.15, spec.seed);

    auto ranking = mrmr_rank(parts.train);
    NestingSchedule schedule;
    const int k_total = synthetic.data.concept_count();
    schedule.levels = copies > 0 ? std::vector<int>{2, 6, 14, 28, k_total}
                                 : std::vector<int>{2, 6, 14};
    auto model = init_model(parts.train.feature_dim, k_total, spec.classes, schedule,
                            HeadMode::efficient, TrainingMode::joint, ranking, spec.seed);
    LossConfig config;
    config.alpha = alpha;
    config.learning_rate = 1.0;
    config.epochs = epochs;
    config.batch_size = 32;
    config.seed = spec.seed;
    train(model, parts.train, &parts.val, config);

    auto curve_mm = accuracy_at_k(model, parts.test, ranking.order, grid, HeadPolicy::matched);
    auto curve_fm = accuracy_at_k(model, parts.test, ranking.order, grid, HeadPolicy::full_head);

    std::vector<int> random_order(static_cast<std::size_t>(k_total));
    std::iota(random_order.begin(), random_order.end(), 0);
    CounterRng perm_rng(static_cast<std::uint64_t>(seed), 999);
    perm_rng.shuffle(random_order);
    auto curve_mr = accuracy_at_k(model, parts.test, random_order, grid, HeadPolicy::matched);

    const auto bits = evaluate(model, parts.test, schedule.widest());
    std::printf("seed %d: widest acc %.3f\n", seed, bits.accuracy);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      matched_mrmr[g] += curve_mm[g].accuracy / seeds;
      full_mrmr[g] += curve_fm[g].accuracy / seeds;
      matched_random[g] += curve_mr[g].accuracy / seeds;
    }
  }

  std::printf("%6s %14s %14s %14s\n", "k", "matched_mrmr", "full_mrmr", "matched_rand");
  double auc_gap_order = 0.0;
  double gap8_min = 1e9;
  double gap8_sum = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::printf("%6d %14.4f %14.4f %14.4f\n", grid[g], matched_mrmr[g], full_mrmr[g],
                matched_random[g]);
    auc_gap_order += (matched_mrmr[g] - matched_random[g]) / static_cast<double>(grid.size());
    if (grid[g] > 0 && grid[g] < 42) {
      const double gap = matched_mrmr[g] - full_mrmr[g];
      gap8_min = std::min(gap8_min, gap);
      gap8_sum += gap;
    }
  }
  std::printf("criterion7 AUC gap (mrmr - random): %.4f (need > 0.05)\n", auc_gap_order);
  std::printf("criterion8 min gap %.4f mean gap %.4f (need min >= 0, mean > 0)\n", gap8_min,
              gap8_sum / 4.0);
  return 0;
}
