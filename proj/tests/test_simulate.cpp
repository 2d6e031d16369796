#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sfofr/error.hpp"
#include "sfofr/simulate.hpp"
#include "sfofr/spatial.hpp"

using namespace sfofr;

TEST(TruePsi, GaussianRidgePeak) {
  const double peak = 0.014 / std::sqrt(0.006 * std::numbers::pi);
  EXPECT_NEAR(peak, 0.10197, 1e-5);
  for (double r : {0.0, 17.0, 112.5, 225.0}) EXPECT_NEAR(true_psi_gaussian(r, r), peak, 1e-12);
  EXPECT_LT(true_psi_gaussian(0.0, 225.0), 1e-10);
}

TEST(TruePsi, SoftThresholdIsContinuous) {
  EXPECT_EQ(soft_threshold(0.02, 0.03), 0.0);
  EXPECT_EQ(soft_threshold(-0.03, 0.03), 0.0);
  EXPECT_NEAR(soft_threshold(0.05, 0.03), 0.02, 1e-15);
  EXPECT_NEAR(soft_threshold(-0.05, 0.03), -0.02, 1e-15);
  for (double eps : {1e-3, 1e-6}) {
    EXPECT_LT(std::abs(soft_threshold(0.03 + eps, 0.03)), eps + 1e-15);
    EXPECT_LT(std::abs(soft_threshold(-0.03 - eps, 0.03)), eps + 1e-15);
  }
}

TEST(TruePsi, ComplexSurfaceHasDeadZone) {
  const VectorXd grid = VectorXd::LinSpaced(225, 1.0, 225.0);
  const MatrixXd s = true_surface(TruePsi::complex, grid, grid);
  const double zero_frac = double((s.array() == 0.0).count()) / double(s.size());
  EXPECT_GT(zero_frac, 0.1);
  EXPECT_LT(zero_frac, 0.9);
  EXPECT_NEAR(s(0, 0), soft_threshold(complex_psi_raw(1.0, 1.0), 0.03), 1e-15);
}

TEST(Generate, SplitSizesAndDeterminism) {
  SimulationConfig cfg;
  cfg.n = 200;
  cfg.seed = 9;
  const SimulatedData a = generate(cfg), b = generate(cfg);
  EXPECT_EQ(a.train.size(), 140);
  EXPECT_EQ(a.test.size(), 60);
  EXPECT_EQ(a.full.response, b.full.response);
  EXPECT_EQ(a.truth.train, b.truth.train);
  EXPECT_EQ(a.full.t_grid.size(), 225);
  EXPECT_EQ(a.full.t_domain.hi, 225.0);
  EXPECT_EQ(a.truth.psi_coef.rows(), 15);
  std::vector<Index> all = a.truth.train;
  all.insert(all.end(), a.truth.test.begin(), a.truth.test.end());
  std::sort(all.begin(), all.end());
  for (Index i = 0; i < 200; ++i) EXPECT_EQ(all[std::size_t(i)], i);
  cfg.seed = 10;
  EXPECT_NE(generate(cfg).full.response, a.full.response);
}

TEST(Generate, ConfigurationErrors) {
  SimulationConfig cfg;
  cfg.train_frac = 1.0;
  EXPECT_THROW(generate(cfg), Error);
  cfg = SimulationConfig{};
  cfg.n = 1;
  EXPECT_THROW(generate(cfg), Error);
}

TEST(Generate, RandomEffectFollowsExponentialVariogram) {
  // Semivariance of the generated W columns against 0.5 (1 - exp(-h / 0.2)),
  // pooled over seeds and columns.
  const int bins = 6;
  const double max_d = 0.3;
  VectorXd sum = VectorXd::Zero(bins), count = VectorXd::Zero(bins);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimulationConfig cfg;
    cfg.n = 300;
    cfg.seed = seed;
    const SimulatedData sim = generate(cfg);
    const MatrixXd& coords = sim.full.spatial->coords;
    for (Index c = 0; c < sim.truth.w_coef.cols(); ++c) {
      const EmpiricalVariogram v = trace_variogram(sim.truth.w_coef.col(c), VectorXd::Ones(1),
                                                   coords, bins, max_d);
      for (Index b = 0; b < v.lags.size(); ++b) {
        const int idx = int(v.lags[b] / (max_d / bins));
        sum[idx] += v.gamma[b] * v.pair_counts[b];
        count[idx] += v.pair_counts[b];
      }
    }
  }
  for (int b = 0; b < bins; ++b) {
    const double h = (b + 0.5) * max_d / bins;
    const double expected = 0.5 * (1.0 - std::exp(-h / 0.2));
    EXPECT_NEAR(sum[b] / count[b], expected, 0.12 * expected + 0.01) << h;
  }
}
