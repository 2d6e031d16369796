#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sfofr/basis.hpp"
#include "sfofr/curves.hpp"

namespace sfofr {

/// (7/500) / sqrt(0.006 pi) * exp(-((t - r)/225)^2 / 0.006) on [0, 225]^2.
double true_psi_gaussian(double r, double t);

/// 0 on [-threshold, threshold], shifted towards 0 by `threshold` outside.
double soft_threshold(double v, double threshold);

/// Unthresholded surface (sin(10r)cos(10t) + exp(-5(r^2 + t^2)) + 0.5 sin(5(r + t))) / 10
/// in coordinates rescaled to [0, 1] (r / 225, t / 225).
double complex_psi_raw(double r, double t);

/// soft_threshold(complex_psi_raw(r, t), 0.03).
double true_psi_complex(double r, double t);

enum class TruePsi { gaussian, complex };

TruePsi parse_true_psi(const std::string& name);
const char* to_string(TruePsi psi);

struct SimulationConfig {
  Index n = 1000;
  std::uint64_t seed = 1;
  int k_basis = 15;
  int g_basis = 15;
  int order = 4;
  double sigma2 = 0.5;
  double rho = 0.2;
  double smoothness = 0.5;
  double tau2 = 0.01;
  bool spatial_effect = true;
  TruePsi psi = TruePsi::gaussian;
  double train_frac = 0.7;
  Index grid_points = 225;
  double domain_hi = 225.0;

  void validate() const;
};

struct SimulationTruth {
  MatrixXd psi_coef;     // g_n x k_n, projection of the true surface
  MatrixXd psi_surface;  // n_v x n_t, closed form on the grid
  MatrixXd x_coef;       // n x g_n
  MatrixXd y_coef;       // n x k_n
  MatrixXd w_coef;       // n x k_n
  std::vector<Index> train;
  std::vector<Index> test;
};

struct SimulatedData {
  FunctionalDataset full;
  FunctionalDataset train;
  FunctionalDataset test;
  BasisSystem phi;
  BasisSystem xi;
  SimulationTruth truth;
};

MatrixXd true_surface(TruePsi psi, const VectorXd& r_grid, const VectorXd& t_grid);

SimulatedData generate(const SimulationConfig& config);

}  // namespace sfofr
