#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>

#include "sfofr/spatial.hpp"

namespace sfofr {

struct UkConfig {
  VariogramFamily family = VariogramFamily::gaussian;
  int n_bins = 15;
  double max_distance = -1.0;  // <= 0: half the largest pairwise distance
};

/// Variogram-form universal kriging system
///   [ Gamma  X ] [lambda]   [gamma_*]
///   [ X'     0 ] [  mu  ] = [  x_*  ]
/// with Gamma_ij = gamma(|s_i - s_j|), factored once.
struct UKSystem {
  VariogramModel gamma_model;
  EmpiricalVariogram empirical;
  MatrixXd coords;  // n x 2
  MatrixXd drift;   // n x L
  MatrixXd system;  // (n + L) x (n + L)
  Eigen::FullPivLU<MatrixXd> lu;
};

struct UkWeights {
  VectorXd lambda;
  VectorXd mu;
};

/// Intercept followed by the first `terms` columns of `covariates`; terms < 0
/// keeps them all, 0 gives ordinary kriging.
MatrixXd make_drift(const MatrixXd& covariates, Index terms);

/// Assemble and factor the system for a known variogram. Throws
/// numerical_failure when it is singular.
UKSystem uk_system(const MatrixXd& coords, const MatrixXd& drift, const VariogramModel& model);

/// Trace-variogram of the OLS drift residuals, fitted model, factored system.
UKSystem uk_fit(const MatrixXd& curves, const VectorXd& quad_weights, const MatrixXd& drift,
                const MatrixXd& coords, const UkConfig& config = {});

UkWeights uk_weights(const UKSystem& system, const Eigen::Vector2d& target,
                     const VectorXd& target_drift);

/// Predicted curves (q x n_t) as sum_i lambda_i Y_i for every target.
MatrixXd uk_predict(const UKSystem& system, const MatrixXd& curves, const MatrixXd& targets,
                    const MatrixXd& target_drift);

}  // namespace sfofr
