#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sfofr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Batch-means Monte Carlo standard error with batch size floor(sqrt(U)).
/// Needs U >= 100; a constant chain gives 0.
double mcse(const VectorXd& chain);

/// Effective sample size from Geyer's initial positive sequence estimator.
/// A constant chain gives U.
double ess(const VectorXd& chain);

/// ESS and MCSE over every entry of a block of matrix-valued draws.
struct BlockDiagnostics {
  double ess_median = 0.0;
  double ess_min = 0.0;
  double ess_mean = 0.0;
  double mcse_max = 0.0;  // 0 when the chain is too short for batch means
};

BlockDiagnostics block_diagnostics(const std::vector<MatrixXd>& draws);

}  // namespace sfofr
