#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <vector>

namespace sfofr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class DomainKind { continuous, discrete };

const char* to_string(DomainKind kind);

/// Site geometry: coordinates (continuous) or a binary adjacency (discrete).
struct SpatialStructure {
  DomainKind kind = DomainKind::continuous;
  MatrixXd coords;     // n x 2, continuous only
  MatrixXd adjacency;  // n x n symmetric 0/1 with zero diagonal, discrete only

  static SpatialStructure continuous(MatrixXd coords);
  static SpatialStructure discrete(MatrixXd adjacency);

  Index size() const;
  /// Throws on malformed input; returns a warning string for a disconnected
  /// graph (empty otherwise).
  std::string validate() const;
  /// Reordered copy (row i of the result is row order[i] of this).
  SpatialStructure subset(const std::vector<Index>& order) const;
};

/// Number of connected components of a 0/1 adjacency.
int connected_components(const MatrixXd& adjacency);

struct CovarianceParams {
  double sigma2 = 0.5;
  double rho = 0.2;
  double smoothness = 0.5;
  double nu = 1.0;
  double tau2 = 0.01;
};

MatrixXd distance_matrix(const MatrixXd& coords);
MatrixXd cross_distance(const MatrixXd& a, const MatrixXd& b);

/// Matérn correlation with matern(0) = 1; smoothness 0.5 is exp(-d/rho).
double matern_correlation(double d, double rho, double smoothness);

/// Correlation matrix from distances, plus `jitter` on the diagonal.
MatrixXd matern_from_distances(const MatrixXd& dist, double rho, double smoothness,
                               double jitter = 0.0);

/// sigma2 * matern(d_ij) with 1e-8 * sigma2 added to the diagonal.
MatrixXd matern_cov(const MatrixXd& coords, double sigma2, double rho, double smoothness);

/// Q = diag(D 1) - D.
MatrixXd icar_precision(const MatrixXd& adjacency);
Eigen::SparseMatrix<double> icar_precision_sparse(const MatrixXd& adjacency);

struct MoranResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Moran's I of a residual vector under binary weights, with a two-sided
/// permutation p-value.
MoranResult morans_i(const VectorXd& residuals, const MatrixXd& adjacency,
                     int permutations = 999, std::uint64_t seed = 1);

/// Moran's I averaged over the columns of a residual-curve matrix (n x n_t).
/// The p-value permutes whole curves across sites.
MoranResult mean_morans_i(const MatrixXd& residual_curves, const MatrixXd& adjacency,
                          int permutations = 999, std::uint64_t seed = 1);

struct EmpiricalVariogram {
  VectorXd lags;       // bin midpoints
  VectorXd gamma;
  VectorXd pair_counts;
  std::vector<std::string> warnings;  // one per dropped empty bin
};

/// Trace-variogram of curves (n x n_t) with quadrature weights over t.
/// Bins are `n_bins` equal-width bins on (0, max_distance]; max_distance <= 0
/// means half the largest pairwise distance.
EmpiricalVariogram trace_variogram(const MatrixXd& curves, const VectorXd& quad_weights,
                                   const MatrixXd& coords, int n_bins = 15,
                                   double max_distance = -1.0);

enum class VariogramFamily { gaussian, exponential };

VariogramFamily parse_variogram_family(const std::string& name);
const char* to_string(VariogramFamily family);

/// gamma(h) = nugget + sill * (1 - corr(h)), gamma(0) = 0. `sill` is the
/// partial sill (total sill minus nugget).
struct VariogramModel {
  VariogramFamily family = VariogramFamily::gaussian;
  double nugget = 0.0;
  double sill = 1.0;
  double range = 1.0;

  double operator()(double h) const;
};

/// Pair-count weighted least squares fit with nugget, sill >= 0.
VariogramModel fit_variogram(const EmpiricalVariogram& empirical, VariogramFamily family);

}  // namespace sfofr
