#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfofr/basis.hpp"
#include "sfofr/sampler.hpp"

namespace sfofr {

/// A set of U surfaces produced on demand, so they never have to be held in
/// memory at once.
struct SurfaceSource {
  Index count = 0;
  std::function<MatrixXd(Index)> draw;
};

/// Psi^(u) = Xi' psi^(u) Phi for every stored draw.
SurfaceSource psi_surfaces(const PosteriorDraws& draws, const BasisSystem& xi,
                           const BasisSystem& phi);
SurfaceSource matrix_surfaces(const std::vector<MatrixXd>& surfaces);

struct SimultaneousBand {
  double alpha = 0.05;
  double m_alpha = 0.0;
  MatrixXd lower;
  MatrixXd upper;
  Eigen::MatrixXi significance;  // sign of the mean where the band excludes 0
};

struct SurfaceSummary {
  VectorXd r_grid;
  VectorXd t_grid;
  MatrixXd mean;
  MatrixXd sd;      // floored at sd_floor
  MatrixXd simbas;  // in [0, 1]
  VectorXd z;       // max standardized deviation of every draw
  std::vector<SimultaneousBand> bands;

  const SimultaneousBand& band(double alpha) const;
};

inline constexpr double sd_floor = 1e-12;

/// Order-statistic quantile Z_(floor(U (1 - alpha)) + 1). Throws when
/// U * alpha < 1.
double band_multiplier(const VectorXd& z, double alpha);

/// Pointwise mean/SD, simultaneous bands for every alpha, and SimBaS.
SurfaceSummary summarize_surface(const SurfaceSource& source, const std::vector<double>& alphas,
                                 Index min_draws = 50);
SurfaceSummary summarize_surface(const PosteriorDraws& draws, const BasisSystem& xi,
                                 const BasisSystem& phi, const std::vector<double>& alphas);

/// Contour-avoiding region at reference level 0 (1 = significant).
struct ContourRegion {
  MatrixXd f0;
  Eigen::MatrixXi mask;
};
ContourRegion contour_avoiding(const SurfaceSource& source, double alpha, Index min_draws = 50);

struct KrigingResult {
  std::vector<std::string> ids;
  VectorXd t_grid;
  double alpha = 0.05;
  MatrixXd mean;   // q x n_t
  MatrixXd lower;  // per-curve simultaneous band
  MatrixXd upper;
  VectorXd m_alpha;  // per site
  std::vector<MatrixXd> predictive_draws;  // U entries of q x n_t when requested
};

/// Linear predictors eta^(u) (q x k_n) at new sites, one per draw.
std::vector<MatrixXd> predictors_fixed(const PosteriorDraws& draws, const MatrixXd& x_star);
std::vector<MatrixXd> predictors_projection(const PosteriorDraws& draws, const MatrixXd& x_star,
                                            const MatrixXd& p_star);
/// Continuous SFoFR: W at the targets drawn from its Gaussian conditional
/// given W^(u) under Gamma(rho^(u)), site by site.
std::vector<MatrixXd> predictors_sfofr_continuous(const PosteriorDraws& draws,
                                                  const MatrixXd& x_star,
                                                  const MatrixXd& train_coords,
                                                  const MatrixXd& target_coords,
                                                  std::uint64_t seed);
/// Discrete SFoFR: each target's W row drawn from the ICAR full conditional
/// given its training neighbours, N(mean of neighbours, 1 / (nu d)).
std::vector<MatrixXd> predictors_sfofr_discrete(const PosteriorDraws& draws,
                                                const MatrixXd& x_star,
                                                const std::vector<std::vector<Index>>& neighbours,
                                                std::uint64_t seed);

/// Predictive curves y^(u) = (eta^(u) + tau^(u) z) Phi with per-curve
/// simultaneous bands at `alpha`.
KrigingResult krige(const std::vector<MatrixXd>& eta, const VectorXd& tau2,
                    const BasisSystem& phi, double alpha, std::uint64_t seed,
                    bool keep_draws = false);

struct PredictionScore {
  double mspe = 0.0;
  double mean_coverage = 0.0;
};

/// sqrt(mean squared error) over all curves and grid points.
double mspe(const MatrixXd& predicted, const MatrixXd& truth);
/// Mean over curves of the fraction of grid points inside [lower, upper].
double mean_coverage(const MatrixXd& lower, const MatrixXd& upper, const MatrixXd& truth);
PredictionScore score(const KrigingResult& result, const MatrixXd& truth);
/// sqrt(mean squared difference) over the (r, t) grid.
double score_surface(const MatrixXd& psi_hat, const MatrixXd& psi_true);

/// r, t, mean, sd, lower_a, upper_a, significant_a (per alpha), simbas
/// [, contour].
void write_surface_csv(const std::filesystem::path& path, const SurfaceSummary& summary,
                       const ContourRegion* contour = nullptr);
/// site, t, mean, lower, upper.
void write_kriging_csv(const std::filesystem::path& path, const KrigingResult& result);

}  // namespace sfofr
