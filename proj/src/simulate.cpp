#include "sfofr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfofr/error.hpp"
#include "sfofr/random.hpp"
#include "sfofr/spatial.hpp"

namespace sfofr {

double true_psi_gaussian(double r, double t) {
  const double u = (t - r) / 225.0;
  return 7.0 / 500.0 / std::sqrt(0.006 * M_PI) * std::exp(-u * u / 0.006);
}

double soft_threshold(double v, double threshold) {
  if (v > threshold) return v - threshold;
  if (v < -threshold) return v + threshold;
  return 0.0;
}

double complex_psi_raw(double r, double t) {
  const double a = r / 225.0, b = t / 225.0;
  return 0.1 * (std::sin(10.0 * a) * std::cos(10.0 * b) + std::exp(-5.0 * (a * a + b * b)) +
                0.5 * std::sin(5.0 * (a + b)));
}

double true_psi_complex(double r, double t) { return soft_threshold(complex_psi_raw(r, t), 0.03); }

TruePsi parse_true_psi(const std::string& name) {
  if (name == "gaussian") return TruePsi::gaussian;
  if (name == "complex") return TruePsi::complex;
  fail(ErrorCode::invalid_argument, "unknown true surface '" + name + "' (gaussian, complex)");
}

const char* to_string(TruePsi psi) {
  return psi == TruePsi::gaussian ? "gaussian" : "complex";
}

void SimulationConfig::validate() const {
  require(n >= 2, ErrorCode::invalid_argument, "need at least 2 sites");
  require(k_basis >= 1 && g_basis >= 1, ErrorCode::invalid_argument, "basis sizes must be positive");
  require(sigma2 >= 0.0 && rho > 0.0 && smoothness > 0.0 && tau2 >= 0.0,
          ErrorCode::invalid_argument, "covariance parameters out of range");
  require(train_frac > 0.0 && train_frac < 1.0, ErrorCode::invalid_argument,
          "train fraction must be in (0, 1)");
  require(grid_points >= std::max(k_basis, g_basis), ErrorCode::invalid_argument,
          "grid has fewer points than basis functions");
}

MatrixXd true_surface(TruePsi psi, const VectorXd& r_grid, const VectorXd& t_grid) {
  MatrixXd s(r_grid.size(), t_grid.size());
  for (Index i = 0; i < r_grid.size(); ++i)
    for (Index j = 0; j < t_grid.size(); ++j)
      s(i, j) = psi == TruePsi::gaussian ? true_psi_gaussian(r_grid[i], t_grid[j])
                                         : true_psi_complex(r_grid[i], t_grid[j]);
  return s;
}

SimulatedData generate(const SimulationConfig& c) {
  c.validate();
  SimulatedData out;
  const Interval domain{0.0, c.domain_hi};
  const VectorXd grid = VectorXd::LinSpaced(c.grid_points, 1.0, double(c.grid_points));
  out.phi = make_bspline(domain, c.k_basis, c.order, grid);
  out.xi = make_bspline(domain, c.g_basis, c.order, grid);

  auto& truth = out.truth;
  truth.psi_surface = true_surface(c.psi, grid, grid);
  truth.psi_coef = project_surface(out.xi, out.phi, truth.psi_surface);

  Rng rng(c.seed);
  MatrixXd coords(c.n, 2);
  for (Index i = 0; i < c.n; ++i) {
    coords(i, 0) = rng.uniform();
    coords(i, 1) = rng.uniform();
  }
  truth.x_coef.resize(c.n, c.g_basis);
  for (Index i = 0; i < c.n; ++i)
    for (Index g = 0; g < c.g_basis; ++g) truth.x_coef(i, g) = coords(i, 0) + rng.normal();

  truth.w_coef = MatrixXd::Zero(c.n, c.k_basis);
  if (c.spatial_effect && c.sigma2 > 0.0) {
    Eigen::LLT<MatrixXd> llt(matern_cov(coords, c.sigma2, c.rho, c.smoothness));
    require(llt.info() == Eigen::Success, ErrorCode::numerical_failure,
            "Matern covariance of the simulated sites is not positive definite");
    truth.w_coef = llt.matrixL() * rng.normal_matrix(c.n, c.k_basis);
  }
  MatrixXd noise = rng.normal_matrix(c.n, c.k_basis) * std::sqrt(c.tau2);
  truth.y_coef = truth.x_coef * truth.psi_coef + truth.w_coef + noise;

  std::vector<Index> perm(c.n);
  std::iota(perm.begin(), perm.end(), Index(0));
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  const Index n_train = std::clamp<Index>(Index(std::llround(c.train_frac * double(c.n))), 1,
                                          c.n - 1);
  truth.train.assign(perm.begin(), perm.begin() + n_train);
  truth.test.assign(perm.begin() + n_train, perm.end());
  std::sort(truth.train.begin(), truth.train.end());
  std::sort(truth.test.begin(), truth.test.end());

  auto& full = out.full;
  full.response = out.phi.evaluate(truth.y_coef);
  full.covariate = out.xi.evaluate(truth.x_coef);
  full.t_grid = grid;
  full.r_grid = grid;
  full.t_domain = domain;
  full.r_domain = domain;
  full.spatial = SpatialStructure::continuous(coords);
  for (Index i = 0; i < c.n; ++i) full.ids.push_back("s" + std::to_string(i + 1));
  out.train = full.subset(truth.train);
  out.test = full.subset(truth.test);
  return out;
}

}  // namespace sfofr
