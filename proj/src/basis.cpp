#include "sfofr/basis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sfofr/error.hpp"

namespace sfofr {

namespace {

void check_grid(const VectorXd& grid, Interval domain) {
  require(grid.size() >= 2, ErrorCode::invalid_argument, "grid needs at least two points");
  require(domain.length() > 0.0, ErrorCode::invalid_argument, "domain has zero length");
  for (Index j = 0; j < grid.size(); ++j) {
    require(std::isfinite(grid[j]), ErrorCode::invalid_argument, "grid has non-finite values");
    require(domain.contains(grid[j]), ErrorCode::invalid_argument,
            "grid point outside the basis domain");
    if (j > 0)
      require(grid[j] > grid[j - 1], ErrorCode::invalid_argument,
              "grid must be strictly increasing");
  }
}

// Largest-magnitude entry positive; ties go to the lowest index.
void fix_sign_by_max(Eigen::Ref<VectorXd> v) {
  const double m = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= m * (1.0 - 1e-9)) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace

BasisFamily parse_basis_family(const std::string& name) {
  if (name == "bspline") return BasisFamily::bspline;
  if (name == "fourier") return BasisFamily::fourier;
  if (name == "fpc") return BasisFamily::fpc;
  fail(ErrorCode::invalid_argument, "unknown basis family '" + name + "'");
}

const char* to_string(BasisFamily family) {
  switch (family) {
    case BasisFamily::bspline: return "bspline";
    case BasisFamily::fourier: return "fourier";
    case BasisFamily::fpc: return "fpc";
  }
  return "?";
}

VectorXd trapezoid_weights(const VectorXd& grid, Interval domain) {
  check_grid(grid, domain);
  const Index n = grid.size();
  VectorXd w(n);
  for (Index j = 1; j + 1 < n; ++j) w[j] = 0.5 * (grid[j + 1] - grid[j - 1]);
  w[0] = (grid[0] - domain.lo) + 0.5 * (grid[1] - grid[0]);
  w[n - 1] = (domain.hi - grid[n - 1]) + 0.5 * (grid[n - 1] - grid[n - 2]);
  return w;
}

MatrixXd BasisSystem::project(const MatrixXd& curves) const {
  require(curves.cols() == grid_size(), ErrorCode::dimension_mismatch,
          "curves do not match the basis grid");
  return curves * weights.asDiagonal() * values.transpose();
}

MatrixXd BasisSystem::evaluate(const MatrixXd& coef) const {
  require(coef.cols() == size(), ErrorCode::dimension_mismatch,
          "coefficient columns do not match the basis size");
  return coef * values;
}

double BasisSystem::orthonormality_residual() const {
  const MatrixXd gram = values * weights.asDiagonal() * values.transpose();
  return (gram - MatrixXd::Identity(size(), size())).cwiseAbs().maxCoeff();
}

MatrixXd orthonormalize(const MatrixXd& raw, const VectorXd& weights) {
  require(raw.cols() == weights.size(), ErrorCode::dimension_mismatch,
          "weights do not match the number of grid points");
  require((weights.array() > 0.0).all(), ErrorCode::invalid_argument,
          "quadrature weights must be positive");
  const Index k = raw.rows();
  if (k > raw.cols()) {
    std::ostringstream msg;
    msg << "rank deficient: " << k << " functions on " << raw.cols()
        << " grid points (numerical rank <= " << raw.cols() << ")";
    fail(ErrorCode::rank_deficient, msg.str());
  }
  const VectorXd sqrt_w = weights.cwiseSqrt();
  const MatrixXd scaled_t = (raw * sqrt_w.asDiagonal()).transpose();

  Eigen::ColPivHouseholderQR<MatrixXd> pivoted(scaled_t);
  pivoted.setThreshold(1e-10);
  if (pivoted.rank() < k) {
    std::ostringstream msg;
    msg << "rank deficient: numerical rank " << pivoted.rank() << " < " << k << " functions";
    fail(ErrorCode::rank_deficient, msg.str());
  }

  Eigen::HouseholderQR<MatrixXd> qr(scaled_t);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(scaled_t.rows(), k);
  const MatrixXd& r = qr.matrixQR();
  MatrixXd out(k, raw.cols());
  for (Index i = 0; i < k; ++i) {
    const double sign = r(i, i) < 0 ? -1.0 : 1.0;
    out.row(i) = sign * q.col(i).cwiseQuotient(sqrt_w).transpose();
  }
  return out;
}

MatrixXd bspline_values(Interval domain, int n_basis, int order, const VectorXd& grid) {
  require(order >= 2, ErrorCode::invalid_argument, "B-spline order must be >= 2");
  require(n_basis >= order, ErrorCode::invalid_argument, "B-spline n_basis must be >= order");
  check_grid(grid, domain);

  const int n_inner = n_basis - order + 2;  // includes both boundary knots
  std::vector<double> knots;
  knots.reserve(n_basis + order);
  for (int i = 0; i < order - 1; ++i) knots.push_back(domain.lo);
  for (int i = 0; i < n_inner; ++i)
    knots.push_back(domain.lo + domain.length() * i / (n_inner - 1));
  for (int i = 0; i < order - 1; ++i) knots.push_back(domain.hi);

  MatrixXd b = MatrixXd::Zero(n_basis, grid.size());
  std::vector<double> local(order), left(order), right(order);
  for (Index j = 0; j < grid.size(); ++j) {
    const double x = grid[j];
    // span index s with knots[s] <= x < knots[s+1]; the right end maps to the last span
    int s = order - 1;
    while (s < n_basis - 1 && x >= knots[s + 1]) ++s;
    // Cox-de Boor triangle for the `order` nonzero functions
    local[0] = 1.0;
    for (int d = 1; d < order; ++d) {
      left[d] = x - knots[s + 1 - d];
      right[d] = knots[s + d] - x;
      double saved = 0.0;
      for (int r = 0; r < d; ++r) {
        const double denom = right[r + 1] + left[d - r];
        const double tmp = denom > 0 ? local[r] / denom : 0.0;
        local[r] = saved + right[r + 1] * tmp;
        saved = left[d - r] * tmp;
      }
      local[d] = saved;
    }
    for (int r = 0; r < order; ++r) b(s - order + 1 + r, j) = local[r];
  }
  return b;
}

BasisSystem make_bspline(Interval domain, int n_basis, int order, const VectorXd& grid) {
  BasisSystem basis;
  basis.family = BasisFamily::bspline;
  basis.domain = domain;
  basis.grid = grid;
  basis.order = order;
  basis.weights = trapezoid_weights(grid, domain);
  basis.values = orthonormalize(bspline_values(domain, n_basis, order, grid), basis.weights);
  return basis;
}

BasisSystem make_fourier(Interval domain, int n_basis, const VectorXd& grid) {
  require(n_basis >= 1, ErrorCode::invalid_argument, "Fourier n_basis must be positive");
  if (n_basis % 2 == 0) {
    std::ostringstream msg;
    msg << "Fourier n_basis must be odd (constant + sin/cos pairs); use " << n_basis + 1;
    fail(ErrorCode::invalid_argument, msg.str());
  }
  BasisSystem basis;
  basis.family = BasisFamily::fourier;
  basis.domain = domain;
  basis.grid = grid;
  basis.weights = trapezoid_weights(grid, domain);
  const double len = domain.length();
  MatrixXd raw(n_basis, grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    const double u = (grid[j] - domain.lo) / len;
    raw(0, j) = 1.0 / std::sqrt(len);
    for (int f = 1; 2 * f - 1 < n_basis; ++f) {
      const double arg = 2.0 * std::numbers::pi * f * u;
      raw(2 * f - 1, j) = std::sqrt(2.0 / len) * std::sin(arg);
      raw(2 * f, j) = std::sqrt(2.0 / len) * std::cos(arg);
    }
  }
  basis.values = orthonormalize(raw, basis.weights);
  return basis;
}

namespace {

struct WeightedEigen {
  VectorXd values;   // non-increasing
  MatrixXd vectors;  // columns = eigenvectors of W^1/2 C W^1/2
};

WeightedEigen weighted_covariance_eigen(const MatrixXd& curves, const VectorXd& weights) {
  require(curves.rows() >= 2, ErrorCode::invalid_argument, "FPC needs at least two curves");
  const MatrixXd centered = curves.rowwise() - curves.colwise().mean();
  const MatrixXd cov = centered.transpose() * centered / double(curves.rows() - 1);
  const VectorXd sw = weights.cwiseSqrt();
  const MatrixXd op = sw.asDiagonal() * cov * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(op);
  require(es.info() == Eigen::Success, ErrorCode::numerical_failure,
          "FPC eigendecomposition failed");
  WeightedEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

}  // namespace

VectorXd fpc_eigenvalues(const MatrixXd& curves, const VectorXd& grid, Interval domain) {
  return weighted_covariance_eigen(curves, trapezoid_weights(grid, domain)).values;
}

int fpc_components_for_variance(const MatrixXd& curves, const VectorXd& grid, Interval domain,
                                double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::invalid_argument,
          "variance fraction must be in (0, 1]");
  const VectorXd ev = fpc_eigenvalues(curves, grid, domain).cwiseMax(0.0);
  const double total = ev.sum();
  require(total > 0.0, ErrorCode::rank_deficient, "curves have no variation");
  double acc = 0.0;
  for (Index i = 0; i < ev.size(); ++i) {
    acc += ev[i];
    if (acc >= fraction * total * (1.0 - 1e-12)) return int(i + 1);
  }
  return int(ev.size());
}

BasisSystem make_fpc(const MatrixXd& curves, int n_components, const VectorXd& grid,
                     Interval domain) {
  require(curves.cols() == grid.size(), ErrorCode::dimension_mismatch,
          "curves do not share the grid");
  require(n_components >= 1, ErrorCode::invalid_argument, "n_components must be positive");
  require(curves.rows() >= n_components, ErrorCode::invalid_argument,
          "FPC needs at least as many curves as components");
  BasisSystem basis;
  basis.family = BasisFamily::fpc;
  basis.domain = domain;
  basis.grid = grid;
  basis.weights = trapezoid_weights(grid, domain);
  const WeightedEigen eig = weighted_covariance_eigen(curves, basis.weights);

  const double top = eig.values.size() ? eig.values[0] : 0.0;
  Index rank = 0;
  while (rank < eig.values.size() && top > 0 && eig.values[rank] > 1e-10 * top) ++rank;
  if (n_components > rank) {
    std::ostringstream msg;
    msg << "requested " << n_components << " FPC components but the covariance rank is "
        << rank;
    fail(ErrorCode::rank_deficient, msg.str());
  }

  const VectorXd sw = basis.weights.cwiseSqrt();
  basis.values.resize(n_components, grid.size());
  for (int c = 0; c < n_components; ++c) {
    VectorXd v = eig.vectors.col(c).cwiseQuotient(sw);
    fix_sign_by_max(v);
    basis.values.row(c) = v.transpose();
  }
  return basis;
}

TensorSurface tensor_surface(const BasisSystem& xi, const BasisSystem& phi,
                             const MatrixXd& coeff) {
  require(coeff.rows() == xi.size() && coeff.cols() == phi.size(),
          ErrorCode::dimension_mismatch, "coefficient matrix does not match the basis sizes");
  return TensorSurface{xi.grid, phi.grid, xi.values.transpose() * coeff * phi.values};
}

MatrixXd project_surface(const BasisSystem& xi, const BasisSystem& phi,
                         const MatrixXd& surface) {
  require(surface.rows() == xi.grid_size() && surface.cols() == phi.grid_size(),
          ErrorCode::dimension_mismatch, "surface does not match the basis grids");
  return xi.values * xi.weights.asDiagonal() * surface * phi.weights.asDiagonal() *
         phi.values.transpose();
}

}  // namespace sfofr
