#pragma once

#include <Eigen/Dense>
#include <string>

namespace sfofr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class BasisFamily { bspline, fourier, fpc };

BasisFamily parse_basis_family(const std::string& name);
const char* to_string(BasisFamily family);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Discrete L2 weights on a strictly increasing grid. Interior points get the
/// trapezoid rule; the two end cells are extended out to the domain bounds so
/// the weights always sum to domain.length().
VectorXd trapezoid_weights(const VectorXd& grid, Interval domain);

/// An orthonormal system of functions evaluated on a grid.
///
/// `values` is n_basis x grid size; row k holds phi_k at every grid point.
/// Orthonormality is with respect to `weights`:
///   values * diag(weights) * values^T == I.
struct BasisSystem {
  BasisFamily family = BasisFamily::bspline;
  Interval domain;
  VectorXd grid;
  MatrixXd values;
  VectorXd weights;
  int order = 0;  // B-spline order; 0 for other families

  Index size() const { return values.rows(); }
  Index grid_size() const { return values.cols(); }

  /// Coefficients of each row of `curves` (rows = curves on `grid`).
  MatrixXd project(const MatrixXd& curves) const;
  /// Curves evaluated on the grid from coefficient rows.
  MatrixXd evaluate(const MatrixXd& coef) const;
  /// Max-abs deviation of the weighted Gram matrix from the identity.
  double orthonormality_residual() const;
};

/// Orthonormalize the rows of `raw` under the weighted inner product
/// <f,g> = sum_j w_j f_j g_j. Row i of the result is a combination of raw rows
/// 0..i, with positive weighted inner product against raw row i. Throws
/// ErrorCode::rank_deficient (message carries the numerical rank).
MatrixXd orthonormalize(const MatrixXd& raw, const VectorXd& weights);

/// Raw (not orthonormalized) B-spline values, n_basis x grid size.
/// Equally spaced interior knots, boundary knots with full multiplicity.
MatrixXd bspline_values(Interval domain, int n_basis, int order, const VectorXd& grid);

BasisSystem make_bspline(Interval domain, int n_basis, int order, const VectorXd& grid);

/// Constant followed by (sin, cos) pairs of increasing frequency. n_basis must
/// be odd.
BasisSystem make_fourier(Interval domain, int n_basis, const VectorXd& grid);

/// Functional principal components of `curves` (n x grid size). Components are
/// ordered by non-increasing eigenvalue; each row's largest-magnitude entry is
/// positive.
BasisSystem make_fpc(const MatrixXd& curves, int n_components, const VectorXd& grid,
                     Interval domain);

/// Eigenvalues of the weighted empirical covariance operator, non-increasing.
VectorXd fpc_eigenvalues(const MatrixXd& curves, const VectorXd& grid, Interval domain);

/// Smallest number of components whose eigenvalues explain `fraction` of the
/// total variance.
int fpc_components_for_variance(const MatrixXd& curves, const VectorXd& grid,
                                Interval domain, double fraction);

struct TensorSurface {
  VectorXd r_grid;
  VectorXd t_grid;
  MatrixXd values;  // r_grid.size() x t_grid.size()
};

/// xi.values^T * coeff * phi.values; coeff is xi.size() x phi.size().
TensorSurface tensor_surface(const BasisSystem& xi, const BasisSystem& phi,
                             const MatrixXd& coeff);

/// Weighted L2 projection of a surface on xi.grid x phi.grid onto the tensor
/// basis; the inverse of tensor_surface on the tensor span.
MatrixXd project_surface(const BasisSystem& xi, const BasisSystem& phi,
                         const MatrixXd& surface);

}  // namespace sfofr
