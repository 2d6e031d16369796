#include "sfofr/baseline_uk.hpp"

#include <algorithm>

#include "sfofr/error.hpp"

namespace sfofr {

MatrixXd make_drift(const MatrixXd& covariates, Index terms) {
  const Index l = terms < 0 ? covariates.cols() : std::min(terms, covariates.cols());
  MatrixXd x(covariates.rows(), 1 + l);
  x.col(0).setOnes();
  x.rightCols(l) = covariates.leftCols(l);
  return x;
}

UKSystem uk_system(const MatrixXd& coords, const MatrixXd& drift, const VariogramModel& model) {
  const Index n = coords.rows(), l = drift.cols();
  require(coords.cols() == 2 && drift.rows() == n, ErrorCode::dimension_mismatch,
          "coordinates and drift rows must match");
  require(n > l, ErrorCode::invalid_argument, "need more sites than drift terms");
  UKSystem s;
  s.gamma_model = model;
  s.coords = coords;
  s.drift = drift;
  const MatrixXd dist = distance_matrix(coords);
  s.system = MatrixXd::Zero(n + l, n + l);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) s.system(i, j) = model(dist(i, j));
  s.system.topRightCorner(n, l) = drift;
  s.system.bottomLeftCorner(l, n) = drift.transpose();
  s.lu.compute(s.system);
  require(s.lu.isInvertible(), ErrorCode::numerical_failure,
          "kriging system is singular; add a nugget, drop drift terms or remove duplicate sites");
  return s;
}

UKSystem uk_fit(const MatrixXd& curves, const VectorXd& quad_weights, const MatrixXd& drift,
                const MatrixXd& coords, const UkConfig& config) {
  require(curves.rows() == drift.rows(), ErrorCode::dimension_mismatch,
          "curves and drift rows must match");
  const MatrixXd beta = drift.colPivHouseholderQr().solve(curves);
  const MatrixXd resid = curves - drift * beta;
  EmpiricalVariogram emp =
      trace_variogram(resid, quad_weights, coords, config.n_bins, config.max_distance);
  UKSystem s = uk_system(coords, drift, fit_variogram(emp, config.family));
  s.empirical = std::move(emp);
  return s;
}

UkWeights uk_weights(const UKSystem& s, const Eigen::Vector2d& target,
                     const VectorXd& target_drift) {
  const Index n = s.coords.rows(), l = s.drift.cols();
  require(target_drift.size() == l, ErrorCode::dimension_mismatch,
          "target drift does not match the drift terms");
  VectorXd rhs(n + l);
  for (Index i = 0; i < n; ++i)
    rhs[i] = s.gamma_model((s.coords.row(i).transpose() - target).norm());
  rhs.tail(l) = target_drift;
  const VectorXd sol = s.lu.solve(rhs);
  return UkWeights{sol.head(n), sol.tail(l)};
}

MatrixXd uk_predict(const UKSystem& s, const MatrixXd& curves, const MatrixXd& targets,
                    const MatrixXd& target_drift) {
  require(curves.rows() == s.coords.rows(), ErrorCode::dimension_mismatch,
          "curves do not match the kriging sites");
  require(targets.cols() == 2 && target_drift.rows() == targets.rows(),
          ErrorCode::dimension_mismatch, "targets and target drift rows must match");
  MatrixXd out(targets.rows(), curves.cols());
  for (Index q = 0; q < targets.rows(); ++q) {
    const UkWeights w = uk_weights(s, targets.row(q).transpose(), target_drift.row(q).transpose());
    out.row(q) = w.lambda.transpose() * curves;
  }
  return out;
}

}  // namespace sfofr
