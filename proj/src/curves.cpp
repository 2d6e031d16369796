#include "sfofr/curves.hpp"

#include <cmath>

#include "sfofr/error.hpp"

namespace sfofr {

void FunctionalDataset::validate() const {
  const Index n = response.rows();
  require(covariate.rows() == n, ErrorCode::dimension_mismatch,
          "response and covariate curves have different site counts");
  require(response.cols() == t_grid.size(), ErrorCode::dimension_mismatch,
          "response curves do not match the t grid");
  require(covariate.cols() == r_grid.size(), ErrorCode::dimension_mismatch,
          "covariate curves do not match the r grid");
  require(ids.empty() || Index(ids.size()) == n, ErrorCode::dimension_mismatch,
          "number of ids does not match the number of curves");
  require(response.allFinite() && covariate.allFinite(), ErrorCode::schema_violation,
          "curves contain missing or non-finite values");
  for (const VectorXd* g : {&t_grid, &r_grid})
    for (Index j = 1; j < g->size(); ++j)
      require((*g)[j] > (*g)[j - 1], ErrorCode::schema_violation,
              "grids must be strictly increasing");
  if (spatial) {
    require(spatial->size() == n, ErrorCode::dimension_mismatch,
            "spatial metadata does not match the number of curves");
    spatial->validate();
  }
}

FunctionalDataset FunctionalDataset::subset(const std::vector<Index>& rows) const {
  FunctionalDataset out;
  out.t_grid = t_grid;
  out.r_grid = r_grid;
  out.t_domain = t_domain;
  out.r_domain = r_domain;
  const Index m = Index(rows.size());
  out.response.resize(m, response.cols());
  out.covariate.resize(m, covariate.cols());
  for (Index i = 0; i < m; ++i) {
    out.response.row(i) = response.row(rows[i]);
    out.covariate.row(i) = covariate.row(rows[i]);
    if (!ids.empty()) out.ids.push_back(ids[rows[i]]);
  }
  if (spatial) out.spatial = spatial->subset(rows);
  return out;
}

CoefficientSet to_basis(const FunctionalDataset& data, const BasisSystem& phi,
                        const BasisSystem& xi) {
  require(phi.grid.size() == data.t_grid.size() && phi.grid.isApprox(data.t_grid, 1e-12),
          ErrorCode::dimension_mismatch, "phi grid does not match the response grid");
  require(xi.grid.size() == data.r_grid.size() && xi.grid.isApprox(data.r_grid, 1e-12),
          ErrorCode::dimension_mismatch, "xi grid does not match the covariate grid");
  return CoefficientSet{phi.project(data.response), xi.project(data.covariate), phi, xi};
}

MatrixXd from_basis(const MatrixXd& coef, const BasisSystem& basis) {
  return basis.evaluate(coef);
}

BasisSystem make_basis(BasisFamily family, int n_basis, const VectorXd& grid, Interval domain,
                       const MatrixXd& curves, int order) {
  switch (family) {
    case BasisFamily::bspline: return make_bspline(domain, n_basis, order, grid);
    case BasisFamily::fourier: return make_fourier(domain, n_basis, grid);
    case BasisFamily::fpc: return make_fpc(curves, n_basis, grid, domain);
  }
  fail(ErrorCode::invalid_argument, "unknown basis family");
}

GcvResult gcv_select(const MatrixXd& curves, const VectorXd& grid, Interval domain,
                     BasisFamily family, const std::vector<int>& candidates, int order) {
  require(!candidates.empty(), ErrorCode::invalid_argument, "empty GCV candidate list");
  require(curves.cols() == grid.size(), ErrorCode::dimension_mismatch,
          "curves do not match the grid");
  const double n_t = double(grid.size());
  GcvResult result;
  double best = std::numeric_limits<double>::infinity();
  for (int k : candidates) {
    require(k >= 1 && k < grid.size(), ErrorCode::invalid_argument,
            "GCV candidates must be positive and smaller than the grid length");
    const BasisSystem basis = make_basis(family, k, grid, domain, curves, order);
    const MatrixXd fitted = basis.evaluate(basis.project(curves));
    const double rss = (curves - fitted).squaredNorm();
    const double denom = 1.0 - double(k) / n_t;
    const double score = rss / (n_t * denom * denom);
    result.candidates.push_back(k);
    result.scores.push_back(score);
    if (score < best) {
      best = score;
      result.chosen = k;
    }
  }
  return result;
}

}  // namespace sfofr
