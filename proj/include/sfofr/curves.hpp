#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sfofr/basis.hpp"
#include "sfofr/spatial.hpp"

namespace sfofr {

/// Response curves Y (n x n_t) and covariate curves X (n x n_v) observed at
/// n sites, with optional spatial metadata.
struct FunctionalDataset {
  MatrixXd response;
  MatrixXd covariate;
  VectorXd t_grid;
  VectorXd r_grid;
  Interval t_domain;
  Interval r_domain;
  std::optional<SpatialStructure> spatial;
  std::vector<std::string> ids;

  Index size() const { return response.rows(); }
  /// Throws schema_violation / dimension_mismatch on inconsistent content.
  void validate() const;
  FunctionalDataset subset(const std::vector<Index>& rows) const;
};

/// Ỹ (n x k_n) and X̃ (n x g_n) with the bases that produced them.
struct CoefficientSet {
  MatrixXd y_coef;
  MatrixXd x_coef;
  BasisSystem phi;  // over t
  BasisSystem xi;   // over r
};

CoefficientSet to_basis(const FunctionalDataset& data, const BasisSystem& phi,
                        const BasisSystem& xi);

/// coef * basis.values (n x grid size).
MatrixXd from_basis(const MatrixXd& coef, const BasisSystem& basis);

struct GcvResult {
  int chosen = 0;
  std::vector<int> candidates;
  std::vector<double> scores;
};

/// Pick the basis size minimizing the pooled projection-smoother GCV,
///   GCV(k) = sum_i RSS_i(k) / (n_t (1 - k/n_t)^2),
/// ties going to the smaller k. For fpc the basis is estimated from `curves`.
GcvResult gcv_select(const MatrixXd& curves, const VectorXd& grid, Interval domain,
                     BasisFamily family, const std::vector<int>& candidates, int order = 4);

/// Build a basis of the given family on a dataset's grid; `curves` feeds FPC.
BasisSystem make_basis(BasisFamily family, int n_basis, const VectorXd& grid, Interval domain,
                       const MatrixXd& curves, int order = 4);

}  // namespace sfofr
