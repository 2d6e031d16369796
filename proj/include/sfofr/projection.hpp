#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sfofr/basis.hpp"

namespace sfofr {

using SparseMatrixD = Eigen::SparseMatrix<double>;

/// Structured triangular mesh over a rectangle.
struct Mesh {
  MatrixXd vertices;        // m x 2
  Eigen::MatrixXi triangles;  // t x 3 vertex indices
  MatrixXd graph_adjacency;   // m x m, 1 where two vertices share a triangle edge
  Index nx = 0;               // cells along x
  Index ny = 0;               // cells along y

  Index size() const { return vertices.rows(); }
  Index triangle_count() const { return triangles.rows(); }
  double triangle_area(Index tri) const;
};

/// Lattice over [x.lo - margin, x.hi + margin] x [y.lo - margin, y.hi + margin]
/// with spacing <= max_edge. Vertex (i, j) has index j * (nx + 1) + i; every
/// cell is split into (v00, v10, v11) and (v00, v11, v01).
Mesh build_mesh(Interval x, Interval y, double max_edge, double margin);

/// Mesh over the bounding box of `locations` (n x 2).
Mesh build_mesh(const MatrixXd& locations, double max_edge, double margin);

/// Index of the triangle holding `point` (lowest index on ties) and its
/// barycentric coordinates; nullopt when the point is outside the mesh.
struct TriangleHit {
  Index triangle;
  Eigen::Vector3d weights;
};
std::optional<TriangleHit> locate(const Mesh& mesh, const Eigen::Vector2d& point);

/// Piecewise-linear interpolation weights (q x m). Throws outside_mesh naming
/// the offending ids (row numbers when `ids` is empty).
SparseMatrixD interpolation_matrix(const Mesh& mesh, const MatrixXd& locations,
                                   const std::vector<std::string>& ids = {});

struct ProjectionBasis {
  MatrixXd P;               // n x p
  Index rank = 0;
  VectorXd eigenvalues;     // leading p, non-increasing
  std::optional<Mesh> mesh;
  MatrixXd M;               // m x p, point-level only
  SparseMatrixD A;          // n x m, point-level only
  MatrixXd delta_precision; // p x p prior structure for delta: P'QP or M'Q_N M

  bool point_level() const { return mesh.has_value(); }
};

struct MoranEigen {
  MatrixXd vectors;    // leading columns, orthonormal
  VectorXd values;     // non-increasing
  VectorXd all_values; // full spectrum, non-increasing
};

/// Leading eigenpairs of a symmetric operator, sign fixed so each vector's
/// largest-magnitude entry is positive.
MoranEigen leading_eigen(const MatrixXd& op, Index p);

/// Smallest p whose leading eigenvalues reach `fraction` of the positive
/// eigenvalue mass.
Index rank_for_variation(const VectorXd& eigenvalues, double fraction = 0.9);

/// (I - H) D (I - H) with H the hat matrix of x_coef.
MatrixXd moran_operator_areal(const MatrixXd& x_coef, const MatrixXd& adjacency);

/// (I - 11'/m) N (I - 11'/m).
MatrixXd moran_operator_centered(const MatrixXd& adjacency);

/// p <= 0 selects the rank by rank_for_variation.
ProjectionBasis moran_basis_areal(const MatrixXd& x_coef, const MatrixXd& adjacency, Index p);

MoranEigen moran_basis_point(const Mesh& mesh, Index p);

/// P = A M with A from `locations`; p <= 0 selects the rank automatically.
ProjectionBasis projection_point(const Mesh& mesh, const MatrixXd& locations, Index p,
                                 const std::vector<std::string>& ids = {});

/// Rows of P at new point-level sites (A_* M).
MatrixXd project_new_points(const ProjectionBasis& proj, const MatrixXd& locations,
                            const std::vector<std::string>& ids = {});

/// vertices.csv (x,y) and triangles.csv (v1,v2,v3, zero-based).
void write_mesh(const std::filesystem::path& dir, const Mesh& mesh);
Mesh read_mesh(const std::filesystem::path& dir);

}  // namespace sfofr
