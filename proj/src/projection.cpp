#include "sfofr/projection.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfofr/error.hpp"
#include "sfofr/io.hpp"
#include "sfofr/spatial.hpp"

namespace sfofr {

namespace {

void fix_sign(Eigen::Ref<VectorXd> v) {
  const double m = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= m * (1.0 - 1e-9)) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

double Mesh::triangle_area(Index tri) const {
  const Eigen::Vector2d a = vertices.row(triangles(tri, 0)).transpose();
  const Eigen::Vector2d b = vertices.row(triangles(tri, 1)).transpose();
  const Eigen::Vector2d c = vertices.row(triangles(tri, 2)).transpose();
  return 0.5 * cross(b - a, c - a);
}

Mesh build_mesh(Interval x, Interval y, double max_edge, double margin) {
  require(max_edge > 0.0, ErrorCode::invalid_argument, "max_edge must be positive");
  require(margin >= 0.0, ErrorCode::invalid_argument, "margin must be non-negative");
  const double x0 = x.lo - margin, x1 = x.hi + margin;
  const double y0 = y.lo - margin, y1 = y.hi + margin;
  require(x1 - x0 > 0.0 && y1 - y0 > 0.0, ErrorCode::invalid_argument,
          "mesh domain has zero area");

  Mesh mesh;
  mesh.nx = std::max<Index>(1, Index(std::ceil((x1 - x0) / max_edge - 1e-9)));
  mesh.ny = std::max<Index>(1, Index(std::ceil((y1 - y0) / max_edge - 1e-9)));
  const Index cols = mesh.nx + 1, rows = mesh.ny + 1;
  const double hx = (x1 - x0) / double(mesh.nx), hy = (y1 - y0) / double(mesh.ny);

  mesh.vertices.resize(cols * rows, 2);
  for (Index j = 0; j < rows; ++j)
    for (Index i = 0; i < cols; ++i) {
      // Land the last row/column exactly on the box edge.
      mesh.vertices(j * cols + i, 0) = i == mesh.nx ? x1 : x0 + double(i) * hx;
      mesh.vertices(j * cols + i, 1) = j == mesh.ny ? y1 : y0 + double(j) * hy;
    }

  mesh.triangles.resize(2 * mesh.nx * mesh.ny, 3);
  Index t = 0;
  for (Index j = 0; j < mesh.ny; ++j)
    for (Index i = 0; i < mesh.nx; ++i) {
      const int v00 = int(j * cols + i), v10 = v00 + 1;
      const int v01 = int((j + 1) * cols + i), v11 = v01 + 1;
      mesh.triangles.row(t++) << v00, v10, v11;
      mesh.triangles.row(t++) << v00, v11, v01;
    }

  const Index m = mesh.size();
  mesh.graph_adjacency = MatrixXd::Zero(m, m);
  for (Index k = 0; k < mesh.triangle_count(); ++k)
    for (int a = 0; a < 3; ++a) {
      const int u = mesh.triangles(k, a), v = mesh.triangles(k, (a + 1) % 3);
      mesh.graph_adjacency(u, v) = mesh.graph_adjacency(v, u) = 1.0;
    }
  return mesh;
}

Mesh build_mesh(const MatrixXd& locations, double max_edge, double margin) {
  require(locations.rows() >= 1 && locations.cols() == 2, ErrorCode::dimension_mismatch,
          "locations must be an n x 2 matrix");
  const Interval x{locations.col(0).minCoeff(), locations.col(0).maxCoeff()};
  const Interval y{locations.col(1).minCoeff(), locations.col(1).maxCoeff()};
  return build_mesh(x, y, max_edge, margin);
}

std::optional<TriangleHit> locate(const Mesh& mesh, const Eigen::Vector2d& point) {
  const double scale = std::max(mesh.vertices.cwiseAbs().maxCoeff(), 1.0);
  const double tol = 1e-12 * scale;
  for (Index k = 0; k < mesh.triangle_count(); ++k) {
    const Eigen::Vector2d a = mesh.vertices.row(mesh.triangles(k, 0)).transpose();
    const Eigen::Vector2d b = mesh.vertices.row(mesh.triangles(k, 1)).transpose();
    const Eigen::Vector2d c = mesh.vertices.row(mesh.triangles(k, 2)).transpose();
    const double area = cross(b - a, c - a);
    Eigen::Vector3d w(cross(b - point, c - point) / area, cross(c - point, a - point) / area,
                      cross(a - point, b - point) / area);
    if (w.minCoeff() < -tol) continue;
    w = w.cwiseMax(0.0);
    w /= w.sum();
    return TriangleHit{k, w};
  }
  return std::nullopt;
}

SparseMatrixD interpolation_matrix(const Mesh& mesh, const MatrixXd& locations,
                                   const std::vector<std::string>& ids) {
  require(locations.cols() == 2, ErrorCode::dimension_mismatch, "locations must have 2 columns");
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<std::string> outside;
  for (Index i = 0; i < locations.rows(); ++i) {
    const auto hit = locate(mesh, locations.row(i).transpose());
    if (!hit) {
      outside.push_back(ids.empty() ? "row " + std::to_string(i + 1) : ids[i]);
      continue;
    }
    for (int a = 0; a < 3; ++a)
      if (hit->weights[a] > 0.0)
        entries.emplace_back(i, mesh.triangles(hit->triangle, a), hit->weights[a]);
  }
  if (!outside.empty()) {
    std::ostringstream msg;
    msg << outside.size() << " location(s) outside the mesh:";
    for (std::size_t i = 0; i < std::min<std::size_t>(outside.size(), 20); ++i)
      msg << ' ' << outside[i];
    if (outside.size() > 20) msg << " ...";
    fail(ErrorCode::outside_mesh, msg.str());
  }
  SparseMatrixD a(locations.rows(), mesh.size());
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

MoranEigen leading_eigen(const MatrixXd& op, Index p) {
  require(op.rows() == op.cols(), ErrorCode::invalid_argument, "operator must be square");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(op);
  require(es.info() == Eigen::Success, ErrorCode::numerical_failure,
          "eigendecomposition failed");
  const Index n = op.rows();
  MoranEigen out;
  out.all_values = es.eigenvalues().reverse();
  out.values = out.all_values.head(p);
  out.vectors.resize(n, p);
  for (Index c = 0; c < p; ++c) {
    out.vectors.col(c) = es.eigenvectors().col(n - 1 - c);
    fix_sign(out.vectors.col(c));
  }
  return out;
}

Index rank_for_variation(const VectorXd& eigenvalues, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::invalid_argument,
          "variation fraction must be in (0, 1]");
  const double total = eigenvalues.cwiseMax(0.0).sum();
  require(total > 0.0, ErrorCode::invalid_argument, "operator has no positive eigenvalues");
  double acc = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    acc += std::max(eigenvalues[i], 0.0);
    if (acc >= fraction * total * (1.0 - 1e-12)) return i + 1;
  }
  return eigenvalues.size();
}

MatrixXd moran_operator_areal(const MatrixXd& x_coef, const MatrixXd& adjacency) {
  const Index n = x_coef.rows();
  require(adjacency.rows() == n && adjacency.cols() == n, ErrorCode::dimension_mismatch,
          "adjacency does not match the number of sites");
  Eigen::ColPivHouseholderQR<MatrixXd> rank_qr(x_coef);
  rank_qr.setThreshold(1e-10);
  require(rank_qr.rank() == x_coef.cols(), ErrorCode::rank_deficient,
          "covariate coefficient matrix is rank deficient (rank " +
              std::to_string(rank_qr.rank()) + " of " + std::to_string(x_coef.cols()) + ")");
  Eigen::HouseholderQR<MatrixXd> qr(x_coef);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, x_coef.cols());
  MatrixXd perp = MatrixXd::Identity(n, n) - q * q.transpose();
  MatrixXd op = perp * adjacency * perp;
  return 0.5 * (op + op.transpose());
}

MatrixXd moran_operator_centered(const MatrixXd& adjacency) {
  const Index m = adjacency.rows();
  MatrixXd c = MatrixXd::Identity(m, m);
  c.array() -= 1.0 / double(m);
  MatrixXd op = c * adjacency * c;
  return 0.5 * (op + op.transpose());
}

ProjectionBasis moran_basis_areal(const MatrixXd& x_coef, const MatrixXd& adjacency, Index p) {
  const Index n = x_coef.rows(), g = x_coef.cols();
  const MatrixXd op = moran_operator_areal(x_coef, adjacency);
  if (p <= 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(op, Eigen::EigenvaluesOnly);
    p = rank_for_variation(es.eigenvalues().reverse());
  }
  require(p <= n - g, ErrorCode::invalid_argument,
          "rank " + std::to_string(p) + " exceeds n - g_n = " + std::to_string(n - g));
  const MoranEigen eig = leading_eigen(op, p);
  ProjectionBasis proj;
  proj.P = eig.vectors;
  proj.rank = p;
  proj.eigenvalues = eig.values;
  proj.delta_precision = proj.P.transpose() * icar_precision(adjacency) * proj.P;
  return proj;
}

MoranEigen moran_basis_point(const Mesh& mesh, Index p) {
  const Index m = mesh.size();
  const MatrixXd op = moran_operator_centered(mesh.graph_adjacency);
  if (p <= 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(op, Eigen::EigenvaluesOnly);
    p = rank_for_variation(es.eigenvalues().reverse());
  }
  require(p <= m - 1, ErrorCode::invalid_argument,
          "rank " + std::to_string(p) + " exceeds mesh size - 1 = " + std::to_string(m - 1));
  return leading_eigen(op, p);
}

ProjectionBasis projection_point(const Mesh& mesh, const MatrixXd& locations, Index p,
                                 const std::vector<std::string>& ids) {
  ProjectionBasis proj;
  proj.A = interpolation_matrix(mesh, locations, ids);
  const MoranEigen eig = moran_basis_point(mesh, p);
  proj.M = eig.vectors;
  proj.rank = eig.vectors.cols();
  proj.eigenvalues = eig.values;
  proj.P = proj.A * proj.M;
  proj.delta_precision = proj.M.transpose() * icar_precision(mesh.graph_adjacency) * proj.M;
  proj.mesh = mesh;
  return proj;
}

MatrixXd project_new_points(const ProjectionBasis& proj, const MatrixXd& locations,
                            const std::vector<std::string>& ids) {
  require(proj.point_level(), ErrorCode::missing_spatial_metadata,
          "projection has no mesh; point-level prediction needs a point-level fit");
  return interpolation_matrix(*proj.mesh, locations, ids) * proj.M;
}

void write_mesh(const std::filesystem::path& dir, const Mesh& mesh) {
  io::write_matrix(dir / "vertices.csv", mesh.vertices, {"x", "y"});
  io::write_matrix(dir / "triangles.csv", mesh.triangles.cast<double>(), {"v1", "v2", "v3"});
}

Mesh read_mesh(const std::filesystem::path& dir) {
  Mesh mesh;
  mesh.vertices = io::read_matrix(dir / "vertices.csv");
  const MatrixXd tri = io::read_matrix(dir / "triangles.csv");
  require(mesh.vertices.cols() == 2 && tri.cols() == 3, ErrorCode::schema_violation,
          "mesh files have the wrong number of columns");
  mesh.triangles = tri.array().round().cast<int>();
  const Index m = mesh.size();
  require(mesh.triangles.size() == 0 ||
              (mesh.triangles.minCoeff() >= 0 && mesh.triangles.maxCoeff() < m),
          ErrorCode::schema_violation, "triangle indices out of range");
  mesh.graph_adjacency = MatrixXd::Zero(m, m);
  for (Index k = 0; k < mesh.triangle_count(); ++k)
    for (int a = 0; a < 3; ++a) {
      const int u = mesh.triangles(k, a), v = mesh.triangles(k, (a + 1) % 3);
      mesh.graph_adjacency(u, v) = mesh.graph_adjacency(v, u) = 1.0;
    }
  return mesh;
}

}  // namespace sfofr
