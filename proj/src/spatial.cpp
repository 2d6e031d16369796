#include "sfofr/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sfofr/error.hpp"
#include "sfofr/random.hpp"

namespace sfofr {

const char* to_string(DomainKind kind) {
  return kind == DomainKind::continuous ? "continuous" : "discrete";
}

SpatialStructure SpatialStructure::continuous(MatrixXd coords) {
  SpatialStructure s;
  s.kind = DomainKind::continuous;
  s.coords = std::move(coords);
  s.validate();
  return s;
}

SpatialStructure SpatialStructure::discrete(MatrixXd adjacency) {
  SpatialStructure s;
  s.kind = DomainKind::discrete;
  s.adjacency = std::move(adjacency);
  s.validate();
  return s;
}

Index SpatialStructure::size() const {
  return kind == DomainKind::continuous ? coords.rows() : adjacency.rows();
}

std::string SpatialStructure::validate() const {
  if (kind == DomainKind::continuous) {
    require(coords.cols() == 2, ErrorCode::schema_violation, "coordinates must have 2 columns");
    require(coords.allFinite(), ErrorCode::schema_violation, "coordinates must be finite");
    return {};
  }
  const Index n = adjacency.rows();
  require(adjacency.cols() == n, ErrorCode::schema_violation, "adjacency must be square");
  for (Index i = 0; i < n; ++i) {
    require(adjacency(i, i) == 0.0, ErrorCode::schema_violation,
            "adjacency must have a zero diagonal");
    for (Index j = 0; j < n; ++j) {
      const double v = adjacency(i, j);
      require(v == 0.0 || v == 1.0, ErrorCode::schema_violation, "adjacency must be binary");
      require(v == adjacency(j, i), ErrorCode::schema_violation, "adjacency must be symmetric");
    }
  }
  const int comps = connected_components(adjacency);
  if (comps > 1) {
    std::ostringstream msg;
    msg << "adjacency graph is disconnected (" << comps << " components)";
    return msg.str();
  }
  return {};
}

SpatialStructure SpatialStructure::subset(const std::vector<Index>& order) const {
  SpatialStructure s;
  s.kind = kind;
  const Index m = Index(order.size());
  if (kind == DomainKind::continuous) {
    s.coords.resize(m, 2);
    for (Index i = 0; i < m; ++i) s.coords.row(i) = coords.row(order[i]);
  } else {
    s.adjacency.resize(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) s.adjacency(i, j) = adjacency(order[i], order[j]);
  }
  return s;
}

int connected_components(const MatrixXd& adjacency) {
  const Index n = adjacency.rows();
  std::vector<int> label(n, -1);
  int comps = 0;
  std::vector<Index> stack;
  for (Index start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    label[start] = comps;
    stack.push_back(start);
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      for (Index u = 0; u < n; ++u) {
        if (adjacency(v, u) != 0.0 && label[u] < 0) {
          label[u] = comps;
          stack.push_back(u);
        }
      }
    }
    ++comps;
  }
  return comps;
}

MatrixXd cross_distance(const MatrixXd& a, const MatrixXd& b) {
  require(a.cols() == 2 && b.cols() == 2, ErrorCode::dimension_mismatch,
          "coordinates must have 2 columns");
  MatrixXd d(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index i = 0; i < a.rows(); ++i) d(i, j) = (a.row(i) - b.row(j)).norm();
  require(d.allFinite(), ErrorCode::invalid_argument, "non-finite distances");
  return d;
}

MatrixXd distance_matrix(const MatrixXd& coords) { return cross_distance(coords, coords); }

double matern_correlation(double d, double rho, double smoothness) {
  if (d <= 0.0) return 1.0;
  const double x = d / rho;
  if (smoothness == 0.5) return std::exp(-x);
  if (smoothness == 1.5) return (1.0 + std::sqrt(3.0) * x) * std::exp(-std::sqrt(3.0) * x);
  if (smoothness == 2.5)
    return (1.0 + std::sqrt(5.0) * x + 5.0 * x * x / 3.0) * std::exp(-std::sqrt(5.0) * x);
  if (x > 700.0) return 0.0;
  const double c = std::pow(2.0, 1.0 - smoothness) / std::tgamma(smoothness);
  return c * std::pow(x, smoothness) * std::cyl_bessel_k(smoothness, x);
}

MatrixXd matern_from_distances(const MatrixXd& dist, double rho, double smoothness,
                               double jitter) {
  require(rho > 0.0 && smoothness > 0.0, ErrorCode::invalid_argument,
          "Matérn range and smoothness must be positive");
  MatrixXd c(dist.rows(), dist.cols());
  for (Index j = 0; j < dist.cols(); ++j)
    for (Index i = 0; i < dist.rows(); ++i)
      c(i, j) = matern_correlation(dist(i, j), rho, smoothness);
  if (jitter > 0.0) c.diagonal().array() += jitter;
  return c;
}

MatrixXd matern_cov(const MatrixXd& coords, double sigma2, double rho, double smoothness) {
  require(sigma2 > 0.0, ErrorCode::invalid_argument, "sigma2 must be positive");
  return sigma2 * matern_from_distances(distance_matrix(coords), rho, smoothness, 1e-8);
}

MatrixXd icar_precision(const MatrixXd& adjacency) {
  require(adjacency.rows() == adjacency.cols(), ErrorCode::invalid_argument,
          "adjacency must be square");
  require(adjacency.isApprox(adjacency.transpose(), 0.0), ErrorCode::invalid_argument,
          "adjacency must be symmetric");
  MatrixXd q = -adjacency;
  q.diagonal() = adjacency.rowwise().sum();
  return q;
}

Eigen::SparseMatrix<double> icar_precision_sparse(const MatrixXd& adjacency) {
  return icar_precision(adjacency).sparseView();
}

namespace {

double permutation_p_value(double observed, const std::vector<double>& null_draws) {
  const double mean =
      std::accumulate(null_draws.begin(), null_draws.end(), 0.0) / double(null_draws.size());
  const double dev = std::abs(observed - mean);
  std::size_t extreme = 0;
  for (double v : null_draws)
    if (std::abs(v - mean) >= dev - 1e-15) ++extreme;
  return double(extreme + 1) / double(null_draws.size() + 1);
}

}  // namespace

MoranResult morans_i(const VectorXd& residuals, const MatrixXd& adjacency, int permutations,
                     std::uint64_t seed) {
  return mean_morans_i(MatrixXd(residuals), adjacency, permutations, seed);
}

MoranResult mean_morans_i(const MatrixXd& residual_curves, const MatrixXd& adjacency,
                          int permutations, std::uint64_t seed) {
  const Index n = residual_curves.rows();
  require(adjacency.rows() == n && adjacency.cols() == n, ErrorCode::dimension_mismatch,
          "adjacency does not match the number of residuals");
  require(permutations >= 1, ErrorCode::invalid_argument, "need at least one permutation");
  const double s0 = adjacency.sum();
  require(s0 > 0.0, ErrorCode::invalid_argument, "adjacency has no edges");
  const Eigen::SparseMatrix<double> w = adjacency.sparseView();

  const MatrixXd centered = residual_curves.rowwise() - residual_curves.colwise().mean();
  const VectorXd ss = centered.colwise().squaredNorm();
  const double scale = 1.0 + residual_curves.cwiseAbs().maxCoeff();
  for (Index t = 0; t < ss.size(); ++t)
    require(ss[t] > 1e-24 * scale * scale * double(n), ErrorCode::invalid_argument,
            "Moran's I is undefined for constant residuals");

  auto statistic = [&](const MatrixXd& e) {
    const MatrixXd we = w * e;
    double acc = 0.0;
    for (Index t = 0; t < e.cols(); ++t) acc += e.col(t).dot(we.col(t)) / ss[t];
    return double(n) / s0 * acc / double(e.cols());
  };

  MoranResult result;
  result.statistic = statistic(centered);

  Rng rng(seed);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> null_draws;
  null_draws.reserve(permutations);
  MatrixXd permuted(n, centered.cols());
  for (int b = 0; b < permutations; ++b) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (Index i = 0; i < n; ++i) permuted.row(i) = centered.row(order[i]);
    null_draws.push_back(statistic(permuted));
  }
  result.p_value = permutation_p_value(result.statistic, null_draws);
  return result;
}

EmpiricalVariogram trace_variogram(const MatrixXd& curves, const VectorXd& quad_weights,
                                   const MatrixXd& coords, int n_bins, double max_distance) {
  const Index n = curves.rows();
  require(n >= 2, ErrorCode::invalid_argument, "variogram needs at least two sites");
  require(coords.rows() == n, ErrorCode::dimension_mismatch,
          "coordinates do not match the number of curves");
  require(quad_weights.size() == curves.cols(), ErrorCode::dimension_mismatch,
          "quadrature weights do not match the curve grid");
  require(n_bins >= 1, ErrorCode::invalid_argument, "need at least one bin");

  const MatrixXd dist = distance_matrix(coords);
  if (max_distance <= 0.0) max_distance = 0.5 * dist.maxCoeff();
  require(max_distance > 0.0, ErrorCode::invalid_argument, "all sites coincide");
  const double width = max_distance / n_bins;

  VectorXd sum = VectorXd::Zero(n_bins);
  VectorXd count = VectorXd::Zero(n_bins);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = dist(i, j);
      if (d > max_distance) continue;
      const int b = std::min(n_bins - 1, std::max(0, int(std::ceil(d / width)) - 1));
      const double sq =
          (curves.row(i) - curves.row(j)).array().square().matrix().dot(quad_weights);
      sum[b] += sq;
      count[b] += 1.0;
    }
  }

  EmpiricalVariogram out;
  std::vector<double> lags, gammas, counts;
  for (int b = 0; b < n_bins; ++b) {
    const double mid = (b + 0.5) * width;
    if (count[b] == 0) {
      std::ostringstream msg;
      msg << "variogram bin centred at " << mid << " is empty and was dropped";
      out.warnings.push_back(msg.str());
      continue;
    }
    lags.push_back(mid);
    gammas.push_back(sum[b] / (2.0 * count[b]));
    counts.push_back(count[b]);
  }
  out.lags = Eigen::Map<VectorXd>(lags.data(), Index(lags.size()));
  out.gamma = Eigen::Map<VectorXd>(gammas.data(), Index(gammas.size()));
  out.pair_counts = Eigen::Map<VectorXd>(counts.data(), Index(counts.size()));
  return out;
}

VariogramFamily parse_variogram_family(const std::string& name) {
  if (name == "gaussian") return VariogramFamily::gaussian;
  if (name == "exponential") return VariogramFamily::exponential;
  fail(ErrorCode::invalid_argument, "unknown variogram model '" + name + "'");
}

const char* to_string(VariogramFamily family) {
  return family == VariogramFamily::gaussian ? "gaussian" : "exponential";
}

namespace {

double variogram_shape(VariogramFamily family, double h, double range) {
  const double x = h / range;
  return family == VariogramFamily::gaussian ? 1.0 - std::exp(-x * x) : 1.0 - std::exp(-x);
}

struct LinearFit {
  double nugget = 0.0;
  double sill = 0.0;
  double sse = 0.0;
};

// Weighted least squares for (nugget, sill) >= 0 at a fixed range.
LinearFit fit_linear(const EmpiricalVariogram& emp, VariogramFamily family, double range) {
  const Index m = emp.lags.size();
  VectorXd shape(m);
  for (Index i = 0; i < m; ++i) shape[i] = variogram_shape(family, emp.lags[i], range);
  const VectorXd& w = emp.pair_counts;
  const VectorXd& y = emp.gamma;

  auto sse = [&](double a, double b) {
    return (w.array() * (y.array() - a - b * shape.array()).square()).sum();
  };

  std::vector<LinearFit> candidates;
  const double sw = w.sum(), sws = w.dot(shape), swss = w.dot(shape.cwiseProduct(shape));
  const double swy = w.dot(y), swsy = w.dot(shape.cwiseProduct(y));
  const double det = sw * swss - sws * sws;
  if (std::abs(det) > 1e-14 * sw * swss) {
    const double a = (swss * swy - sws * swsy) / det;
    const double b = (sw * swsy - sws * swy) / det;
    if (a >= 0.0 && b >= 0.0) candidates.push_back({a, b, sse(a, b)});
  }
  if (swss > 0.0) {
    const double b = std::max(0.0, swsy / swss);
    candidates.push_back({0.0, b, sse(0.0, b)});
  }
  const double a = std::max(0.0, swy / sw);
  candidates.push_back({a, 0.0, sse(a, 0.0)});
  return *std::min_element(candidates.begin(), candidates.end(),
                           [](const LinearFit& l, const LinearFit& r) { return l.sse < r.sse; });
}

}  // namespace

double VariogramModel::operator()(double h) const {
  if (h <= 0.0) return 0.0;
  return nugget + sill * variogram_shape(family, h, range);
}

VariogramModel fit_variogram(const EmpiricalVariogram& empirical, VariogramFamily family) {
  require(empirical.lags.size() >= 1, ErrorCode::invalid_argument,
          "empirical variogram has no bins");
  const double hmax = empirical.lags.maxCoeff();
  // coarse log grid over the range, then golden-section refinement
  const int n_grid = 200;
  const double lo = std::log(hmax * 1e-2), hi = std::log(hmax * 1e1);
  double best_log = lo;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_grid; ++i) {
    const double lr = lo + (hi - lo) * i / (n_grid - 1);
    const double s = fit_linear(empirical, family, std::exp(lr)).sse;
    if (s < best_sse) {
      best_sse = s;
      best_log = lr;
    }
  }
  const double step = (hi - lo) / (n_grid - 1);
  double a = best_log - step, b = best_log + step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  auto f = [&](double lr) { return fit_linear(empirical, family, std::exp(lr)).sse; };
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = f(d);
    }
  }
  double range = std::exp(0.5 * (a + b));
  if (f(std::log(range)) > best_sse) range = std::exp(best_log);
  const LinearFit lin = fit_linear(empirical, family, range);
  return VariogramModel{family, lin.nugget, lin.sill, range};
}

}  // namespace sfofr
