#include "sfofr/posterior.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fstream>
#include <limits>

#include "sfofr/error.hpp"
#include "sfofr/io.hpp"
#include "sfofr/random.hpp"
#include "sfofr/spatial.hpp"

namespace sfofr {

SurfaceSource psi_surfaces(const PosteriorDraws& draws, const BasisSystem& xi,
                           const BasisSystem& phi) {
  require(draws.count() > 0, ErrorCode::invalid_argument, "no posterior draws");
  require(draws.psi[0].rows() == xi.size() && draws.psi[0].cols() == phi.size(),
          ErrorCode::dimension_mismatch, "psi draws do not match the basis sizes");
  const MatrixXd xi_t = xi.values.transpose();
  const MatrixXd phi_v = phi.values;
  const auto* psi = &draws.psi;
  return SurfaceSource{draws.count(),
                       [xi_t, phi_v, psi](Index u) -> MatrixXd { return xi_t * (*psi)[u] * phi_v; }};
}

SurfaceSource matrix_surfaces(const std::vector<MatrixXd>& surfaces) {
  const auto* s = &surfaces;
  return SurfaceSource{Index(surfaces.size()), [s](Index u) -> MatrixXd { return (*s)[u]; }};
}

const SimultaneousBand& SurfaceSummary::band(double alpha) const {
  for (const auto& b : bands)
    if (std::abs(b.alpha - alpha) < 1e-12) return b;
  fail(ErrorCode::invalid_argument, "no band stored for alpha " + std::to_string(alpha));
}

double band_multiplier(const VectorXd& z, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument, "alpha must be in (0, 1)");
  const Index u = z.size();
  require(double(u) * alpha >= 1.0 - 1e-9, ErrorCode::invalid_argument,
          "need U * alpha >= 1 for the band quantile (U = " + std::to_string(u) +
              ", alpha = " + std::to_string(alpha) + ")");
  std::vector<double> sorted(z.data(), z.data() + u);
  std::sort(sorted.begin(), sorted.end());
  const Index idx = std::min<Index>(u - 1, Index(std::floor(double(u) * (1.0 - alpha) + 1e-9)));
  return sorted[std::size_t(idx)];
}

namespace {

struct Moments {
  MatrixXd mean;
  MatrixXd sd;
};

Moments moments(const SurfaceSource& src) {
  Moments m;
  m.mean = src.draw(0);
  for (Index u = 1; u < src.count; ++u) m.mean += src.draw(u);
  m.mean /= double(src.count);
  MatrixXd ss = MatrixXd::Zero(m.mean.rows(), m.mean.cols());
  if (src.count > 1) {
    for (Index u = 0; u < src.count; ++u) ss += (src.draw(u) - m.mean).cwiseAbs2();
    ss /= double(src.count - 1);
  }
  m.sd = ss.cwiseSqrt().cwiseMax(sd_floor);
  return m;
}

void check_source(const SurfaceSource& src, Index min_draws) {
  require(src.count >= std::max<Index>(1, min_draws), ErrorCode::invalid_argument,
          "need at least " + std::to_string(min_draws) + " draws (got " +
              std::to_string(src.count) + ")");
}

}  // namespace

SurfaceSummary summarize_surface(const SurfaceSource& source, const std::vector<double>& alphas,
                                 Index min_draws) {
  check_source(source, min_draws);
  const Index u = source.count;
  for (double a : alphas) {
    require(a > 0.0 && a < 1.0, ErrorCode::invalid_argument, "alpha must be in (0, 1)");
    require(double(u) * a >= 1.0 - 1e-9, ErrorCode::invalid_argument,
            "too few draws for alpha " + std::to_string(a) + ": need U * alpha >= 1");
  }

  SurfaceSummary s;
  const Moments m = moments(source);
  s.mean = m.mean;
  s.sd = m.sd;
  s.z.resize(u);
  for (Index d = 0; d < u; ++d)
    s.z[d] = ((source.draw(d) - s.mean).cwiseAbs().cwiseQuotient(s.sd)).maxCoeff();

  const MatrixXd standardized = s.mean.cwiseAbs().cwiseQuotient(s.sd);
  std::vector<double> sorted(s.z.data(), s.z.data() + u);
  std::sort(sorted.begin(), sorted.end());
  s.simbas.resize(s.mean.rows(), s.mean.cols());
  for (Index i = 0; i < s.mean.rows(); ++i)
    for (Index j = 0; j < s.mean.cols(); ++j) {
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), standardized(i, j));
      s.simbas(i, j) = double(sorted.end() - it) / double(u);
    }

  for (double a : alphas) {
    SimultaneousBand b;
    b.alpha = a;
    b.m_alpha = band_multiplier(s.z, a);
    b.lower = s.mean - b.m_alpha * s.sd;
    b.upper = s.mean + b.m_alpha * s.sd;
    b.significance = Eigen::MatrixXi::Zero(s.mean.rows(), s.mean.cols());
    for (Index i = 0; i < s.mean.rows(); ++i)
      for (Index j = 0; j < s.mean.cols(); ++j)
        if (standardized(i, j) > b.m_alpha) b.significance(i, j) = s.mean(i, j) > 0 ? 1 : -1;
    s.bands.push_back(std::move(b));
  }
  return s;
}

SurfaceSummary summarize_surface(const PosteriorDraws& draws, const BasisSystem& xi,
                                 const BasisSystem& phi, const std::vector<double>& alphas) {
  SurfaceSummary s = summarize_surface(psi_surfaces(draws, xi, phi), alphas);
  s.r_grid = xi.grid;
  s.t_grid = phi.grid;
  return s;
}

ContourRegion contour_avoiding(const SurfaceSource& source, double alpha, Index min_draws) {
  check_source(source, min_draws);
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument, "alpha must be in (0, 1)");
  const Index u = source.count;
  const Moments m = moments(source);
  const Index r = m.mean.rows(), c = m.mean.cols();

  MatrixXd above = MatrixXd::Zero(r, c), below = MatrixXd::Zero(r, c);
  for (Index d = 0; d < u; ++d) {
    const MatrixXd s = source.draw(d);
    above += (s.array() > 0.0).cast<double>().matrix();
    below += (s.array() < 0.0).cast<double>().matrix();
  }
  above /= double(u);
  below /= double(u);

  const boost::math::normal_distribution<double> std_normal;
  const double inf = std::numeric_limits<double>::infinity();
  const double lo_clamp = 1.0 / double(u), hi_clamp = 1.0 - 1.0 / double(u);
  MatrixXd a(r, c), b(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) {
      const double rho = std::clamp(std::max(above(i, j), below(i, j)), lo_clamp, hi_clamp);
      if (above(i, j) <= 0.5) {
        a(i, j) = -inf;
        b(i, j) = m.sd(i, j) * boost::math::quantile(std_normal, rho);
      } else {
        a(i, j) = m.sd(i, j) * boost::math::quantile(std_normal, 1.0 - rho);
        b(i, j) = inf;
      }
    }

  ContourRegion out;
  out.f0 = MatrixXd::Zero(r, c);
  for (Index d = 0; d < u; ++d) {
    const MatrixXd s = source.draw(d);
    out.f0 += ((s.array() >= a.array()) && (s.array() <= b.array())).cast<double>().matrix();
  }
  out.f0 /= double(u);
  out.mask = (out.f0.array() > 1.0 - alpha).cast<int>().matrix();
  return out;
}

std::vector<MatrixXd> predictors_fixed(const PosteriorDraws& draws, const MatrixXd& x_star) {
  require(draws.count() > 0, ErrorCode::invalid_argument, "no posterior draws");
  require(x_star.cols() == draws.psi[0].rows(), ErrorCode::dimension_mismatch,
          "target covariate coefficients do not match g_n");
  std::vector<MatrixXd> eta;
  eta.reserve(draws.psi.size());
  for (const auto& psi : draws.psi) eta.push_back(x_star * psi);
  return eta;
}

std::vector<MatrixXd> predictors_projection(const PosteriorDraws& draws, const MatrixXd& x_star,
                                            const MatrixXd& p_star) {
  require(draws.has_random_effect(), ErrorCode::invalid_argument, "draws carry no delta");
  require(p_star.rows() == x_star.rows() && p_star.cols() == draws.random_effect[0].rows(),
          ErrorCode::dimension_mismatch, "target projection rows do not match the fit");
  std::vector<MatrixXd> eta = predictors_fixed(draws, x_star);
  for (std::size_t u = 0; u < eta.size(); ++u) eta[u] += p_star * draws.random_effect[u];
  return eta;
}

std::vector<MatrixXd> predictors_sfofr_continuous(const PosteriorDraws& draws,
                                                  const MatrixXd& x_star,
                                                  const MatrixXd& train_coords,
                                                  const MatrixXd& target_coords,
                                                  std::uint64_t seed) {
  require(draws.has_random_effect() && draws.rho.size() == draws.count(),
          ErrorCode::invalid_argument, "draws are not from a continuous SFoFR fit");
  require(train_coords.rows() == draws.random_effect[0].rows(), ErrorCode::dimension_mismatch,
          "training coordinates do not match the fitted W");
  require(target_coords.rows() == x_star.rows() && target_coords.cols() == 2,
          ErrorCode::dimension_mismatch, "target coordinates must be q x 2");
  const double smooth = draws.spec.mcmc.matern_smoothness;
  const MatrixXd dnn = distance_matrix(train_coords);
  const MatrixXd dqn = cross_distance(target_coords, train_coords);
  const Index q = x_star.rows(), k = draws.random_effect[0].cols();

  std::vector<MatrixXd> eta = predictors_fixed(draws, x_star);
  Rng rng(seed);
  double cached_rho = -1.0;
  MatrixXd weights;  // n x q, Gamma_nn^-1 Gamma_nq
  VectorXd cond_var(q);
  for (std::size_t u = 0; u < eta.size(); ++u) {
    const double rho = draws.rho[Index(u)];
    if (rho != cached_rho) {
      Eigen::LLT<MatrixXd> llt;
      for (double jitter : {1e-8, 1e-6, 1e-4}) {
        llt.compute(matern_from_distances(dnn, rho, smooth, jitter));
        if (llt.info() == Eigen::Success) break;
      }
      require(llt.info() == Eigen::Success, ErrorCode::numerical_failure,
              "Matern correlation not positive definite while kriging");
      const MatrixXd cross = matern_from_distances(dqn, rho, smooth);
      weights = llt.solve(cross.transpose());
      for (Index i = 0; i < q; ++i)
        cond_var[i] = std::max(0.0, 1.0 - cross.row(i).dot(weights.col(i)));
      cached_rho = rho;
    }
    const double sigma2 = draws.scale[Index(u)];
    MatrixXd w_star = weights.transpose() * draws.random_effect[u];
    for (Index j = 0; j < k; ++j)
      for (Index i = 0; i < q; ++i) w_star(i, j) += std::sqrt(sigma2 * cond_var[i]) * rng.normal();
    eta[u] += w_star;
  }
  return eta;
}

std::vector<MatrixXd> predictors_sfofr_discrete(const PosteriorDraws& draws,
                                                const MatrixXd& x_star,
                                                const std::vector<std::vector<Index>>& neighbours,
                                                std::uint64_t seed) {
  require(draws.has_random_effect() && draws.scale.size() == draws.count(),
          ErrorCode::invalid_argument, "draws are not from a discrete SFoFR fit");
  const Index q = x_star.rows(), n = draws.random_effect[0].rows();
  const Index k = draws.random_effect[0].cols();
  require(Index(neighbours.size()) == q, ErrorCode::dimension_mismatch,
          "need one neighbour list per target");
  for (Index i = 0; i < q; ++i) {
    require(!neighbours[i].empty(), ErrorCode::missing_spatial_metadata,
            "target " + std::to_string(i + 1) + " has no training neighbours");
    for (Index j : neighbours[i])
      require(j >= 0 && j < n, ErrorCode::dimension_mismatch, "neighbour index out of range");
  }
  std::vector<MatrixXd> eta = predictors_fixed(draws, x_star);
  Rng rng(seed);
  for (std::size_t u = 0; u < eta.size(); ++u) {
    const double nu = draws.scale[Index(u)];
    for (Index i = 0; i < q; ++i) {
      Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(k);
      for (Index j : neighbours[i]) avg += draws.random_effect[u].row(j);
      const double d = double(neighbours[i].size());
      avg /= d;
      for (Index c = 0; c < k; ++c) avg[c] += rng.normal() / std::sqrt(nu * d);
      eta[u].row(i) += avg;
    }
  }
  return eta;
}

KrigingResult krige(const std::vector<MatrixXd>& eta, const VectorXd& tau2,
                    const BasisSystem& phi, double alpha, std::uint64_t seed, bool keep_draws) {
  require(!eta.empty(), ErrorCode::invalid_argument, "no predictor draws");
  require(tau2.size() == Index(eta.size()), ErrorCode::dimension_mismatch,
          "tau2 draws do not match the predictor draws");
  require(eta[0].cols() == phi.size(), ErrorCode::dimension_mismatch,
          "predictor columns do not match k_n");
  const Index u = Index(eta.size()), q = eta[0].rows(), nt = phi.grid_size(), k = phi.size();

  KrigingResult out;
  out.t_grid = phi.grid;
  out.alpha = alpha;
  out.mean.resize(q, nt);
  out.lower.resize(q, nt);
  out.upper.resize(q, nt);
  out.m_alpha.resize(q);
  if (keep_draws) out.predictive_draws.assign(u, MatrixXd(q, nt));

  Rng rng(seed);
  std::vector<MatrixXd> curves(u);
  for (Index i = 0; i < q; ++i) {
    for (Index d = 0; d < u; ++d) {
      Eigen::RowVectorXd coef = eta[d].row(i);
      const double tau = std::sqrt(tau2[d]);
      for (Index c = 0; c < k; ++c) coef[c] += tau * rng.normal();
      curves[d] = coef * phi.values;
      if (keep_draws) out.predictive_draws[d].row(i) = curves[d];
    }
    const SurfaceSummary s = summarize_surface(matrix_surfaces(curves), {alpha}, 1);
    out.mean.row(i) = s.mean;
    out.lower.row(i) = s.bands[0].lower;
    out.upper.row(i) = s.bands[0].upper;
    out.m_alpha[i] = s.bands[0].m_alpha;
  }
  return out;
}

double mspe(const MatrixXd& predicted, const MatrixXd& truth) {
  require(predicted.rows() == truth.rows() && predicted.cols() == truth.cols(),
          ErrorCode::dimension_mismatch, "predicted and true curves differ in shape");
  return std::sqrt((predicted - truth).squaredNorm() / double(truth.size()));
}

double mean_coverage(const MatrixXd& lower, const MatrixXd& upper, const MatrixXd& truth) {
  require(lower.rows() == truth.rows() && lower.cols() == truth.cols() &&
              upper.rows() == truth.rows() && upper.cols() == truth.cols(),
          ErrorCode::dimension_mismatch, "bands and true curves differ in shape");
  double total = 0.0;
  for (Index i = 0; i < truth.rows(); ++i) {
    const auto inside =
        ((truth.row(i).array() >= lower.row(i).array()) &&
         (truth.row(i).array() <= upper.row(i).array())).cast<double>();
    total += inside.mean();
  }
  return total / double(truth.rows());
}

PredictionScore score(const KrigingResult& result, const MatrixXd& truth) {
  return PredictionScore{mspe(result.mean, truth),
                         mean_coverage(result.lower, result.upper, truth)};
}

double score_surface(const MatrixXd& psi_hat, const MatrixXd& psi_true) {
  require(psi_hat.rows() == psi_true.rows() && psi_hat.cols() == psi_true.cols(),
          ErrorCode::dimension_mismatch, "surfaces differ in shape");
  return std::sqrt((psi_hat - psi_true).squaredNorm() / double(psi_true.size()));
}

void write_surface_csv(const std::filesystem::path& path, const SurfaceSummary& s,
                       const ContourRegion* contour) {
  std::vector<std::string> header{"r", "t", "mean", "sd"};
  for (const auto& b : s.bands) {
    const std::string a = io::format_number(b.alpha);
    header.push_back("lower_" + a);
    header.push_back("upper_" + a);
    header.push_back("significant_" + a);
  }
  header.push_back("simbas");
  if (contour) header.push_back("contour");
  const Index nr = s.mean.rows(), nt = s.mean.cols();
  MatrixXd table(nr * nt, Index(header.size()));
  for (Index i = 0; i < nr; ++i)
    for (Index j = 0; j < nt; ++j) {
      const Index row = i * nt + j;
      Index c = 0;
      table(row, c++) = s.r_grid.size() ? s.r_grid[i] : double(i + 1);
      table(row, c++) = s.t_grid.size() ? s.t_grid[j] : double(j + 1);
      table(row, c++) = s.mean(i, j);
      table(row, c++) = s.sd(i, j);
      for (const auto& b : s.bands) {
        table(row, c++) = b.lower(i, j);
        table(row, c++) = b.upper(i, j);
        table(row, c++) = b.significance(i, j);
      }
      table(row, c++) = s.simbas(i, j);
      if (contour) table(row, c++) = contour->mask(i, j);
    }
  io::write_matrix(path, table, header);
}

void write_kriging_csv(const std::filesystem::path& path, const KrigingResult& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(bool(out), ErrorCode::missing_file, "cannot write " + path.string());
  out << "site,t,mean,lower,upper\n";
  for (Index i = 0; i < r.mean.rows(); ++i) {
    const std::string id = i < Index(r.ids.size()) ? r.ids[i] : std::to_string(i + 1);
    for (Index j = 0; j < r.mean.cols(); ++j)
      out << id << ',' << io::format_number(r.t_grid[j]) << ',' << io::format_number(r.mean(i, j))
          << ',' << io::format_number(r.lower(i, j)) << ',' << io::format_number(r.upper(i, j))
          << '\n';
  }
}

}  // namespace sfofr
