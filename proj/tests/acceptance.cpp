// Acceptance checks, one criterion per invocation:
//   sfofr_acceptance --criterion N [--mode fast|full]
// Prints a line per sub-check and a final PASS/FAIL line for the criterion.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <future>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sfofr/baseline_uk.hpp"
#include "sfofr/basis.hpp"
#include "sfofr/curves.hpp"
#include "sfofr/diagnostics.hpp"
#include "sfofr/posterior.hpp"
#include "sfofr/projection.hpp"
#include "sfofr/sampler.hpp"
#include "sfofr/simulate.hpp"
#include "sfofr/spatial.hpp"

using namespace sfofr;

namespace {

using Clock = std::chrono::steady_clock;

struct Report {
  bool ok = true;

  void check(const std::string& name, bool pass, const std::string& detail) {
    std::cout << "  [" << (pass ? "ok" : "FAIL") << "] " << name << ": " << detail << '\n';
    ok = ok && pass;
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

MatrixXd gaussian_matrix(Index r, Index c, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> z(0.0, sd);
  MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = z(eng);
  return m;
}

// ------------------------------------------------------------- simulation runs

struct PipelineScale {
  Index n;
  int iters;
  int burnin;
  int thin;
  Index rank;
};

struct PipelineResult {
  double mspe_psfofr = 0.0;
  double mse_psfofr = 0.0;
  double coverage_psfofr = 0.0;
  double mspe_fofr = 0.0;
  double mspe_uk = 0.0;
  double seconds = 0.0;
};

ModelSpec spec_for(ModelKind kind, const PipelineScale& s, std::uint64_t seed) {
  ModelSpec spec;
  spec.model = kind;
  spec.mcmc.iters = s.iters;
  spec.mcmc.burnin = s.burnin;
  spec.mcmc.thin = s.thin;
  spec.mcmc.seed = seed;
  return spec;
}

PipelineResult run_pipeline(const PipelineScale& scale, std::uint64_t seed) {
  const auto t0 = Clock::now();
  SimulationConfig cfg;
  cfg.n = scale.n;
  cfg.seed = seed;
  const SimulatedData sim = generate(cfg);
  const CoefficientSet coef = to_basis(sim.train, sim.phi, sim.xi);
  const MatrixXd x_test = sim.xi.project(sim.test.covariate);
  const MatrixXd& train_xy = sim.train.spatial->coords;
  const MatrixXd& test_xy = sim.test.spatial->coords;

  PipelineResult r;
  const Mesh mesh = build_mesh(train_xy, 0.04, 0.05);
  const ProjectionBasis proj = projection_point(mesh, train_xy, scale.rank);
  const PosteriorDraws ps = fit_psfofr(coef.y_coef, coef.x_coef, proj.P, proj.delta_precision,
                                       spec_for(ModelKind::psfofr, scale, seed));
  const KrigingResult kp =
      krige(predictors_projection(ps, x_test, project_new_points(proj, test_xy)), ps.tau2,
            sim.phi, 0.05, seed + 100);
  const PredictionScore sp = score(kp, sim.test.response);
  r.mspe_psfofr = sp.mspe;
  r.coverage_psfofr = sp.mean_coverage;
  r.mse_psfofr = score_surface(tensor_surface(sim.xi, sim.phi, ps.psi_mean()).values,
                               sim.truth.psi_surface);

  const PosteriorDraws fo = fit_fofr(coef.y_coef, coef.x_coef, spec_for(ModelKind::fofr, scale, seed));
  const KrigingResult kf = krige(predictors_fixed(fo, x_test), fo.tau2, sim.phi, 0.05, seed + 200);
  r.mspe_fofr = mspe(kf.mean, sim.test.response);

  const MatrixXd drift = make_drift(coef.x_coef, -1);
  const UKSystem uk = uk_fit(sim.train.response, sim.phi.weights, drift, train_xy);
  r.mspe_uk = mspe(uk_predict(uk, sim.train.response, test_xy, make_drift(x_test, -1)),
                   sim.test.response);
  r.seconds = seconds_since(t0);
  return r;
}

bool criterion_1(bool full) {
  Report rep;
  const PipelineScale scale = full ? PipelineScale{1000, 70000, 50000, 20, 50}
                                   : PipelineScale{300, 20000, 15000, 5, 21};
  const auto t0 = Clock::now();
  std::vector<std::future<PipelineResult>> jobs;
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
    jobs.push_back(std::async(std::launch::async, run_pipeline, scale, seed));
  PipelineResult avg;
  bool fofr_worse_every_seed = true, uk_order_every_seed = true;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const PipelineResult r = jobs[i].get();
    std::cout << "  seed " << i + 1 << ": PSFoFR MSPE " << fmt(r.mspe_psfofr) << " MSE "
              << fmt(r.mse_psfofr) << " coverage " << fmt(r.coverage_psfofr) << ", FoFR MSPE "
              << fmt(r.mspe_fofr) << ", UK MSPE " << fmt(r.mspe_uk) << " (" << fmt(r.seconds, 3)
              << " s)\n";
    avg.mspe_psfofr += r.mspe_psfofr / 3;
    avg.mse_psfofr += r.mse_psfofr / 3;
    avg.coverage_psfofr += r.coverage_psfofr / 3;
    avg.mspe_fofr += r.mspe_fofr / 3;
    avg.mspe_uk += r.mspe_uk / 3;
    fofr_worse_every_seed = fofr_worse_every_seed && r.mspe_fofr > r.mspe_psfofr;
    uk_order_every_seed = uk_order_every_seed && r.mspe_fofr > r.mspe_uk;
  }
  const double elapsed = seconds_since(t0);
  if (full) {
    rep.check("PSFoFR MSPE in 0.106 +/- 0.04", std::abs(avg.mspe_psfofr - 0.106) <= 0.04,
              fmt(avg.mspe_psfofr));
    rep.check("PSFoFR MSE(Psi) <= 0.01", avg.mse_psfofr <= 0.01, fmt(avg.mse_psfofr));
    rep.check("PSFoFR mean coverage >= 0.95", avg.coverage_psfofr >= 0.95,
              fmt(avg.coverage_psfofr));
    rep.check("FoFR MSPE > PSFoFR MSPE on every seed", fofr_worse_every_seed,
              fmt(avg.mspe_fofr) + " vs " + fmt(avg.mspe_psfofr));
    rep.check("UK MSPE in 0.123 +/- 0.05", std::abs(avg.mspe_uk - 0.123) <= 0.05, fmt(avg.mspe_uk));
    rep.check("runtime <= 90 min", elapsed <= 5400.0, fmt(elapsed, 4) + " s");
  } else {
    rep.check("MSPE(FoFR) > MSPE(PSFoFR) on every seed", fofr_worse_every_seed,
              fmt(avg.mspe_fofr) + " vs " + fmt(avg.mspe_psfofr));
    rep.check("MSPE(FoFR) > MSPE(UK) on every seed", uk_order_every_seed,
              fmt(avg.mspe_fofr) + " vs " + fmt(avg.mspe_uk));
    rep.check("PSFoFR MSE(Psi) <= 0.02", avg.mse_psfofr <= 0.02, fmt(avg.mse_psfofr));
    rep.check("runtime <= 10 min", elapsed <= 600.0, fmt(elapsed, 4) + " s");
  }
  return rep.ok;
}

// ------------------------------------------------------------- conditionals

constexpr int kOracleDraws = 100000;

void moment_check(Report& rep, const std::string& name, const std::vector<double>& x,
                  double mean, double var) {
  const oracle::Moments m = oracle::moments(x);
  const double zm = std::abs(m.mean - mean) / m.mean_se, zv = std::abs(m.var - var) / m.var_se;
  rep.check(name, zm < 3.0 && zv < 3.0,
            "mean " + fmt(m.mean) + " vs " + fmt(mean) + " (" + fmt(zm, 2) + " SE), var " +
                fmt(m.var) + " vs " + fmt(var) + " (" + fmt(zv, 2) + " SE)");
}

bool criterion_2() {
  Report rep;
  const auto t0 = Clock::now();
  {
    // psi | rest (and delta | rest, same form with the structured prior)
    MatrixXd gram(3, 3), prior = MatrixXd::Identity(3, 3) / 10.0, rhs(3, 1);
    gram << 5.0, 1.0, 0.5, 1.0, 4.0, -0.3, 0.5, -0.3, 3.0;
    rhs << 1.0, -2.0, 0.5;
    const double tau2 = 0.4;
    const MatrixXd cov = oracle::inverse(gram / tau2 + prior);
    const VectorXd mean = cov * rhs / tau2;
    Rng rng(1);
    std::vector<std::vector<double>> x(3);
    for (int d = 0; d < kOracleDraws; ++d) {
      const MatrixXd b = gibbs::draw_coefficients(gram, rhs, tau2, prior, rng);
      for (int i = 0; i < 3; ++i) x[i].push_back(b(i, 0));
    }
    for (int i = 0; i < 3; ++i)
      moment_check(rep, "psi[" + std::to_string(i) + "] | rest ~ Normal", x[i], mean[i], cov(i, i));

    MatrixXd structure(2, 2);
    structure << 2.0, -1.0, -1.0, 2.0;
    MatrixXd pgram(2, 2), prhs(2, 1);
    pgram << 3.0, 0.2, 0.2, 2.0;
    prhs << 0.7, 0.1;
    const double s = 1.5;
    const MatrixXd dcov = oracle::inverse(pgram / tau2 + s * structure);
    const VectorXd dmean = dcov * prhs / tau2;
    std::vector<std::vector<double>> y(2);
    for (int d = 0; d < kOracleDraws; ++d) {
      const MatrixXd b = gibbs::draw_coefficients(pgram, prhs, tau2, s * structure, rng);
      for (int i = 0; i < 2; ++i) y[i].push_back(b(i, 0));
    }
    for (int i = 0; i < 2; ++i)
      moment_check(rep, "delta[" + std::to_string(i) + "] | rest ~ Normal", y[i], dmean[i],
                   dcov(i, i));
  }
  {
    Rng rng(2);
    const Priors pr;
    for (const auto& [name, shape, scale] :
         {std::tuple{"tau2 | rest ~ InvGamma", pr.tau2_shape, pr.tau2_scale},
          std::tuple{"sigma2 | rest ~ InvGamma", pr.sigma2_shape, pr.sigma2_scale}}) {
      const double ssr = 4.2, count = 30.0;
      const double a = shape + count / 2, b = scale + ssr / 2;
      std::vector<double> x;
      for (int d = 0; d < kOracleDraws; ++d)
        x.push_back(gibbs::draw_inv_gamma(ssr, count, shape, scale, rng));
      moment_check(rep, name, x, b / (a - 1), b * b / ((a - 1) * (a - 1) * (a - 2)));
    }
    for (const auto& [name, shape, rate, dim] :
         {std::tuple{"delta precision | rest ~ Gamma", pr.delta_shape, pr.delta_rate, 5.0},
          std::tuple{"nu | rest ~ Gamma", pr.nu_shape, pr.nu_rate, 9.0}}) {
      const double quad = 6.5, count = 3.0 * dim;
      const double a = count / 2 + shape, b = quad / 2 + dim * rate;
      std::vector<double> x;
      for (int d = 0; d < kOracleDraws; ++d)
        x.push_back(gibbs::draw_precision(quad, count, dim, shape, rate, false, rng));
      moment_check(rep, name, x, a / b, a / (b * b));
    }
  }
  {
    MatrixXd coords(3, 2);
    coords << 0.0, 0.0, 0.2, 0.3, 0.7, 0.1;
    const MatrixXd gamma = matern_from_distances(distance_matrix(coords), 0.3, 0.5);
    const Eigen::LLT<MatrixXd> llt(gamma);
    MatrixXd resid(3, 1);
    resid << 0.5, 0.2, -0.7;
    const double sigma2 = 0.5, tau2 = 0.2;
    const MatrixXd cov =
        oracle::inverse(MatrixXd::Identity(3, 3) / tau2 + oracle::inverse(gamma) / sigma2);
    const VectorXd mean = cov * resid / tau2;
    Rng rng(3);
    std::vector<std::vector<double>> x(3);
    for (int d = 0; d < kOracleDraws; ++d) {
      const MatrixXd w = gibbs::draw_w_continuous(resid, gamma, llt, sigma2, tau2, rng);
      for (int i = 0; i < 3; ++i) x[i].push_back(w(i, 0));
    }
    for (int i = 0; i < 3; ++i)
      moment_check(rep, "W[" + std::to_string(i) + "] | rest ~ Normal (Matern)", x[i], mean[i],
                   cov(i, i));
  }
  {
    MatrixXd adj = MatrixXd::Zero(3, 3);
    adj(0, 1) = adj(1, 0) = adj(1, 2) = adj(2, 1) = 1.0;
    const double nu = 1.7, tau2 = 0.3;
    const MatrixXd cov = oracle::inverse(MatrixXd::Identity(3, 3) / tau2 + nu * icar_precision(adj));
    MatrixXd resid(3, 1);
    resid << 0.3, -0.4, 0.9;
    const VectorXd mean = cov * resid / tau2;
    Rng rng(4);
    std::vector<std::vector<double>> x(3);
    for (int d = 0; d < kOracleDraws; ++d) {
      const MatrixXd w = gibbs::draw_w_discrete(resid, icar_precision_sparse(adj), nu, tau2, rng);
      for (int i = 0; i < 3; ++i) x[i].push_back(w(i, 0));
    }
    for (int i = 0; i < 3; ++i)
      moment_check(rep, "W[" + std::to_string(i) + "] | rest ~ Normal (ICAR)", x[i], mean[i],
                   cov(i, i));
  }
  const double elapsed = seconds_since(t0);
  rep.check("runtime <= 2 min", elapsed <= 120.0, fmt(elapsed, 3) + " s");
  return rep.ok;
}

// ------------------------------------------------------------- closed form

bool criterion_3() {
  Report rep;
  const auto t0 = Clock::now();
  const Index n = 50, g = 3, k = 3, p = 5;
  const MatrixXd x = gaussian_matrix(n, g, 101);
  const MatrixXd pmat = gaussian_matrix(n, p, 102);
  const MatrixXd structure = pmat.transpose() * pmat / double(n) + MatrixXd::Identity(p, p);
  const MatrixXd y = x * gaussian_matrix(g, k, 103) + pmat * gaussian_matrix(p, k, 104, 0.5) +
                     gaussian_matrix(n, k, 105, 0.3);
  const double tau2 = 0.1, s = 2.0;
  ModelSpec spec;
  spec.model = ModelKind::psfofr;
  spec.mcmc.iters = 41000;
  spec.mcmc.burnin = 1000;
  spec.mcmc.thin = 1;
  spec.mcmc.seed = 7;
  spec.mcmc.fixed_tau2 = tau2;
  spec.mcmc.fixed_scale = s;
  const PosteriorDraws d = fit_psfofr(y, x, pmat, structure, spec);

  MatrixXd z(n, g + p);
  z << x, pmat;
  MatrixXd prior = MatrixXd::Zero(g + p, g + p);
  prior.topLeftCorner(g, g) = MatrixXd::Identity(g, g) / spec.priors.psi_var;
  prior.bottomRightCorner(p, p) = s * structure;
  double worst = 0.0;
  int outside = 0;
  for (Index c = 0; c < k; ++c) {
    const oracle::Gaussian ref = oracle::linear_posterior(z, y.col(c), tau2, prior);
    for (Index i = 0; i < g + p; ++i) {
      VectorXd chain(d.count());
      for (Index u = 0; u < d.count(); ++u)
        chain[u] = i < g ? d.psi[u](i, c) : d.random_effect[u](i - g, c);
      const double zscore = std::abs(chain.mean() - ref.mean[i]) / mcse(chain);
      worst = std::max(worst, zscore);
      if (zscore >= 3.0) ++outside;
    }
  }
  rep.check("posterior means of (psi, delta) within 3 MCSE of closed form", outside == 0,
            std::to_string(outside) + " of " + std::to_string((g + p) * k) +
                " outside, largest deviation " + fmt(worst, 3) + " MCSE");
  const double elapsed = seconds_since(t0);
  rep.check("runtime <= 1 min", elapsed <= 60.0, fmt(elapsed, 3) + " s");
  return rep.ok;
}

// ------------------------------------------------------------- bands

bool criterion_4() {
  Report rep;
  std::mt19937_64 eng(5);
  std::normal_distribution<double> z;
  bool coverage_ok = true, duality_ok = true;
  double worst_margin = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index u = 50 + 37 * trial, r = 3 + trial % 5, c = 4 + trial % 3;
    std::vector<MatrixXd> draws;
    for (Index d = 0; d < u; ++d) {
      MatrixXd m(r, c);
      for (Index i = 0; i < m.size(); ++i) m.data()[i] = 0.4 * double(i % 3) + z(eng);
      draws.push_back(m);
    }
    std::vector<double> alphas{0.05, 0.1, 0.2};
    const SurfaceSummary s = summarize_surface(matrix_surfaces(draws), alphas, 1);
    for (const auto& b : s.bands) {
      Index inside = 0;
      for (const auto& d : draws)
        inside += ((d.array() >= b.lower.array()) && (d.array() <= b.upper.array())).all();
      const double frac = double(inside) / double(u);
      const double bound = 1.0 - b.alpha - 1.0 / double(u);
      worst_margin = std::min(worst_margin, frac - bound);
      coverage_ok = coverage_ok && frac >= bound;
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) {
          const bool excl = b.lower(i, j) > 0.0 || b.upper(i, j) < 0.0;
          duality_ok = duality_ok && ((s.simbas(i, j) < b.alpha) == excl) &&
                       ((b.significance(i, j) != 0) == excl);
        }
    }
  }
  rep.check("fraction of draws inside I(alpha) >= 1 - alpha - 1/U", coverage_ok,
            "smallest margin " + fmt(worst_margin, 3) + " over 20 draw sets x 3 levels");
  rep.check("SimBaS < alpha <=> band excludes 0", duality_ok, "exact on every grid point");

  std::vector<MatrixXd> hand(3, MatrixXd(1, 2));
  hand[0] << 0.0, 2.0;
  hand[1] << 1.0, 1.0;
  hand[2] << 2.0, 0.0;
  const SurfaceSummary s = summarize_surface(matrix_surfaces(hand), {1.0 / 3.0}, 1);
  const auto& b = s.bands[0];
  const bool hand_ok = s.mean == MatrixXd::Ones(1, 2) && s.sd == MatrixXd::Ones(1, 2) &&
                       s.z == Eigen::Vector3d(1.0, 0.0, 1.0) && b.m_alpha == 1.0 &&
                       b.lower == MatrixXd::Zero(1, 2) && b.upper == MatrixXd::Constant(1, 2, 2.0);
  rep.check("1x2 hand example", hand_ok,
            "M_1/3 = " + fmt(b.m_alpha) + ", band [" + fmt(b.lower(0, 0)) + ", " +
                fmt(b.upper(0, 0)) + "] x [" + fmt(b.lower(0, 1)) + ", " + fmt(b.upper(0, 1)) + "]");
  return rep.ok;
}

// ------------------------------------------------------------- projection

double eigenspace_gap(const MatrixXd& op, const MoranEigen& got) {
  const oracle::Eigenpairs ref = oracle::jacobi(op);
  double worst = (got.all_values - ref.values).cwiseAbs().maxCoeff();
  for (Index j = 0; j < got.vectors.cols(); ++j) {
    VectorXd v = got.vectors.col(j);
    for (Index i = 0; i < ref.values.size(); ++i)
      if (std::abs(ref.values[i] - got.values[j]) < 1e-9)
        v -= ref.vectors.col(i).dot(v) * ref.vectors.col(i);
    worst = std::max(worst, v.cwiseAbs().maxCoeff());
  }
  return worst;
}

bool criterion_5() {
  Report rep;
  std::mt19937_64 eng(9);
  std::bernoulli_distribution edge(0.35);
  std::normal_distribution<double> z;
  double graph_gap = 0.0, orth = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 4 + trial % 7;
    MatrixXd adj = MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) adj(i, i + 1) = adj(i + 1, i) = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 2; j < n; ++j)
        if (edge(eng)) adj(i, j) = adj(j, i) = 1.0;
    const Index g = 1 + trial % 2;
    MatrixXd x(n, g);
    x.col(0).setOnes();
    if (g > 1)
      for (int i = 0; i < n; ++i) x(i, 1) = z(eng);
    const Index p = std::min<Index>(3, n - g);
    const MatrixXd op = moran_operator_areal(x, adj);
    graph_gap = std::max(graph_gap, eigenspace_gap(op, leading_eigen(op, p)));
    const ProjectionBasis proj = moran_basis_areal(x, adj, p);
    for (Index c = 0; c < p; ++c)
      if (std::abs(proj.eigenvalues[c]) > 1e-8)
        orth = std::max(orth, (x.transpose() * proj.P.col(c)).cwiseAbs().maxCoeff());
  }
  rep.check("areal Moran bases vs brute force (<= 10 nodes)", graph_gap < 1e-8, fmt(graph_gap, 3));
  rep.check("X'P ~ 0 for nonzero eigenvalues", orth < 1e-6, fmt(orth, 3));

  double mesh_gap = 0.0;
  for (double edge_len : {0.5, 0.34, 0.25}) {
    const Mesh m = build_mesh({0.0, 1.0}, {0.0, 1.0}, edge_len, 0.0);
    const MoranEigen eig = moran_basis_point(m, std::min<Index>(6, m.size() - 1));
    mesh_gap = std::max(mesh_gap, eigenspace_gap(moran_operator_centered(m.graph_adjacency), eig));
  }
  rep.check("mesh Moran bases vs brute force (<= 25 vertices)", mesh_gap < 1e-8, fmt(mesh_gap, 3));

  const Mesh m = build_mesh({0.0, 1.0}, {0.0, 1.0}, 0.1, 0.05);
  std::uniform_real_distribution<double> u;
  MatrixXd pts(500, 2);
  for (Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(eng);
  VectorXd f(m.size());
  for (Index v = 0; v < m.size(); ++v) f[v] = 2.0 * m.vertices(v, 0) - m.vertices(v, 1) + 3.0;
  const VectorXd got = interpolation_matrix(m, pts) * f;
  double affine = 0.0;
  for (Index i = 0; i < pts.rows(); ++i)
    affine = std::max(affine, std::abs(got[i] - (2.0 * pts(i, 0) - pts(i, 1) + 3.0)));
  rep.check("interpolation reproduces affine functions", affine < 1e-10, fmt(affine, 3));
  return rep.ok;
}

// ------------------------------------------------------------- UK

bool criterion_6() {
  Report rep;
  MatrixXd coords(3, 2);
  coords << 0.0, 0.0, 1.0, 0.0, 3.0, 0.0;
  const VariogramModel model{VariogramFamily::exponential, 0.0, 1.0, 1.0};
  const UKSystem sys = uk_system(coords, MatrixXd::Ones(3, 1), model);
  const UkWeights w = uk_weights(sys, Eigen::Vector2d(2.0, 0.0), VectorXd::Ones(1));
  auto g = [](double h) { return 1.0 - std::exp(-h); };
  MatrixXd a(4, 4);
  a << 0.0, g(1), g(3), 1.0, g(1), 0.0, g(2), 1.0, g(3), g(2), 0.0, 1.0, 1.0, 1.0, 1.0, 0.0;
  VectorXd b(4);
  b << g(2), g(1), g(1), 1.0;
  const VectorXd sol = oracle::solve(a, b);
  VectorXd got(4);
  got << w.lambda, w.mu;
  const double diff = (got - sol).cwiseAbs().maxCoeff();
  rep.check("3-site hand-solved system", diff < 1e-10, "max difference " + fmt(diff, 3));

  const MatrixXd curves = gaussian_matrix(3, 25, 11);
  const MatrixXd pred = uk_predict(sys, curves, coords.row(2), MatrixXd::Ones(1, 1));
  const double interp = (pred.row(0) - curves.row(2)).cwiseAbs().maxCoeff();
  rep.check("prediction at an observed site returns its curve", interp < 1e-10, fmt(interp, 3));
  return rep.ok;
}

// ------------------------------------------------------------- diagnostics

bool criterion_7(bool full) {
  Report rep;
  const VectorXd iid = oracle::ar1(10000, 0.0, 21);
  const double ratio = mcse(iid) / (std::sqrt((iid.array() - iid.mean()).square().sum() / 9999.0) / 100.0);
  rep.check("iid mcse ~ sd / sqrt(U) within 30%", std::abs(ratio - 1.0) <= 0.3, "ratio " + fmt(ratio));

  const VectorXd ar = oracle::ar1(100000, 0.9, 22);
  const double theory = 0.1 / 1.9;
  const double ess_ratio = ess(ar) / 100000.0 / theory;
  rep.check("AR(1) ess/U within 25% of (1-phi)/(1+phi)", std::abs(ess_ratio - 1.0) <= 0.25,
            "ratio " + fmt(ess_ratio));

  SimulationConfig cfg;
  cfg.n = full ? 1000 : 300;
  cfg.seed = 1;
  const SimulatedData sim = generate(cfg);
  const CoefficientSet coef = to_basis(sim.train, sim.phi, sim.xi);
  const MatrixXd& xy = sim.train.spatial->coords;
  ModelSpec spec;
  spec.mcmc.iters = full ? 20000 : 10000;
  spec.mcmc.burnin = spec.mcmc.iters / 2;
  spec.mcmc.thin = 5;
  spec.mcmc.seed = 3;

  const Mesh mesh = build_mesh(xy, 0.04, 0.05);
  const ProjectionBasis proj =
      projection_point(mesh, xy, full ? 50 : Index(std::ceil(0.1 * double(xy.rows()))));
  spec.model = ModelKind::psfofr;
  auto ps = std::async(std::launch::async, [&] {
    return fit_psfofr(coef.y_coef, coef.x_coef, proj.P, proj.delta_precision, spec);
  });
  ModelSpec sspec = spec;
  sspec.model = ModelKind::sfofr;
  const PosteriorDraws sf = fit_sfofr_continuous(coef.y_coef, coef.x_coef, xy, sspec);
  const PosteriorDraws pd = ps.get();
  const BlockDiagnostics dd = block_diagnostics(pd.random_effect);
  const BlockDiagnostics dw = block_diagnostics(sf.random_effect);
  rep.check("ESS(delta) > ESS(W) at matched iterations", dd.ess_median > dw.ess_median,
            "median ESS " + fmt(dd.ess_median) + " vs " + fmt(dw.ess_median) + " (min " +
                fmt(dd.ess_min) + " vs " + fmt(dw.ess_min) + ") over " +
                std::to_string(pd.count()) + " draws");
  return rep.ok;
}

// ------------------------------------------------------------- bases

bool criterion_8() {
  Report rep;
  const VectorXd grid = VectorXd::LinSpaced(225, 1.0, 225.0);
  const Interval dom{0.0, 225.0};
  const MatrixXd sample = gaussian_matrix(40, 225, 31);
  double ortho = 0.0, trip = 0.0;
  for (BasisFamily f : {BasisFamily::bspline, BasisFamily::fourier, BasisFamily::fpc}) {
    const BasisSystem b = make_basis(f, f == BasisFamily::fourier ? 19 : 15, grid, dom, sample);
    ortho = std::max(ortho, b.orthonormality_residual());
    const MatrixXd c = gaussian_matrix(20, b.size(), 32);
    trip = std::max(trip, (b.project(from_basis(c, b)) - c).cwiseAbs().maxCoeff());
  }
  rep.check("orthonormality residual < 1e-8 (bspline, fourier, fpc)", ortho < 1e-8, fmt(ortho, 3));
  rep.check("to_basis/from_basis round trip < 1e-8", trip < 1e-8, fmt(trip, 3));

  const BasisSystem b = make_bspline(dom, 15, 4, grid);
  const MatrixXd truth = true_surface(TruePsi::gaussian, grid, grid);
  const MatrixXd recon = tensor_surface(b, b, project_surface(b, b, truth)).values;
  const double sup = (recon - truth).cwiseAbs().maxCoeff() / truth.maxCoeff();
  const double rms = std::sqrt((recon - truth).squaredNorm() / double(truth.size()));
  rep.check("15x15 tensor reconstruction sup error < 1% of peak", sup < 0.01,
            fmt(100.0 * sup, 3) + "% of peak (RMS " + fmt(rms, 3) + ")");
  return rep.ok;
}

// ------------------------------------------------------------- thresholded surface

bool criterion_9() {
  Report rep;
  SimulationConfig cfg;
  cfg.n = 300;
  cfg.seed = 1;
  cfg.psi = TruePsi::complex;
  cfg.k_basis = 29;
  cfg.g_basis = 12;
  const SimulatedData sim = generate(cfg);
  const CoefficientSet coef = to_basis(sim.train, sim.phi, sim.xi);
  const MatrixXd& xy = sim.train.spatial->coords;
  const Mesh mesh = build_mesh(xy, 0.04, 0.05);
  const ProjectionBasis proj = projection_point(mesh, xy, Index(std::ceil(0.1 * double(xy.rows()))));
  ModelSpec spec;
  spec.model = ModelKind::psfofr;
  spec.mcmc.iters = 20000;
  spec.mcmc.burnin = 15000;
  spec.mcmc.thin = 5;
  spec.mcmc.seed = 1;
  const PosteriorDraws d = fit_psfofr(coef.y_coef, coef.x_coef, proj.P, proj.delta_precision, spec);
  const SurfaceSummary s = summarize_surface(d, sim.xi, sim.phi, {0.05});
  const double mse = score_surface(s.mean, sim.truth.psi_surface);
  rep.check("MSE(Psi) <= 0.01", mse <= 0.01, fmt(mse));

  const auto& sig = s.band(0.05).significance;
  Index dead = 0, agree = 0, live_flagged = 0, live = 0;
  for (Index i = 0; i < sig.rows(); ++i)
    for (Index j = 0; j < sig.cols(); ++j) {
      if (sim.truth.psi_surface(i, j) == 0.0) {
        ++dead;
        agree += sig(i, j) == 0;
      } else {
        ++live;
        live_flagged += sig(i, j) != 0;
      }
    }
  const double overlap = double(agree) / double(dead);
  rep.check("non-significant region covers >= 90% of the dead zone", overlap >= 0.9,
            fmt(100.0 * overlap, 4) + "% of " + std::to_string(dead) + " dead-zone points (" +
                fmt(100.0 * double(live_flagged) / double(live), 3) + "% of nonzero points flagged)");
  return rep.ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = 0;
  std::string mode = "fast";
  app.add_option("--criterion", criterion, "criterion number 1-9")->required()->check(CLI::Range(1, 9));
  app.add_option("--mode", mode, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  CLI11_PARSE(app, argc, argv);
  const bool full = mode == "full";

  std::cout << "criterion " << criterion << (criterion == 1 || criterion == 7 ? " [" + mode + "]" : "")
            << '\n';
  bool ok = false;
  try {
    switch (criterion) {
      case 1: ok = criterion_1(full); break;
      case 2: ok = criterion_2(); break;
      case 3: ok = criterion_3(); break;
      case 4: ok = criterion_4(); break;
      case 5: ok = criterion_5(); break;
      case 6: ok = criterion_6(); break;
      case 7: ok = criterion_7(full); break;
      case 8: ok = criterion_8(); break;
      case 9: ok = criterion_9(); break;
    }
  } catch (const std::exception& e) {
    std::cout << "  [FAIL] exception: " << e.what() << '\n';
    ok = false;
  }
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << '\n';
  return ok ? 0 : 1;
}
