#include "sfofr/sampler.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "sfofr/error.hpp"
#include "sfofr/io.hpp"

namespace sfofr {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "fofr") return ModelKind::fofr;
  if (name == "sfofr") return ModelKind::sfofr;
  if (name == "psfofr") return ModelKind::psfofr;
  fail(ErrorCode::invalid_argument, "unknown model '" + name + "' (fofr, sfofr, psfofr)");
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::fofr: return "fofr";
    case ModelKind::sfofr: return "sfofr";
    case ModelKind::psfofr: return "psfofr";
  }
  return "unknown";
}

void Priors::validate() const {
  for (double v : {psi_var, tau2_shape, tau2_scale, sigma2_shape, sigma2_scale, nu_shape, nu_rate,
                   delta_shape, delta_rate})
    require(v > 0.0 && std::isfinite(v), ErrorCode::invalid_argument,
            "prior hyperparameters must be positive");
  require(rho_lo >= 0.0 && rho_hi > rho_lo, ErrorCode::invalid_argument,
          "rho prior support must be an interval (lo, hi) with 0 <= lo < hi");
}

void McmcConfig::validate() const {
  require(iters > 0 && burnin >= 0 && burnin < iters, ErrorCode::invalid_argument,
          "need 0 <= burnin < iters");
  require(thin >= 1, ErrorCode::invalid_argument, "thin must be at least 1");
  require(kept() >= 1, ErrorCode::invalid_argument,
          "(iters - burnin) / thin leaves no draws to keep");
  require(rho_proposal_sd > 0.0, ErrorCode::invalid_argument, "rho proposal sd must be positive");
  require(target_acceptance > 0.0 && target_acceptance < 1.0, ErrorCode::invalid_argument,
          "target acceptance must be in (0, 1)");
  require(!fixed_tau2 || *fixed_tau2 > 0.0, ErrorCode::invalid_argument,
          "fixed tau2 must be positive");
  require(!fixed_scale || *fixed_scale > 0.0, ErrorCode::invalid_argument,
          "fixed scale must be positive");
}

MatrixXd PosteriorDraws::psi_mean() const {
  require(!psi.empty(), ErrorCode::invalid_argument, "no draws");
  MatrixXd m = MatrixXd::Zero(psi[0].rows(), psi[0].cols());
  for (const auto& d : psi) m += d;
  return m / double(psi.size());
}

MatrixXd PosteriorDraws::random_effect_mean() const {
  require(!random_effect.empty(), ErrorCode::invalid_argument, "model has no random effect");
  MatrixXd m = MatrixXd::Zero(random_effect[0].rows(), random_effect[0].cols());
  for (const auto& d : random_effect) m += d;
  return m / double(random_effect.size());
}

const char* PosteriorDraws::scale_name() const {
  if (spec.model == ModelKind::psfofr) return "delta_precision";
  if (spec.model == ModelKind::sfofr)
    return spec.domain == DomainKind::continuous ? "sigma2" : "nu";
  return "none";
}

namespace gibbs {

MatrixXd draw_coefficients(const MatrixXd& gram, const MatrixXd& rhs, double tau2,
                           const MatrixXd& prior_precision, Rng& rng) {
  const MatrixXd a = gram / tau2 + prior_precision;
  Eigen::LLT<MatrixXd> llt(a);
  require(llt.info() == Eigen::Success, ErrorCode::numerical_failure,
          "conditional precision is not positive definite");
  const MatrixXd mean = llt.solve(rhs / tau2);
  const MatrixXd z = rng.normal_matrix(rhs.rows(), rhs.cols());
  return mean + llt.matrixU().solve(z);
}

double draw_inv_gamma(double ssr, double count, double shape, double scale, Rng& rng) {
  return rng.inv_gamma(shape + 0.5 * count, scale + 0.5 * std::max(ssr, 0.0));
}

double draw_precision(double quad, double count, double dim, double shape, double rate,
                      bool literal, Rng& rng) {
  const double a = literal ? 1.0 : 0.5 * count + shape;
  const double b = 0.5 * std::max(quad, 0.0) + dim * rate;
  require(b > 0.0, ErrorCode::numerical_failure, "Gamma rate is not positive");
  return rng.gamma(a, b);
}

MatrixXd draw_w_continuous(const MatrixXd& resid, const MatrixXd& gamma,
                           const Eigen::LLT<MatrixXd>& gamma_factor, double sigma2, double tau2,
                           Rng& rng) {
  const Index n = resid.rows(), k = resid.cols();
  MatrixXd s = sigma2 * gamma;
  s.diagonal().array() += tau2;
  Eigen::LLT<MatrixXd> s_llt(s);
  require(s_llt.info() == Eigen::Success, ErrorCode::numerical_failure,
          "sigma2 Gamma + tau2 I is not positive definite");
  // Prior draw corrected by the data: exact draw from the Gaussian conditional.
  const MatrixXd z1 = rng.normal_matrix(n, k);
  const MatrixXd z2 = rng.normal_matrix(n, k);
  MatrixXd w0 = gamma_factor.matrixL() * z1;
  w0 *= std::sqrt(sigma2);
  const MatrixXd gap = resid - w0 - std::sqrt(tau2) * z2;
  return w0 + sigma2 * (gamma * s_llt.solve(gap));
}

MatrixXd draw_w_discrete(const MatrixXd& resid, const Eigen::SparseMatrix<double>& q, double nu,
                         double tau2, Rng& rng) {
  const Index n = resid.rows();
  Eigen::SparseMatrix<double> a = nu * q;
  Eigen::SparseMatrix<double> id(n, n);
  id.setIdentity();
  a += id / tau2;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(a);
  require(solver.info() == Eigen::Success, ErrorCode::numerical_failure,
          "ICAR conditional precision factorization failed");
  const MatrixXd mean = solver.solve(resid / tau2);
  const MatrixXd z = rng.normal_matrix(n, resid.cols());
  const MatrixXd u = solver.matrixU().solve(z);
  return mean + solver.permutationPinv() * u;
}

double log_w_density(const MatrixXd& w, const Eigen::LLT<MatrixXd>& gamma_factor, double sigma2) {
  const double k = double(w.cols()), n = double(w.rows());
  const double log_det = 2.0 * gamma_factor.matrixLLT().diagonal().array().log().sum();
  const double quad = gamma_factor.matrixL().solve(w).squaredNorm();
  return -0.5 * k * log_det - 0.5 * k * n * std::log(sigma2) - 0.5 * quad / sigma2;
}

}  // namespace gibbs

namespace {

using Clock = std::chrono::steady_clock;

void check_inputs(const MatrixXd& y, const MatrixXd& x, const ModelSpec& spec) {
  spec.priors.validate();
  spec.mcmc.validate();
  require(y.rows() == x.rows(), ErrorCode::dimension_mismatch,
          "response and covariate coefficients have different row counts");
  require(y.rows() >= 2 && y.cols() >= 1 && x.cols() >= 1, ErrorCode::dimension_mismatch,
          "empty coefficient matrices");
  require(y.allFinite() && x.allFinite(), ErrorCode::numerical_failure,
          "coefficients contain non-finite values");
}

bool keep_draw(int it, const McmcConfig& m) {
  return it > m.burnin && (it - m.burnin) % m.thin == 0 &&
         (it - m.burnin) / m.thin <= m.kept();
}

void reserve(PosteriorDraws& out, bool re) {
  const Index u = out.spec.mcmc.kept();
  out.psi.reserve(u);
  if (re) out.random_effect.reserve(u);
  out.tau2.resize(u);
  out.scale.resize(re ? u : 0);
}

[[noreturn]] void rethrow_at(int it, const Error& e) {
  fail(e.code(), "iteration " + std::to_string(it) + ": " + e.what());
}

// Shared engine for FoFR and PSFoFR: everything runs on sufficient statistics
// so a sweep costs nothing in n.
PosteriorDraws fit_linear(const MatrixXd& y, const MatrixXd& x, const MatrixXd* p,
                          const MatrixXd* k_struct, const ModelSpec& spec) {
  check_inputs(y, x, spec);
  const auto& pr = spec.priors;
  const auto& mc = spec.mcmc;
  const Index n = y.rows(), k = y.cols(), g = x.cols();
  const bool re = p != nullptr;
  const Index np = re ? p->cols() : 0;

  const MatrixXd xtx = x.transpose() * x;
  const MatrixXd xty = x.transpose() * y;
  const double yty = y.squaredNorm();
  MatrixXd xtp, ptp, pty;
  if (re) {
    xtp = x.transpose() * (*p);
    ptp = p->transpose() * (*p);
    pty = p->transpose() * y;
  }
  const MatrixXd psi_prior = MatrixXd::Identity(g, g) / pr.psi_var;

  PosteriorDraws out;
  out.spec = spec;
  reserve(out, re);

  Rng rng(mc.seed);
  MatrixXd psi = MatrixXd::Zero(g, k);
  MatrixXd delta = MatrixXd::Zero(np, k);
  double tau2 = mc.fixed_tau2.value_or(1.0);
  double s = mc.fixed_scale.value_or(1.0);
  double delta_seconds = 0.0;
  Index stored = 0;

  for (int it = 1; it <= mc.iters; ++it) {
    try {
      MatrixXd rhs = xty;
      if (re) rhs.noalias() -= xtp * delta;
      psi = gibbs::draw_coefficients(xtx, rhs, tau2, psi_prior, rng);

      if (re) {
        const auto t0 = Clock::now();
        const MatrixXd drhs = pty - xtp.transpose() * psi;
        delta = gibbs::draw_coefficients(ptp, drhs, tau2, s * (*k_struct), rng);
        delta_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
      }

      double ssr = yty - 2.0 * (psi.cwiseProduct(xty)).sum() +
                   (psi.cwiseProduct(xtx * psi)).sum();
      if (re) {
        ssr += -2.0 * (delta.cwiseProduct(pty)).sum() +
               2.0 * (psi.cwiseProduct(xtp * delta)).sum() +
               (delta.cwiseProduct(ptp * delta)).sum();
      }
      if (!mc.fixed_tau2)
        tau2 = gibbs::draw_inv_gamma(ssr, double(n * k), pr.tau2_shape, pr.tau2_scale, rng);

      if (re && !mc.fixed_scale) {
        const double quad = (delta.cwiseProduct((*k_struct) * delta)).sum();
        s = gibbs::draw_precision(quad, double(np * k), double(np), pr.delta_shape,
                                  pr.delta_rate, pr.appendix_literal, rng);
      }
    } catch (const Error& e) {
      rethrow_at(it, e);
    }

    if (keep_draw(it, mc)) {
      out.psi.push_back(psi);
      if (re) out.random_effect.push_back(delta);
      out.tau2[stored] = tau2;
      if (re) out.scale[stored] = s;
      ++stored;
    }
  }
  out.delta_update_seconds = delta_seconds;
  return out;
}

struct GammaState {
  double rho = 0.5;
  MatrixXd gamma;
  Eigen::LLT<MatrixXd> llt;
};

GammaState factor_gamma(const MatrixXd& dist, double rho, double smoothness) {
  GammaState st;
  st.rho = rho;
  for (double jitter : {1e-8, 1e-6, 1e-4}) {
    st.gamma = matern_from_distances(dist, rho, smoothness, jitter);
    st.llt.compute(st.gamma);
    if (st.llt.info() == Eigen::Success) return st;
  }
  fail(ErrorCode::numerical_failure,
       "Matern correlation is not positive definite at rho = " + std::to_string(rho) +
           " even with 1e-4 jitter");
}

}  // namespace

PosteriorDraws fit_fofr(const MatrixXd& y_coef, const MatrixXd& x_coef, const ModelSpec& spec) {
  ModelSpec s = spec;
  s.model = ModelKind::fofr;
  return fit_linear(y_coef, x_coef, nullptr, nullptr, s);
}

PosteriorDraws fit_psfofr(const MatrixXd& y_coef, const MatrixXd& x_coef, const MatrixXd& p,
                          const MatrixXd& delta_structure, const ModelSpec& spec) {
  ModelSpec s = spec;
  s.model = ModelKind::psfofr;
  require(p.rows() == y_coef.rows(), ErrorCode::dimension_mismatch,
          "projection matrix rows do not match the number of sites");
  if (p.cols() == 0 || p.isZero(0.0)) return fit_linear(y_coef, x_coef, nullptr, nullptr, s);
  require(delta_structure.rows() == p.cols() && delta_structure.cols() == p.cols(),
          ErrorCode::dimension_mismatch, "delta prior structure must be p x p");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (delta_structure + delta_structure.transpose()),
                                             Eigen::EigenvaluesOnly);
  const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  require(es.eigenvalues().minCoeff() >= -1e-8 * top, ErrorCode::invalid_argument,
          "delta prior structure is not positive semidefinite");
  return fit_linear(y_coef, x_coef, &p, &delta_structure, s);
}

PosteriorDraws fit_sfofr_continuous(const MatrixXd& y, const MatrixXd& x, const MatrixXd& coords,
                                    const ModelSpec& spec) {
  check_inputs(y, x, spec);
  require(coords.rows() == y.rows() && coords.cols() == 2, ErrorCode::dimension_mismatch,
          "coordinates must be n x 2");
  const auto& pr = spec.priors;
  const auto& mc = spec.mcmc;
  const Index n = y.rows(), k = y.cols(), g = x.cols();

  PosteriorDraws out;
  out.spec = spec;
  out.spec.model = ModelKind::sfofr;
  out.spec.domain = DomainKind::continuous;
  reserve(out, true);
  out.rho.resize(mc.kept());

  const MatrixXd dist = distance_matrix(coords);
  const MatrixXd xtx = x.transpose() * x;
  const MatrixXd psi_prior = MatrixXd::Identity(g, g) / pr.psi_var;
  const double width = pr.rho_hi - pr.rho_lo;
  auto to_eta = [&](double r) { return std::log((r - pr.rho_lo) / (pr.rho_hi - r)); };
  auto to_rho = [&](double e) { return pr.rho_lo + width / (1.0 + std::exp(-e)); };
  auto log_jacobian = [&](double r) { return std::log(r - pr.rho_lo) + std::log(pr.rho_hi - r); };

  Rng rng(mc.seed);
  MatrixXd psi = MatrixXd::Zero(g, k);
  MatrixXd w = MatrixXd::Zero(n, k);
  double tau2 = mc.fixed_tau2.value_or(1.0);
  double sigma2 = mc.fixed_scale.value_or(1.0);
  GammaState cur = factor_gamma(dist, mc.fixed_rho.value_or(pr.rho_lo + 0.5 * width),
                                mc.matern_smoothness);
  double log_sd = std::log(mc.rho_proposal_sd);
  int batch_accept = 0, batch_len = 0, batches = 0;
  long kept_accept = 0, kept_proposals = 0;
  Index stored = 0;

  for (int it = 1; it <= mc.iters; ++it) {
    try {
      psi = gibbs::draw_coefficients(xtx, x.transpose() * (y - w), tau2, psi_prior, rng);
      const MatrixXd resid = y - x * psi;
      w = gibbs::draw_w_continuous(resid, cur.gamma, cur.llt, sigma2, tau2, rng);

      if (!mc.fixed_tau2)
        tau2 = gibbs::draw_inv_gamma((resid - w).squaredNorm(), double(n * k), pr.tau2_shape,
                                     pr.tau2_scale, rng);
      if (!mc.fixed_scale) {
        const double quad = cur.llt.matrixL().solve(w).squaredNorm();
        sigma2 = gibbs::draw_inv_gamma(quad, double(n * k), pr.sigma2_shape, pr.sigma2_scale, rng);
      }

      if (!mc.fixed_rho) {
        const double eta = to_eta(cur.rho) + std::exp(log_sd) * rng.normal();
        const double prop_rho = to_rho(eta);
        bool accepted = false;
        if (prop_rho > pr.rho_lo && prop_rho < pr.rho_hi) {
          GammaState prop = factor_gamma(dist, prop_rho, mc.matern_smoothness);
          const double log_ratio = gibbs::log_w_density(w, prop.llt, sigma2) +
                                   log_jacobian(prop_rho) -
                                   gibbs::log_w_density(w, cur.llt, sigma2) -
                                   log_jacobian(cur.rho);
          if (std::log(rng.uniform()) < log_ratio) {
            cur = std::move(prop);
            accepted = true;
          }
        }
        if (it <= mc.burnin) {
          batch_accept += accepted;
          if (++batch_len == 50) {
            ++batches;
            const double rate = double(batch_accept) / 50.0;
            log_sd += (rate - mc.target_acceptance) * std::min(1.0, 10.0 / std::sqrt(batches));
            batch_accept = batch_len = 0;
          }
        } else {
          kept_accept += accepted;
          ++kept_proposals;
        }
      }
    } catch (const Error& e) {
      rethrow_at(it, e);
    }

    if (keep_draw(it, mc)) {
      out.psi.push_back(psi);
      out.random_effect.push_back(w);
      out.tau2[stored] = tau2;
      out.scale[stored] = sigma2;
      out.rho[stored] = cur.rho;
      ++stored;
    }
  }
  out.acceptance_rate_rho = kept_proposals ? double(kept_accept) / double(kept_proposals) : 0.0;
  out.rho_proposal_sd = std::exp(log_sd);
  return out;
}

PosteriorDraws fit_sfofr_discrete(const MatrixXd& y, const MatrixXd& x, const MatrixXd& adjacency,
                                  const ModelSpec& spec) {
  check_inputs(y, x, spec);
  require(adjacency.rows() == y.rows() && adjacency.cols() == y.rows(),
          ErrorCode::dimension_mismatch, "adjacency does not match the number of sites");
  const auto& pr = spec.priors;
  const auto& mc = spec.mcmc;
  const Index n = y.rows(), k = y.cols(), g = x.cols();

  PosteriorDraws out;
  out.spec = spec;
  out.spec.model = ModelKind::sfofr;
  out.spec.domain = DomainKind::discrete;
  reserve(out, true);

  const Eigen::SparseMatrix<double> q = icar_precision_sparse(adjacency);
  const double rank_q = double(n - connected_components(adjacency));
  const MatrixXd xtx = x.transpose() * x;
  const MatrixXd psi_prior = MatrixXd::Identity(g, g) / pr.psi_var;

  Rng rng(mc.seed);
  MatrixXd psi = MatrixXd::Zero(g, k);
  MatrixXd w = MatrixXd::Zero(n, k);
  double tau2 = mc.fixed_tau2.value_or(1.0);
  double nu = mc.fixed_scale.value_or(1.0);
  Index stored = 0;

  for (int it = 1; it <= mc.iters; ++it) {
    try {
      psi = gibbs::draw_coefficients(xtx, x.transpose() * (y - w), tau2, psi_prior, rng);
      const MatrixXd resid = y - x * psi;
      w = gibbs::draw_w_discrete(resid, q, nu, tau2, rng);
      w.rowwise() -= w.colwise().mean();

      if (!mc.fixed_tau2)
        tau2 = gibbs::draw_inv_gamma((resid - w).squaredNorm(), double(n * k), pr.tau2_shape,
                                     pr.tau2_scale, rng);
      if (!mc.fixed_scale) {
        const double quad = (w.cwiseProduct(q * w)).sum();
        nu = gibbs::draw_precision(quad, rank_q * double(k), double(n), pr.nu_shape, pr.nu_rate,
                                   pr.appendix_literal, rng);
      }
    } catch (const Error& e) {
      rethrow_at(it, e);
    }

    if (keep_draw(it, mc)) {
      out.psi.push_back(psi);
      out.random_effect.push_back(w);
      out.tau2[stored] = tau2;
      out.scale[stored] = nu;
      ++stored;
    }
  }
  return out;
}

PosteriorDraws concatenate(const std::vector<PosteriorDraws>& parts) {
  require(!parts.empty(), ErrorCode::invalid_argument, "no chains to combine");
  PosteriorDraws out = parts.front();
  out.chains = 0;
  out.psi.clear();
  out.random_effect.clear();
  std::vector<double> tau2, scale, rho;
  double acc = 0.0, sd = 0.0, secs = 0.0;
  for (const auto& p : parts) {
    out.psi.insert(out.psi.end(), p.psi.begin(), p.psi.end());
    out.random_effect.insert(out.random_effect.end(), p.random_effect.begin(),
                             p.random_effect.end());
    tau2.insert(tau2.end(), p.tau2.data(), p.tau2.data() + p.tau2.size());
    scale.insert(scale.end(), p.scale.data(), p.scale.data() + p.scale.size());
    rho.insert(rho.end(), p.rho.data(), p.rho.data() + p.rho.size());
    acc += p.acceptance_rate_rho;
    sd += p.rho_proposal_sd;
    secs += p.delta_update_seconds;
    out.chains += p.chains;
  }
  out.tau2 = Eigen::Map<VectorXd>(tau2.data(), Index(tau2.size()));
  out.scale = Eigen::Map<VectorXd>(scale.data(), Index(scale.size()));
  out.rho = Eigen::Map<VectorXd>(rho.data(), Index(rho.size()));
  out.acceptance_rate_rho = acc / double(parts.size());
  out.rho_proposal_sd = sd / double(parts.size());
  out.delta_update_seconds = secs;
  return out;
}

PosteriorDraws run_chains(const std::function<PosteriorDraws(const ModelSpec&)>& fit,
                          const ModelSpec& spec, int chains, int threads) {
  require(chains >= 1, ErrorCode::invalid_argument, "need at least one chain");
  threads = std::max(1, std::min(threads, chains));
  std::vector<PosteriorDraws> parts(chains);
  std::vector<std::exception_ptr> errors(chains);
  for (int start = 0; start < chains; start += threads) {
    std::vector<std::thread> pool;
    for (int c = start; c < std::min(chains, start + threads); ++c) {
      pool.emplace_back([&, c] {
        try {
          ModelSpec s = spec;
          s.mcmc.seed = spec.mcmc.seed + std::uint64_t(c);
          parts[c] = fit(s);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return concatenate(parts);
}

namespace {

std::vector<double> flatten(const std::vector<MatrixXd>& draws) {
  std::vector<double> out;
  if (draws.empty()) return out;
  const Index r = draws[0].rows(), c = draws[0].cols();
  out.reserve(draws.size() * std::size_t(r * c));
  for (const auto& d : draws)
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) out.push_back(d(i, j));
  return out;
}

std::vector<MatrixXd> unflatten(const std::vector<double>& flat, Index u, Index r, Index c,
                                const std::filesystem::path& path) {
  require(flat.size() == std::size_t(u * r * c), ErrorCode::schema_violation,
          path.string() + " does not match the dimensions in meta.json");
  std::vector<MatrixXd> out(u, MatrixXd(r, c));
  std::size_t pos = 0;
  for (Index d = 0; d < u; ++d)
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) out[d](i, j) = flat[pos++];
  return out;
}

nlohmann::json spec_json(const ModelSpec& s) {
  const auto& p = s.priors;
  const auto& m = s.mcmc;
  nlohmann::json j;
  j["model"] = to_string(s.model);
  j["domain"] = to_string(s.domain);
  j["priors"] = {{"psi_var", p.psi_var},         {"tau2_shape", p.tau2_shape},
                 {"tau2_scale", p.tau2_scale},   {"sigma2_shape", p.sigma2_shape},
                 {"sigma2_scale", p.sigma2_scale}, {"rho_lo", p.rho_lo},
                 {"rho_hi", p.rho_hi},           {"nu_shape", p.nu_shape},
                 {"nu_rate", p.nu_rate},         {"delta_shape", p.delta_shape},
                 {"delta_rate", p.delta_rate},   {"appendix_literal", p.appendix_literal}};
  j["mcmc"] = {{"iters", m.iters},
               {"burnin", m.burnin},
               {"thin", m.thin},
               {"seed", m.seed},
               {"rho_proposal_sd", m.rho_proposal_sd},
               {"target_acceptance", m.target_acceptance},
               {"matern_smoothness", m.matern_smoothness}};
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.model = parse_model_kind(j.at("model").get<std::string>());
  s.domain = j.at("domain").get<std::string>() == "discrete" ? DomainKind::discrete
                                                             : DomainKind::continuous;
  const auto& p = j.at("priors");
  s.priors.psi_var = p.at("psi_var");
  s.priors.tau2_shape = p.at("tau2_shape");
  s.priors.tau2_scale = p.at("tau2_scale");
  s.priors.sigma2_shape = p.at("sigma2_shape");
  s.priors.sigma2_scale = p.at("sigma2_scale");
  s.priors.rho_lo = p.at("rho_lo");
  s.priors.rho_hi = p.at("rho_hi");
  s.priors.nu_shape = p.at("nu_shape");
  s.priors.nu_rate = p.at("nu_rate");
  s.priors.delta_shape = p.at("delta_shape");
  s.priors.delta_rate = p.at("delta_rate");
  s.priors.appendix_literal = p.at("appendix_literal");
  const auto& m = j.at("mcmc");
  s.mcmc.iters = m.at("iters");
  s.mcmc.burnin = m.at("burnin");
  s.mcmc.thin = m.at("thin");
  s.mcmc.seed = m.at("seed");
  s.mcmc.rho_proposal_sd = m.at("rho_proposal_sd");
  s.mcmc.target_acceptance = m.at("target_acceptance");
  s.mcmc.matern_smoothness = m.at("matern_smoothness");
  return s;
}

}  // namespace

void save_draws(const std::filesystem::path& dir, const PosteriorDraws& d) {
  require(d.count() > 0, ErrorCode::invalid_argument, "no draws to save");
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["spec"] = spec_json(d.spec);
  meta["draws"] = d.count();
  meta["chains"] = d.chains;
  meta["psi_dims"] = {d.count(), d.psi[0].rows(), d.psi[0].cols()};
  if (d.has_random_effect())
    meta["random_effect_dims"] = {d.count(), d.random_effect[0].rows(),
                                  d.random_effect[0].cols()};
  meta["scale_name"] = d.scale_name();
  meta["acceptance_rate_rho"] = d.acceptance_rate_rho;
  meta["rho_proposal_sd"] = d.rho_proposal_sd;
  meta["layout"] = "little-endian float64, row-major over (draw, row, column)";
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';

  io::write_binary(dir / "psi.bin", flatten(d.psi));
  if (d.has_random_effect()) io::write_binary(dir / "random_effect.bin", flatten(d.random_effect));

  std::vector<std::string> header{"tau2"};
  MatrixXd scalars(d.count(), 1 + (d.scale.size() ? 1 : 0) + (d.rho.size() ? 1 : 0));
  scalars.col(0) = d.tau2;
  if (d.scale.size()) {
    scalars.col(1) = d.scale;
    header.push_back(d.scale_name());
  }
  if (d.rho.size()) {
    scalars.col(2) = d.rho;
    header.push_back("rho");
  }
  io::write_matrix(dir / "scalars.csv", scalars, header);
}

PosteriorDraws load_draws(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) fail(ErrorCode::missing_file, "cannot open " + meta_path.string());
  PosteriorDraws d;
  try {
    nlohmann::json meta;
    in >> meta;
    d.spec = spec_from_json(meta.at("spec"));
    d.chains = meta.value("chains", 1);
    d.acceptance_rate_rho = meta.value("acceptance_rate_rho", 0.0);
    d.rho_proposal_sd = meta.value("rho_proposal_sd", 0.0);
    const auto pd = meta.at("psi_dims");
    d.psi = unflatten(io::read_binary(dir / "psi.bin"), pd[0], pd[1], pd[2], dir / "psi.bin");
    if (meta.contains("random_effect_dims")) {
      const auto rd = meta.at("random_effect_dims");
      d.random_effect = unflatten(io::read_binary(dir / "random_effect.bin"), rd[0], rd[1],
                                  rd[2], dir / "random_effect.bin");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::schema_violation, meta_path.string() + ": " + e.what());
  }
  const MatrixXd scalars = io::read_matrix(dir / "scalars.csv");
  require(scalars.rows() == d.count() && scalars.cols() >= 1, ErrorCode::schema_violation,
          "scalars.csv does not match the draw count");
  d.tau2 = scalars.col(0);
  if (scalars.cols() >= 2) d.scale = scalars.col(1);
  if (scalars.cols() >= 3) d.rho = scalars.col(2);
  return d;
}

}  // namespace sfofr
