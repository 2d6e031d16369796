#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfofr/random.hpp"
#include "sfofr/spatial.hpp"

namespace sfofr {

enum class ModelKind { fofr, sfofr, psfofr };

ModelKind parse_model_kind(const std::string& name);
const char* to_string(ModelKind kind);

struct Priors {
  double psi_var = 10.0;
  double tau2_shape = 2.0;
  double tau2_scale = 0.1;
  double sigma2_shape = 2.0;
  double sigma2_scale = 0.1;
  double rho_lo = 0.0;
  double rho_hi = 1.0;
  double nu_shape = 0.5;
  double nu_rate = 1.0 / 2000.0;
  double delta_shape = 0.5;
  double delta_rate = 1.0 / 2000.0;
  // Gamma(1, rate) for nu and the delta precision instead of the rank-based shape.
  bool appendix_literal = false;

  void validate() const;
};

struct McmcConfig {
  int iters = 70000;
  int burnin = 50000;
  int thin = 20;
  std::uint64_t seed = 1;
  double rho_proposal_sd = 0.5;  // on the logit scale, adapted during burn-in
  double target_acceptance = 0.3;
  double matern_smoothness = 0.5;

  // Frozen values, used by oracle tests; unset means sampled.
  std::optional<double> fixed_tau2;
  std::optional<double> fixed_scale;
  std::optional<double> fixed_rho;

  /// Number of stored draws, floor((iters - burnin) / thin).
  int kept() const { return (iters - burnin) / thin; }
  void validate() const;
};

struct ModelSpec {
  ModelKind model = ModelKind::psfofr;
  DomainKind domain = DomainKind::continuous;
  Priors priors;
  McmcConfig mcmc;
};

/// Thinned draws. `scale` holds sigma2 for continuous SFoFR, nu for discrete
/// SFoFR and the delta precision multiplier for PSFoFR.
struct PosteriorDraws {
  ModelSpec spec;
  std::vector<MatrixXd> psi;            // g_n x k_n each
  std::vector<MatrixXd> random_effect;  // n x k_n (W) or p x k_n (delta); empty for FoFR
  VectorXd tau2;
  VectorXd scale;
  VectorXd rho;
  double acceptance_rate_rho = 0.0;
  double rho_proposal_sd = 0.0;  // after adaptation
  int chains = 1;
  double delta_update_seconds = 0.0;

  Index count() const { return Index(psi.size()); }
  bool has_random_effect() const { return !random_effect.empty(); }
  MatrixXd psi_mean() const;
  MatrixXd random_effect_mean() const;
  const char* scale_name() const;
};

/// Gibbs full conditionals, exposed so they can be checked in isolation.
namespace gibbs {

/// Columns of B | rest ~ N(A^-1 rhs / tau2, A^-1), A = gram / tau2 + prior_precision,
/// independently across columns. gram is d x d, rhs is d x k.
MatrixXd draw_coefficients(const MatrixXd& gram, const MatrixXd& rhs, double tau2,
                           const MatrixXd& prior_precision, Rng& rng);

/// InvGamma(shape + count / 2, scale + ssr / 2).
double draw_inv_gamma(double ssr, double count, double shape, double scale, Rng& rng);

/// Gamma(count / 2 + shape, quad / 2 + dim * rate); literal mode uses shape 1.
double draw_precision(double quad, double count, double dim, double shape, double rate,
                      bool literal, Rng& rng);

/// W columns | rest with precision I / tau2 + Gamma^-1 / sigma2 and mean
/// (that precision)^-1 resid / tau2. `gamma_factor` is the Cholesky factor of
/// gamma.
MatrixXd draw_w_continuous(const MatrixXd& resid, const MatrixXd& gamma,
                           const Eigen::LLT<MatrixXd>& gamma_factor, double sigma2, double tau2,
                           Rng& rng);

/// W columns | rest with precision I / tau2 + nu Q (no recentering).
MatrixXd draw_w_discrete(const MatrixXd& resid, const Eigen::SparseMatrix<double>& q, double nu,
                         double tau2, Rng& rng);

/// log p(W | rho, sigma2) up to a constant, W columns iid N(0, sigma2 Gamma(rho)).
double log_w_density(const MatrixXd& w, const Eigen::LLT<MatrixXd>& gamma_factor, double sigma2);

}  // namespace gibbs

PosteriorDraws fit_fofr(const MatrixXd& y_coef, const MatrixXd& x_coef, const ModelSpec& spec);

/// `p` is n x p; `delta_structure` the p x p prior precision structure of each
/// delta column (scaled by the sampled multiplier). An all-zero P drops the
/// random effect and reproduces fit_fofr.
PosteriorDraws fit_psfofr(const MatrixXd& y_coef, const MatrixXd& x_coef, const MatrixXd& p,
                          const MatrixXd& delta_structure, const ModelSpec& spec);

PosteriorDraws fit_sfofr_continuous(const MatrixXd& y_coef, const MatrixXd& x_coef,
                                    const MatrixXd& coords, const ModelSpec& spec);

PosteriorDraws fit_sfofr_discrete(const MatrixXd& y_coef, const MatrixXd& x_coef,
                                  const MatrixXd& adjacency, const ModelSpec& spec);

/// Runs `chains` copies of `fit` with seeds seed, seed + 1, ... on up to
/// `threads` threads and concatenates their draws in chain order.
PosteriorDraws run_chains(const std::function<PosteriorDraws(const ModelSpec&)>& fit,
                          const ModelSpec& spec, int chains, int threads);

PosteriorDraws concatenate(const std::vector<PosteriorDraws>& parts);

/// Directory with meta.json, psi.bin, random_effect.bin and a scalars.csv of
/// the variance chains.
void save_draws(const std::filesystem::path& dir, const PosteriorDraws& draws);
PosteriorDraws load_draws(const std::filesystem::path& dir);

}  // namespace sfofr
