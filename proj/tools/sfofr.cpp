// sfofr: command-line front end (simulate, fit, predict, summarize, baseline-uk).

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <thread>

#include "sfofr/baseline_uk.hpp"
#include "sfofr/basis.hpp"
#include "sfofr/curves.hpp"
#include "sfofr/diagnostics.hpp"
#include "sfofr/error.hpp"
#include "sfofr/io.hpp"
#include "sfofr/posterior.hpp"
#include "sfofr/projection.hpp"
#include "sfofr/sampler.hpp"
#include "sfofr/simulate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sfofr;
using io::CurveTable;
using io::Locations;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return 2;
    case ErrorCode::missing_file: return 3;
    case ErrorCode::schema_violation: return 4;
    case ErrorCode::dimension_mismatch:
    case ErrorCode::outside_mesh: return 5;
    case ErrorCode::missing_spatial_metadata: return 6;
    case ErrorCode::rank_deficient:
    case ErrorCode::numerical_failure: return 7;
  }
  return 1;
}

int report(const std::string& code, int status, const std::string& message) {
  json err;
  err["error"] = {{"code", code}, {"exit_code", status}, {"message", message}};
  std::cerr << err.dump() << std::endl;
  return status;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_file, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::schema_violation, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(2) << '\n';
}

int thread_count() {
  if (const char* env = std::getenv("SFOFR_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Values from a JSON config for every option not given on the command line.
void apply_config(CLI::App* app, const std::string& config_path) {
  if (config_path.empty()) return;
  const json cfg = read_json(config_path);
  for (CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (opt->count() > 0 || name.empty() || name == "help" || name == "config") continue;
    std::string key = name;
    if (!cfg.contains(key)) {
      std::replace(key.begin(), key.end(), '-', '_');
      if (!cfg.contains(key)) continue;
    }
    const json& v = cfg.at(key);
    auto text = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    if (v.is_array()) {
      for (const auto& e : v) opt->add_result(text(e));
    } else if (v.is_boolean()) {
      if (!v.get<bool>()) continue;
      opt->add_result("true");
    } else {
      opt->add_result(text(v));
    }
    opt->run_callback();
  }
}

Priors priors_from_config(const std::string& config_path, bool literal) {
  Priors p;
  if (!config_path.empty()) {
    const json cfg = read_json(config_path);
    if (cfg.contains("priors")) {
      const json& j = cfg["priors"];
      auto set = [&](const char* key, double& field) {
        if (j.contains(key)) field = j.at(key).get<double>();
      };
      set("psi_var", p.psi_var);
      set("tau2_shape", p.tau2_shape);
      set("tau2_scale", p.tau2_scale);
      set("sigma2_shape", p.sigma2_shape);
      set("sigma2_scale", p.sigma2_scale);
      set("rho_lo", p.rho_lo);
      set("rho_hi", p.rho_hi);
      set("nu_shape", p.nu_shape);
      set("nu_rate", p.nu_rate);
      set("delta_shape", p.delta_shape);
      set("delta_rate", p.delta_rate);
    }
  }
  p.appendix_literal = literal;
  return p;
}

json priors_json(const Priors& p) {
  return {{"psi_var", p.psi_var},       {"tau2_shape", p.tau2_shape},
          {"tau2_scale", p.tau2_scale}, {"sigma2_shape", p.sigma2_shape},
          {"sigma2_scale", p.sigma2_scale}, {"rho_lo", p.rho_lo},
          {"rho_hi", p.rho_hi},         {"nu_shape", p.nu_shape},
          {"nu_rate", p.nu_rate},       {"delta_shape", p.delta_shape},
          {"delta_rate", p.delta_rate}, {"appendix_literal", p.appendix_literal}};
}

json block_json(const std::vector<MatrixXd>& draws) {
  const BlockDiagnostics d = block_diagnostics(draws);
  return {{"ess_median", d.ess_median},
          {"ess_min", d.ess_min},
          {"ess_mean", d.ess_mean},
          {"mcse_max", d.mcse_max}};
}

json chain_json(const VectorXd& chain) {
  json j = {{"ess", ess(chain)}, {"mean", chain.mean()}};
  if (chain.size() >= 100) j["mcse"] = mcse(chain);
  return j;
}

std::vector<std::string> index_names(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  for (Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  SimulationConfig cfg;
  std::string psi = "gaussian";
  bool no_spatial = false;
  std::string out = "sim";
  std::string config;
};

void cmd_simulate(SimulateArgs& a) {
  a.cfg.psi = parse_true_psi(a.psi);
  a.cfg.spatial_effect = !a.no_spatial;
  const SimulatedData sim = generate(a.cfg);
  const fs::path out = a.out;
  io::save_dataset(out / "train", sim.train);
  io::save_dataset(out / "test", sim.test);
  io::write_basis(out / "truth" / "phi.csv", sim.phi);
  io::write_basis(out / "truth" / "xi.csv", sim.xi);
  std::vector<std::string> r_ids;
  for (Index i = 0; i < sim.xi.grid.size(); ++i) r_ids.push_back(io::format_number(sim.xi.grid[i]));
  io::write_curves(out / "truth" / "psi_surface.csv", sim.phi.grid, r_ids, sim.truth.psi_surface);
  io::write_matrix(out / "truth" / "psi_coef.csv", sim.truth.psi_coef,
                   index_names("k", sim.truth.psi_coef.cols()));
  io::write_matrix(out / "truth" / "w_coef.csv", sim.truth.w_coef,
                   index_names("k", sim.truth.w_coef.cols()));
  write_json(out / "meta.json",
             {{"n", a.cfg.n},
              {"seed", a.cfg.seed},
              {"k_basis", a.cfg.k_basis},
              {"g_basis", a.cfg.g_basis},
              {"order", a.cfg.order},
              {"sigma2", a.cfg.sigma2},
              {"rho", a.cfg.rho},
              {"smoothness", a.cfg.smoothness},
              {"tau2", a.cfg.tau2},
              {"spatial_effect", a.cfg.spatial_effect},
              {"psi", to_string(a.cfg.psi)},
              {"train_frac", a.cfg.train_frac},
              {"n_train", sim.train.size()},
              {"n_test", sim.test.size()}});
  std::cout << "wrote " << sim.train.size() << " training and " << sim.test.size()
            << " test sites to " << out.string() << '\n';
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string model = "psfofr";
  std::string domain;
  std::string basis = "bspline";
  std::string k_basis = "auto";
  std::string g_basis = "auto";
  std::string rank = "auto";
  double max_edge = 0.04;
  double margin = 0.05;
  int iters = 70000;
  int burnin = 50000;
  int thin = 20;
  std::uint64_t seed = 1;
  int chains = 1;
  bool literal = false;
  std::string out = "fit";
  std::string config;
};

std::vector<int> gcv_candidates(BasisFamily family, Index grid_size) {
  std::vector<int> out;
  const int hi = int(std::min<Index>(31, grid_size - 1));
  for (int k = family == BasisFamily::bspline ? 4 : 3; k <= hi; ++k)
    if (family != BasisFamily::fourier || k % 2 == 1) out.push_back(k);
  return out;
}

BasisSystem choose_basis(BasisFamily family, const std::string& size, const MatrixXd& curves,
                         const VectorXd& grid, Interval domain, json& log, const char* name) {
  int k = 0;
  if (size == "auto") {
    const GcvResult gcv = gcv_select(curves, grid, domain, family, gcv_candidates(family, grid.size()));
    k = gcv.chosen;
    log[name] = {{"chosen", k}, {"by", "gcv"}, {"candidates", gcv.candidates}, {"scores", gcv.scores}};
  } else {
    try {
      k = std::stoi(size);
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, std::string("--") + name + " must be 'auto' or an integer");
    }
    log[name] = {{"chosen", k}, {"by", "user"}};
  }
  return make_basis(family, k, grid, domain, curves);
}

Index parse_rank(const std::string& rank) {
  if (rank == "auto") return 0;
  try {
    const long v = std::stol(rank);
    require(v >= 1, ErrorCode::invalid_argument, "--rank must be positive");
    return Index(v);
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::invalid_argument, "--rank must be 'auto' or an integer");
  }
}

void cmd_fit(FitArgs& a) {
  const FunctionalDataset data = io::load_dataset(a.data);
  const ModelKind model = parse_model_kind(a.model);
  const BasisFamily family = parse_basis_family(a.basis);
  json log;

  DomainKind domain = DomainKind::continuous;
  if (model != ModelKind::fofr) {
    require(data.spatial.has_value(), ErrorCode::missing_spatial_metadata,
            std::string("model ") + to_string(model) +
                " needs locations.csv or adjacency.csv in the data directory");
    domain = data.spatial->kind;
    if (!a.domain.empty()) {
      const DomainKind wanted = a.domain == "point"   ? DomainKind::continuous
                                : a.domain == "areal" ? DomainKind::discrete
                                                      : (fail(ErrorCode::invalid_argument,
                                                              "--domain must be point or areal"),
                                                         DomainKind::continuous);
      require(wanted == domain, ErrorCode::missing_spatial_metadata,
              std::string("--domain ") + a.domain + " does not match the data's spatial metadata");
    }
    const std::string warning = data.spatial->validate();
    if (!warning.empty()) std::cerr << "warning: " << warning << '\n';
  }

  const BasisSystem phi = choose_basis(family, a.k_basis, data.response, data.t_grid,
                                       data.t_domain, log, "k-basis");
  const BasisSystem xi = choose_basis(family, a.g_basis, data.covariate, data.r_grid,
                                      data.r_domain, log, "g-basis");
  const CoefficientSet coef = to_basis(data, phi, xi);

  ModelSpec spec;
  spec.model = model;
  spec.domain = domain;
  spec.priors = priors_from_config(a.config, a.literal);
  spec.mcmc.iters = a.iters;
  spec.mcmc.burnin = a.burnin;
  spec.mcmc.thin = a.thin;
  spec.mcmc.seed = a.seed;

  const fs::path out = a.out;
  fs::create_directories(out);
  std::optional<ProjectionBasis> proj;
  std::function<PosteriorDraws(const ModelSpec&)> runner;
  if (model == ModelKind::fofr) {
    runner = [&](const ModelSpec& s) { return fit_fofr(coef.y_coef, coef.x_coef, s); };
  } else if (model == ModelKind::psfofr) {
    if (domain == DomainKind::continuous) {
      const Mesh mesh = build_mesh(data.spatial->coords, a.max_edge, a.margin);
      proj = projection_point(mesh, data.spatial->coords, parse_rank(a.rank), data.ids);
      write_mesh(out / "mesh", mesh);
      io::write_matrix(out / "M.csv", proj->M, index_names("m", proj->rank));
      log["mesh"] = {{"vertices", mesh.size()}, {"triangles", mesh.triangle_count()},
                     {"max_edge", a.max_edge}, {"margin", a.margin}};
    } else {
      proj = moran_basis_areal(coef.x_coef, data.spatial->adjacency, parse_rank(a.rank));
    }
    io::write_matrix(out / "P.csv", proj->P, index_names("p", proj->rank));
    io::write_matrix(out / "delta_precision.csv", proj->delta_precision,
                     index_names("p", proj->rank));
    io::write_matrix(out / "eigenvalues.csv", proj->eigenvalues, {"eigenvalue"});
    log["rank"] = proj->rank;
    runner = [&](const ModelSpec& s) {
      return fit_psfofr(coef.y_coef, coef.x_coef, proj->P, proj->delta_precision, s);
    };
  } else if (domain == DomainKind::continuous) {
    runner = [&](const ModelSpec& s) {
      return fit_sfofr_continuous(coef.y_coef, coef.x_coef, data.spatial->coords, s);
    };
  } else {
    runner = [&](const ModelSpec& s) {
      return fit_sfofr_discrete(coef.y_coef, coef.x_coef, data.spatial->adjacency, s);
    };
  }

  const PosteriorDraws draws = run_chains(runner, spec, a.chains, thread_count());
  save_draws(out / "draws", draws);
  io::write_basis(out / "phi.csv", phi);
  io::write_basis(out / "xi.csv", xi);
  if (data.spatial) {
    if (domain == DomainKind::continuous)
      io::write_locations(out / "training_locations.csv", data.ids, data.spatial->coords);
    else
      io::write_adjacency(out / "training_adjacency.csv", data.ids, data.spatial->adjacency);
  }
  {
    std::ofstream ids(out / "training_ids.csv");
    ids << "id\n";
    for (const auto& id : data.ids) ids << id << '\n';
  }

  // Residual diagnostics at the posterior mean.
  MatrixXd fitted = coef.x_coef * draws.psi_mean();
  if (draws.has_random_effect())
    fitted += model == ModelKind::psfofr ? MatrixXd(proj->P * draws.random_effect_mean())
                                         : draws.random_effect_mean();
  const MatrixXd resid_curves = data.response - phi.evaluate(fitted);
  json diag;
  diag["psi"] = block_json(draws.psi);
  if (draws.has_random_effect()) diag["random_effect"] = block_json(draws.random_effect);
  diag["tau2"] = chain_json(draws.tau2);
  if (draws.scale.size()) diag[draws.scale_name()] = chain_json(draws.scale);
  if (draws.rho.size()) {
    diag["rho"] = chain_json(draws.rho);
    diag["rho_acceptance"] = draws.acceptance_rate_rho;
  }
  if (data.spatial && data.spatial->kind == DomainKind::discrete) {
    const MoranResult mi = mean_morans_i(resid_curves, data.spatial->adjacency, 999, a.seed);
    diag["residual_morans_i"] = {{"statistic", mi.statistic}, {"p_value", mi.p_value}};
  } else if (data.spatial) {
    const EmpiricalVariogram emp = trace_variogram(resid_curves, phi.weights, data.spatial->coords);
    const VariogramModel vm = fit_variogram(emp, VariogramFamily::gaussian);
    MatrixXd table(emp.lags.size(), 4);
    for (Index i = 0; i < emp.lags.size(); ++i)
      table.row(i) << emp.lags[i], emp.gamma[i], emp.pair_counts[i], vm(emp.lags[i]);
    io::write_matrix(out / "residual_variogram.csv", table,
                     {"lag", "gamma", "n_pairs", "fitted_gamma"});
    diag["residual_variogram"] = {{"nugget", vm.nugget}, {"sill", vm.sill}, {"range", vm.range}};
  }

  log["model"] = to_string(model);
  log["domain"] = to_string(domain);
  log["basis"] = to_string(family);
  log["t_domain"] = {data.t_domain.lo, data.t_domain.hi};
  log["r_domain"] = {data.r_domain.lo, data.r_domain.hi};
  log["n"] = data.size();
  log["k_n"] = phi.size();
  log["g_n"] = xi.size();
  log["iters"] = a.iters;
  log["burnin"] = a.burnin;
  log["thin"] = a.thin;
  log["seed"] = a.seed;
  log["chains"] = a.chains;
  log["draws"] = draws.count();
  log["priors"] = priors_json(spec.priors);
  log["diagnostics"] = diag;
  write_json(out / "fit.json", log);
  std::cout << "stored " << draws.count() << " draws in " << (out / "draws").string() << '\n';
}

// ---------------------------------------------------------------- predict

struct FittedModel {
  json log;
  PosteriorDraws draws;
  BasisSystem phi;
  BasisSystem xi;
  std::vector<std::string> train_ids;
};

FittedModel load_fit(const fs::path& dir) {
  FittedModel f;
  f.log = read_json(dir / "fit.json");
  f.draws = load_draws(dir / "draws");
  try {
    const BasisFamily family = parse_basis_family(f.log.at("basis").get<std::string>());
    const auto t = f.log.at("t_domain"), r = f.log.at("r_domain");
    f.phi = io::read_basis(dir / "phi.csv", family, Interval{t[0], t[1]});
    f.xi = io::read_basis(dir / "xi.csv", family, Interval{r[0], r[1]});
  } catch (const json::exception& e) {
    fail(ErrorCode::schema_violation, (dir / "fit.json").string() + ": " + e.what());
  }
  std::ifstream ids(dir / "training_ids.csv");
  require(bool(ids), ErrorCode::missing_file, "fit directory lacks training_ids.csv");
  std::string line;
  std::getline(ids, line);
  while (std::getline(ids, line))
    if (!line.empty()) f.train_ids.push_back(line);
  return f;
}

struct PredictArgs {
  std::string fit;
  std::string data;
  std::string neighbours;
  std::vector<double> alpha{0.05};
  std::uint64_t seed = 7;
  bool keep_draws = false;
  std::string out = "predict";
  std::string config;
};

std::vector<std::vector<Index>> read_neighbours(const fs::path& path,
                                                const std::vector<std::string>& targets,
                                                const std::vector<std::string>& train) {
  std::map<std::string, Index> t_index, s_index;
  for (std::size_t i = 0; i < targets.size(); ++i) t_index[targets[i]] = Index(i);
  for (std::size_t i = 0; i < train.size(); ++i) s_index[train[i]] = Index(i);
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_file, "cannot open " + path.string());
  std::vector<std::vector<Index>> out(targets.size());
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    require(cells.size() == 2, ErrorCode::schema_violation,
            path.string() + ":" + std::to_string(lineno) + ": expected target,neighbour");
    const auto t = t_index.find(cells[0]);
    const auto s = s_index.find(cells[1]);
    require(t != t_index.end() && s != s_index.end(), ErrorCode::schema_violation,
            path.string() + ":" + std::to_string(lineno) + ": unknown site id");
    out[t->second].push_back(s->second);
  }
  return out;
}

void cmd_predict(PredictArgs& a) {
  const fs::path fit_dir = a.fit;
  const FittedModel f = load_fit(fit_dir);
  const CurveTable x = io::read_curves(fs::path(a.data) / "covariate.csv");
  require(x.grid.size() == f.xi.grid.size() && x.grid.isApprox(f.xi.grid, 1e-12),
          ErrorCode::dimension_mismatch, "target covariate grid does not match the fit");
  const MatrixXd x_star = f.xi.project(x.values);
  const PosteriorDraws& d = f.draws;
  const ModelKind model = d.spec.model;
  const bool point = d.spec.domain == DomainKind::continuous;

  std::vector<MatrixXd> eta;
  if (model == ModelKind::fofr) {
    eta = predictors_fixed(d, x_star);
  } else if (point) {
    const fs::path loc_path = fs::path(a.data) / "locations.csv";
    require(fs::exists(loc_path), ErrorCode::missing_spatial_metadata,
            "point-level prediction needs locations.csv for the targets");
    const Locations loc = io::read_locations(loc_path);
    require(loc.ids == x.ids, ErrorCode::schema_violation,
            "target locations do not match the covariate ids");
    if (model == ModelKind::psfofr) {
      ProjectionBasis proj;
      proj.mesh = read_mesh(fit_dir / "mesh");
      proj.M = io::read_matrix(fit_dir / "M.csv");
      eta = predictors_projection(d, x_star, project_new_points(proj, loc.coords, loc.ids));
    } else {
      const Locations train = io::read_locations(fit_dir / "training_locations.csv");
      eta = predictors_sfofr_continuous(d, x_star, train.coords, loc.coords, a.seed + 1);
    }
  } else {
    require(!a.neighbours.empty(), ErrorCode::missing_spatial_metadata,
            "areal prediction needs --neighbours (target,neighbour edge list)");
    const auto nb = read_neighbours(a.neighbours, x.ids, f.train_ids);
    if (model == ModelKind::psfofr) {
      const MatrixXd p = io::read_matrix(fit_dir / "P.csv");
      MatrixXd p_star = MatrixXd::Zero(x_star.rows(), p.cols());
      for (std::size_t i = 0; i < nb.size(); ++i) {
        require(!nb[i].empty(), ErrorCode::missing_spatial_metadata,
                "target " + x.ids[i] + " has no training neighbours");
        for (Index j : nb[i]) p_star.row(Index(i)) += p.row(j);
        p_star.row(Index(i)) /= double(nb[i].size());
      }
      eta = predictors_projection(d, x_star, p_star);
    } else {
      eta = predictors_sfofr_discrete(d, x_star, nb, a.seed + 1);
    }
  }

  const fs::path out = a.out;
  json summary;
  const fs::path response = fs::path(a.data) / "response.csv";
  std::optional<CurveTable> truth;
  if (fs::exists(response)) truth = io::read_curves(response);
  for (double alpha : a.alpha) {
    KrigingResult r = krige(eta, d.tau2, f.phi, alpha, a.seed, a.keep_draws);
    r.ids = x.ids;
    const std::string tag = io::format_number(alpha);
    write_kriging_csv(out / ("predictions_" + tag + ".csv"), r);
    io::write_curves(out / "predicted_mean.csv", r.t_grid, r.ids, r.mean);
    if (a.keep_draws) {
      std::vector<double> flat;
      for (const auto& m : r.predictive_draws)
        for (Index i = 0; i < m.rows(); ++i)
          for (Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
      io::write_binary(out / "predictive_draws.bin", flat);
      summary["predictive_draws_dims"] = {r.predictive_draws.size(), r.mean.rows(), r.mean.cols()};
    }
    json entry = {{"alpha", alpha}};
    if (truth) {
      require(truth->values.rows() == r.mean.rows() && truth->values.cols() == r.mean.cols(),
              ErrorCode::dimension_mismatch, "target response does not match the predictions");
      const PredictionScore s = score(r, truth->values);
      entry["mspe"] = s.mspe;
      entry["mean_coverage"] = s.mean_coverage;
    }
    summary["alphas"].push_back(entry);
  }
  summary["model"] = to_string(model);
  summary["targets"] = x_star.rows();
  write_json(out / "prediction.json", summary);
  std::cout << summary.dump(2) << '\n';
}

// ---------------------------------------------------------------- summarize

struct SummarizeArgs {
  std::string fit;
  std::vector<double> alpha{0.05};
  std::string truth;
  bool contour = false;
  std::string out = "summary";
  std::string config;
};

void cmd_summarize(SummarizeArgs& a) {
  const FittedModel f = load_fit(a.fit);
  std::vector<double> alphas = a.alpha;
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  SurfaceSummary s = summarize_surface(f.draws, f.xi, f.phi, alphas);
  std::optional<ContourRegion> contour;
  if (a.contour) contour = contour_avoiding(psi_surfaces(f.draws, f.xi, f.phi), alphas.front());

  const fs::path out = a.out;
  write_surface_csv(out / "surface.csv", s, contour ? &*contour : nullptr);
  json j;
  for (const auto& b : s.bands) {
    const double frac = double((b.significance.array() != 0).count()) / double(b.significance.size());
    j["bands"].push_back({{"alpha", b.alpha},
                          {"m_alpha", b.m_alpha},
                          {"significant_fraction", frac},
                          {"mean_width", (b.upper - b.lower).mean()}});
  }
  if (contour)
    j["contour"] = {{"alpha", alphas.front()},
                    {"significant_fraction",
                     double(contour->mask.sum()) / double(contour->mask.size())}};
  if (!a.truth.empty()) {
    const CurveTable t = io::read_curves(a.truth);
    j["mse"] = score_surface(s.mean, t.values);
  }
  j["model"] = f.log.value("model", "");
  j["draws"] = f.draws.count();
  if (f.log.contains("diagnostics")) j["diagnostics"] = f.log["diagnostics"];
  write_json(out / "summary.json", j);
  std::cout << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- baseline-uk

struct UkArgs {
  std::string data;
  std::string targets;
  std::string basis = "bspline";
  int g_basis = 15;
  int drift_terms = -1;
  std::string variogram = "gaussian";
  std::string out = "uk";
  std::string config;
};

void cmd_baseline_uk(UkArgs& a) {
  const FunctionalDataset train = io::load_dataset(a.data);
  const FunctionalDataset test = io::load_dataset(a.targets);
  require(train.spatial && train.spatial->kind == DomainKind::continuous && test.spatial &&
              test.spatial->kind == DomainKind::continuous,
          ErrorCode::missing_spatial_metadata, "universal kriging needs point locations");
  const BasisSystem xi = make_basis(parse_basis_family(a.basis), a.g_basis, train.r_grid,
                                    train.r_domain, train.covariate);
  const MatrixXd drift = make_drift(xi.project(train.covariate), a.drift_terms);
  const MatrixXd target_drift = make_drift(xi.project(test.covariate), a.drift_terms);
  UkConfig cfg;
  cfg.family = parse_variogram_family(a.variogram);
  const VectorXd w = trapezoid_weights(train.t_grid, train.t_domain);
  const UKSystem sys = uk_fit(train.response, w, drift, train.spatial->coords, cfg);
  for (const auto& warning : sys.empirical.warnings) std::cerr << "warning: " << warning << '\n';
  const MatrixXd pred = uk_predict(sys, train.response, test.spatial->coords, target_drift);

  const fs::path out = a.out;
  io::write_curves(out / "predicted_mean.csv", test.t_grid, test.ids, pred);
  MatrixXd table(sys.empirical.lags.size(), 4);
  for (Index i = 0; i < table.rows(); ++i)
    table.row(i) << sys.empirical.lags[i], sys.empirical.gamma[i], sys.empirical.pair_counts[i],
        sys.gamma_model(sys.empirical.lags[i]);
  io::write_matrix(out / "variogram.csv", table, {"lag", "gamma", "n_pairs", "fitted_gamma"});
  json j = {{"variogram",
             {{"family", to_string(sys.gamma_model.family)},
              {"nugget", sys.gamma_model.nugget},
              {"sill", sys.gamma_model.sill},
              {"range", sys.gamma_model.range}}},
            {"drift_terms", drift.cols()}};
  if (test.response.size()) j["mspe"] = mspe(pred, test.response);
  write_json(out / "uk.json", j);
  std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial function-on-function regression"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "generate a synthetic spatial functional dataset");
  s->add_option("--n", sim.cfg.n, "number of sites");
  s->add_option("--seed", sim.cfg.seed, "random seed");
  s->add_option("--k-basis", sim.cfg.k_basis, "response basis size");
  s->add_option("--g-basis", sim.cfg.g_basis, "covariate basis size");
  s->add_option("--tau2", sim.cfg.tau2, "measurement error variance (0 = noise free)");
  s->add_option("--sigma2", sim.cfg.sigma2, "Matern partial sill");
  s->add_option("--range", sim.cfg.rho, "Matern range");
  s->add_option("--psi", sim.psi, "true surface: gaussian or complex");
  s->add_option("--train-frac", sim.cfg.train_frac, "training fraction");
  s->add_flag("--no-spatial", sim.no_spatial, "drop the spatial random effect");
  s->add_option("--out", sim.out, "output directory");
  s->add_option("--config", sim.config, "JSON config file");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "run an MCMC sampler on a dataset directory");
  f->add_option("--data", fit.data, "dataset directory")->required();
  f->add_option("--model", fit.model, "fofr, sfofr or psfofr");
  f->add_option("--domain", fit.domain, "point or areal (default: from the data)");
  f->add_option("--basis", fit.basis, "bspline, fourier or fpc");
  f->add_option("--k-basis", fit.k_basis, "response basis size or 'auto' (GCV)");
  f->add_option("--g-basis", fit.g_basis, "covariate basis size or 'auto' (GCV)");
  f->add_option("--rank", fit.rank, "projection rank or 'auto' (90% of eigenvalue mass)");
  f->add_option("--max-edge", fit.max_edge, "mesh spacing");
  f->add_option("--margin", fit.margin, "mesh margin around the sites");
  f->add_option("--iters", fit.iters, "MCMC iterations");
  f->add_option("--burnin", fit.burnin, "burn-in iterations");
  f->add_option("--thin", fit.thin, "thinning interval");
  f->add_option("--seed", fit.seed, "random seed");
  f->add_option("--chains", fit.chains, "parallel chains");
  f->add_flag("--appendix-literal", fit.literal, "Gamma(1, rate) precision updates");
  f->add_option("--out", fit.out, "output directory");
  f->add_option("--config", fit.config, "JSON config file");

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "krige curves at new sites");
  p->add_option("--fit", pred.fit, "fit directory")->required();
  p->add_option("--data", pred.data, "target directory (covariate.csv, locations.csv)")->required();
  p->add_option("--neighbours", pred.neighbours, "areal targets: target,neighbour edge list");
  p->add_option("--alpha", pred.alpha, "band level (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  p->add_option("--seed", pred.seed, "random seed");
  p->add_flag("--keep-draws", pred.keep_draws, "store predictive draws");
  p->add_option("--out", pred.out, "output directory");
  p->add_option("--config", pred.config, "JSON config file");

  SummarizeArgs sum;
  auto* m = app.add_subcommand("summarize", "surface estimate, simultaneous bands and SimBaS");
  m->add_option("--fit", sum.fit, "fit directory")->required();
  m->add_option("--alpha", sum.alpha, "band level (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  m->add_option("--truth", sum.truth, "true surface CSV to score against");
  m->add_flag("--contour", sum.contour, "also compute the contour-avoiding region");
  m->add_option("--out", sum.out, "output directory");
  m->add_option("--config", sum.config, "JSON config file");

  UkArgs uk;
  auto* u = app.add_subcommand("baseline-uk", "trace-variogram universal kriging");
  u->add_option("--data", uk.data, "training dataset directory")->required();
  u->add_option("--targets", uk.targets, "target dataset directory")->required();
  u->add_option("--basis", uk.basis, "basis for the covariate drift coefficients");
  u->add_option("--g-basis", uk.g_basis, "number of covariate coefficients");
  u->add_option("--drift-terms", uk.drift_terms, "covariate drift terms (-1 all, 0 ordinary)");
  u->add_option("--variogram", uk.variogram, "gaussian or exponential");
  u->add_option("--out", uk.out, "output directory");
  u->add_option("--config", uk.config, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report("usage", 2, e.what());
  }

  try {
    if (*s) {
      apply_config(s, sim.config);
      cmd_simulate(sim);
    } else if (*f) {
      apply_config(f, fit.config);
      cmd_fit(fit);
    } else if (*p) {
      apply_config(p, pred.config);
      cmd_predict(pred);
    } else if (*m) {
      apply_config(m, sum.config);
      cmd_summarize(sum);
    } else if (*u) {
      apply_config(u, uk.config);
      cmd_baseline_uk(uk);
    }
  } catch (const Error& e) {
    return report(to_string(e.code()), exit_code(e.code()), e.what());
  } catch (const CLI::ParseError& e) {
    return report("usage", 2, e.what());
  } catch (const std::exception& e) {
    return report("internal", 1, e.what());
  }
  return 0;
}
