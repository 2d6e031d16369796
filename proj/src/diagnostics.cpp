#include "sfofr/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "sfofr/error.hpp"

namespace sfofr {

namespace {

bool is_constant(const VectorXd& x) {
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  return x.maxCoeff() - x.minCoeff() <= 1e-14 * scale;
}

}  // namespace

double mcse(const VectorXd& chain) {
  const Index u = chain.size();
  require(u >= 100, ErrorCode::invalid_argument,
          "batch-means MCSE needs at least 100 draws (got " + std::to_string(u) + ")");
  if (is_constant(chain)) return 0.0;
  const Index b = Index(std::floor(std::sqrt(double(u))));
  const Index a = u / b;
  const Index used = a * b;
  const double mean = chain.head(used).mean();
  double ss = 0.0;
  for (Index j = 0; j < a; ++j) {
    const double d = chain.segment(j * b, b).mean() - mean;
    ss += d * d;
  }
  const double sigma2 = double(b) * ss / double(a - 1);
  return std::sqrt(sigma2 / double(used));
}

double ess(const VectorXd& chain) {
  const Index u = chain.size();
  require(u >= 4, ErrorCode::invalid_argument, "ESS needs at least 4 draws");
  if (is_constant(chain)) return double(u);
  const VectorXd c = chain.array() - chain.mean();
  auto autocov = [&](Index lag) {
    return c.head(u - lag).dot(c.tail(u - lag)) / double(u);
  };
  const double g0 = autocov(0);
  double sum = 0.0;
  for (Index m = 0; 2 * m + 1 < u; ++m) {
    const double pair = autocov(2 * m) + autocov(2 * m + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double asym_var = -g0 + 2.0 * sum;
  if (asym_var <= 0.0) return double(u);
  return double(u) * g0 / asym_var;
}

BlockDiagnostics block_diagnostics(const std::vector<MatrixXd>& draws) {
  require(!draws.empty(), ErrorCode::invalid_argument, "no draws");
  const Index u = Index(draws.size()), r = draws[0].rows(), c = draws[0].cols();
  std::vector<double> values;
  values.reserve(std::size_t(r * c));
  BlockDiagnostics out;
  VectorXd chain(u);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) {
      for (Index d = 0; d < u; ++d) chain[d] = draws[d](i, j);
      values.push_back(ess(chain));
      if (u >= 100) out.mcse_max = std::max(out.mcse_max, mcse(chain));
    }
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  out.ess_median = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
  out.ess_min = values.front();
  double total = 0.0;
  for (double v : values) total += v;
  out.ess_mean = total / double(m);
  return out;
}

}  // namespace sfofr
