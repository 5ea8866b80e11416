#include "depstat/processes.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "depstat/common.hpp"

namespace depstat {

Innovation Innovation::gaussian(double sigma) {
  Innovation e;
  e.kind = Kind::gaussian;
  e.sigma = sigma;
  return e;
}

Innovation Innovation::student_t(double df) {
  Innovation e;
  e.kind = Kind::student_t;
  e.df = df;
  return e;
}

Innovation Innovation::uniform(double lo, double hi) {
  Innovation e;
  e.kind = Kind::uniform;
  e.lo = lo;
  e.hi = hi;
  return e;
}

void Innovation::validate() const {
  switch (kind) {
    case Kind::gaussian:
      if (!(sigma > 0)) throw ConfigError("innovation: sigma must be positive");
      break;
    case Kind::student_t:
      if (!(df > 0)) throw ConfigError("innovation: df must be positive");
      break;
    case Kind::uniform:
      if (!(hi > lo)) throw ConfigError("innovation: need lo < hi");
      break;
  }
}

double Innovation::draw(Rng& rng) const {
  switch (kind) {
    case Kind::gaussian:
      return std::normal_distribution<double>(0.0, sigma)(rng);
    case Kind::student_t:
      return std::student_t_distribution<double>(df)(rng);
    case Kind::uniform:
      return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  return 0.0;
}

double Innovation::variance() const {
  switch (kind) {
    case Kind::gaussian:
      return sigma * sigma;
    case Kind::student_t:
      return df > 2 ? df / (df - 2) : std::numeric_limits<double>::infinity();
    case Kind::uniform:
      return (hi - lo) * (hi - lo) / 12.0;
  }
  return 0.0;
}

bool AR1Config::exact_start() const {
  if (init == InitKind::automatic) return innovation.kind == Innovation::Kind::gaussian;
  return init == InitKind::exact_stationary;
}

void AR1Config::validate() const {
  if (coeffs.empty()) throw ConfigError("ar1: need at least one coefficient");
  for (double a : coeffs)
    if (!(std::abs(a) < 1.0)) throw ConfigError("ar1: coefficients must satisfy |alpha| < 1");
  innovation.validate();
  if (init == InitKind::exact_stationary && innovation.kind != Innovation::Kind::gaussian)
    throw ConfigError("ar1: exact_stationary start requires gaussian innovations");
  if (burn_in < 0) throw ConfigError("ar1: burn_in must be >= 0");
}

ProcessSample simulate_ar1(const AR1Config& config, int n, std::uint64_t seed) {
  require(n >= 1, "simulate_ar1: n must be >= 1");
  config.validate();
  const int d = config.dim();
  Rng rng(seed);
  Eigen::VectorXd x(d);
  int warm = 0;
  if (config.exact_start()) {
    for (int j = 0; j < d; ++j) {
      const double a = config.coeffs[j];
      x[j] = config.innovation.draw(rng) / std::sqrt(1.0 - a * a);
    }
  } else {
    x.setZero();
    warm = config.burn_in;
  }
  for (int i = 0; i < warm; ++i)
    for (int j = 0; j < d; ++j) x[j] = config.coeffs[j] * x[j] + config.innovation.draw(rng);
  ProcessSample out;
  out.config = config;
  out.seed = seed;
  out.data.resize(n, d);
  out.data.row(0) = x.transpose();
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < d; ++j)
      out.data(i, j) = config.coeffs[j] * out.data(i - 1, j) + config.innovation.draw(rng);
  return out;
}

void PairConfig::validate() const {
  ar.validate();
  if (ar.dim() != 2) throw ConfigError("pair: exactly two AR coefficients required");
  if (!(std::abs(innovation_corr) <= 1.0))
    throw ConfigError("pair: innovation correlation must lie in [-1, 1]");
}

ProcessSample simulate_pair(const PairConfig& config, int n, std::uint64_t seed) {
  require(n >= 1, "simulate_pair: n must be >= 1");
  config.validate();
  const double a1 = config.ar.coeffs[0], a2 = config.ar.coeffs[1];
  const double c = config.innovation_corr;
  const double c_perp = std::sqrt(std::max(0.0, 1.0 - c * c));
  const Innovation& law = config.ar.innovation;
  Rng rng(seed);
  auto step = [&](double& x1, double& x2) {
    const double e1 = law.draw(rng);
    const double xi = law.draw(rng);
    x1 = a1 * x1 + e1;
    x2 = a2 * x2 + c * e1 + c_perp * xi;
  };
  double x1 = 0.0, x2 = 0.0;
  if (config.ar.exact_start()) {
    // Stationary covariance: s^2/(1-a1^2), s^2/(1-a2^2), c s^2/(1-a1 a2).
    const double s2 = law.variance();
    const double v1 = s2 / (1.0 - a1 * a1);
    const double v2 = s2 / (1.0 - a2 * a2);
    const double cov = c * s2 / (1.0 - a1 * a2);
    const double z1 = std::normal_distribution<double>(0.0, 1.0)(rng);
    const double z2 = std::normal_distribution<double>(0.0, 1.0)(rng);
    x1 = std::sqrt(v1) * z1;
    x2 = cov / std::sqrt(v1) * z1 + std::sqrt(std::max(0.0, v2 - cov * cov / v1)) * z2;
  } else {
    for (int i = 0; i < config.ar.burn_in; ++i) step(x1, x2);
  }
  ProcessSample out;
  out.config = config.ar;
  out.seed = seed;
  out.data.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    if (i > 0) step(x1, x2);
    out.data(i, 0) = x1;
    out.data(i, 1) = x2;
  }
  return out;
}

std::vector<ProcessSample> simulate_bivariate_pairs(int p, const std::vector<PairConfig>& configs,
                                                    int n, std::uint64_t seed,
                                                    std::uint64_t replication) {
  require(p >= 1, "simulate_bivariate_pairs: p must be >= 1");
  require(configs.size() == 1 || static_cast<int>(configs.size()) == p,
          "simulate_bivariate_pairs: need one config or one per pair");
  std::vector<ProcessSample> out(static_cast<std::size_t>(p));
  for (int l = 0; l < p; ++l) {
    const auto& cfg = configs.size() == 1 ? configs[0] : configs[static_cast<std::size_t>(l)];
    out[static_cast<std::size_t>(l)] =
        simulate_pair(cfg, n, derive_seed(seed, static_cast<std::uint64_t>(l), replication));
  }
  return out;
}

PLRData simulate_plr(int n, const Eigen::VectorXd& beta_star, const PLRDesign& design,
                     std::uint64_t seed) {
  require(n >= 1, "simulate_plr: n must be >= 1");
  const int p = static_cast<int>(beta_star.size());
  require(p >= 1, "simulate_plr: beta_star must be nonempty");
  AR1Config xcfg = design.x;
  if (xcfg.dim() == 1) xcfg.coeffs.assign(static_cast<std::size_t>(p), xcfg.coeffs[0]);
  if (xcfg.dim() != p) throw ConfigError("simulate_plr: X design needs 1 or p coefficients");
  if (design.w.dim() != 1) throw ConfigError("simulate_plr: W design must be univariate");
  design.noise.validate();

  PLRData out;
  out.X = simulate_ar1(xcfg, n, derive_seed(seed, 0)).data;
  out.W = simulate_ar1(design.w, n, derive_seed(seed, 1)).data.col(0);
  out.Y = out.X * beta_star;
  Rng noise_rng(derive_seed(seed, 2));
  for (int i = 0; i < n; ++i) {
    if (design.g) out.Y[i] += design.g(out.W[i]);
    const double e = design.noise.draw(noise_rng);
    if (!design.zero_noise) out.Y[i] += e;
  }
  return out;
}

Eigen::VectorXd alternating_beta(int p, int s, double magnitude) {
  require(s >= 0 && s <= p, "alternating_beta: need 0 <= s <= p");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < s; ++k) b[k] = (k % 2 == 0) ? magnitude : -magnitude;
  return b;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const Eigen::MatrixXd& data, const std::vector<std::string>& columns) {
  require(static_cast<Eigen::Index>(columns.size()) == data.cols(), "write_csv: column count mismatch");
  for (std::size_t j = 0; j < columns.size(); ++j) os << (j ? "," : "") << columns[j];
  os << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) os << (j ? "," : "") << format_double(data(i, j));
    os << '\n';
  }
}

std::vector<std::string> default_columns(int d) {
  std::vector<std::string> cols;
  for (int j = 0; j < d; ++j) cols.push_back("c" + std::to_string(j));
  return cols;
}

}  // namespace depstat
