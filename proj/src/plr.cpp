#include "depstat/plr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depstat {

namespace {

double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

double pair_count(Eigen::Index n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

void check_data(const PLRData& data) {
  require(data.X.rows() == data.Y.size() && data.W.size() == data.Y.size(),
          "plr: Y, X, W must have the same number of rows");
  require(data.Y.size() >= 2, "plr: need n >= 2");
  require(data.X.cols() >= 1, "plr: need p >= 1");
}

double objective(const QuadraticForm& q, const Eigen::VectorXd& beta, double lambda) {
  return q.quadratic(beta) + lambda * beta.lpNorm<1>();
}

std::vector<int> support(const Eigen::VectorXd& beta) {
  std::vector<int> s;
  for (Eigen::Index k = 0; k < beta.size(); ++k)
    if (beta[k] != 0.0) s.push_back(static_cast<int>(k));
  return s;
}

void note_objective(PLRFit& fit, double value) {
  if (!fit.objective_trace.empty()) {
    const double prev = fit.objective_trace.back();
    if (value > prev + 1e-12 * std::max(1.0, std::abs(prev))) fit.monotone = false;
  }
  fit.objective_trace.push_back(value);
}

PLRFit coordinate_descent(const QuadraticForm& q, const PLRConfig& cfg) {
  const int p = q.dim();
  PLRFit fit;
  fit.optimizer = Optimizer::coordinate_descent;
  fit.beta_hat = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd Tb = Eigen::VectorXd::Zero(p);  // T beta
  note_objective(fit, objective(q, fit.beta_hat, cfg.lambda));
  for (int it = 1; it <= cfg.max_iter; ++it) {
    for (int k = 0; k < p; ++k) {
      const double tkk = q.T(k, k);
      const double old = fit.beta_hat[k];
      double next = 0.0;
      if (tkk > 0) next = soft_threshold(q.b[k] - (Tb[k] - tkk * old), 0.5 * cfg.lambda) / tkk;
      if (next != old) {
        Tb.noalias() += (next - old) * q.T.col(k);
        fit.beta_hat[k] = next;
      }
    }
    fit.iterations = it;
    note_objective(fit, objective(q, fit.beta_hat, cfg.lambda));
    // Periodic refresh keeps the running product from drifting.
    if (it % 50 == 0) Tb.noalias() = q.T * fit.beta_hat;
    fit.kkt_violation = kkt_violation(q, fit.beta_hat, cfg.lambda);
    if (fit.kkt_violation <= cfg.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

PLRFit proximal_gradient(const QuadraticForm& q, const PLRConfig& cfg) {
  const int p = q.dim();
  PLRFit fit;
  fit.optimizer = Optimizer::proximal_gradient;
  fit.beta_hat = Eigen::VectorXd::Zero(p);
  // Power iteration for the largest eigenvalue of T; the gradient 2(T b - b)
  // is then 2 lambda_max-Lipschitz.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p) / std::sqrt(static_cast<double>(p));
  double top = 0.0;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd w = q.apply(v);
    top = w.norm();
    if (top == 0.0) break;
    v = w / top;
  }
  double step = top > 0 ? 1.0 / (2.0 * top) : 1.0;
  note_objective(fit, objective(q, fit.beta_hat, cfg.lambda));
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Eigen::VectorXd grad = 2.0 * (q.apply(fit.beta_hat) - q.b);
    Eigen::VectorXd next;
    // The loss is quadratic, so f(next) - f(cur) - grad'diff = diff' T diff
    // exactly; testing that term avoids cancellation near the optimum.
    for (int bt = 0; bt < 60; ++bt) {
      next = (fit.beta_hat - step * grad).unaryExpr([&](double z) { return soft_threshold(z, step * cfg.lambda); });
      const Eigen::VectorXd diff = next - fit.beta_hat;
      if (diff.dot(q.apply(diff)) <= diff.squaredNorm() / (2.0 * step)) break;
      step *= 0.5;
    }
    fit.beta_hat = next;
    fit.iterations = it;
    note_objective(fit, objective(q, fit.beta_hat, cfg.lambda));
    fit.kkt_violation = kkt_violation(q, fit.beta_hat, cfg.lambda);
    if (fit.kkt_violation <= cfg.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace

void DensityKernel::validate() const {
  if (!fn) throw ConfigError("density kernel: missing function");
  // Trapezoid rule on [-50, 50]; adequate for kernels with light tails.
  constexpr int kCells = 200000;
  constexpr double kHalf = 50.0;
  const double dz = 2.0 * kHalf / kCells;
  double mass = 0.0;
  for (int i = 0; i <= kCells; ++i) {
    const double z = -kHalf + i * dz;
    const double v = fn(z);
    if (!(v >= 0.0)) throw ConfigError("density kernel '" + id + "' is negative or NaN");
    mass += (i == 0 || i == kCells ? 0.5 : 1.0) * v * dz;
  }
  if (std::abs(mass - 1.0) > 1e-6) throw ConfigError("density kernel '" + id + "' does not integrate to 1");
}

void PLRConfig::validate() const {
  kernel.validate();
  if (!(h >= 1e-8)) throw ConfigError("plr: bandwidth h must be >= 1e-8");
  if (!(lambda >= 0)) throw ConfigError("plr: lambda must be >= 0");
  if (!(tol > 0)) throw ConfigError("plr: tol must be positive");
  if (max_iter < 1) throw ConfigError("plr: max_iter must be >= 1");
}

Eigen::MatrixXd pair_laplacian(const Eigen::VectorXd& W, double h, const DensityKernel& K) {
  require(h > 0, "pair_laplacian: h must be positive");
  const Eigen::Index n = W.size();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    double deg = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = K.fn((W[i] - W[j]) / h) / h;
      L(i, j) = -w;
      deg += w;
    }
    L(i, i) = deg;
  });
  return L;
}

Eigen::VectorXd QuadraticForm::apply(const Eigen::VectorXd& v) const {
  if (materialized) return T * v;
  return X.transpose() * (LX * v);
}

double QuadraticForm::quadratic(const Eigen::VectorXd& beta) const {
  return beta.dot(apply(beta)) - 2.0 * b.dot(beta) + c;
}

QuadraticForm precompute_quadratic(const PLRData& data, double h, const DensityKernel& K,
                                   int materialize_limit) {
  check_data(data);
  const Eigen::MatrixXd L = pair_laplacian(data.W, h, K) / pair_count(data.Y.size());
  QuadraticForm q;
  const Eigen::MatrixXd LX = L * data.X;
  const Eigen::VectorXd Ly = L * data.Y;
  q.b = data.X.transpose() * Ly;
  q.c = data.Y.dot(Ly);
  q.diag = (data.X.array() * LX.array()).colwise().sum().transpose();
  q.materialized = data.X.cols() <= materialize_limit;
  if (q.materialized) {
    q.T = data.X.transpose() * LX;
    q.T = 0.5 * (q.T + q.T.transpose()).eval();
  } else {
    q.LX = LX;
    q.X = data.X;
  }
  return q;
}

double plr_objective(const Eigen::VectorXd& beta, const PLRData& data, double h, double lambda,
                     const DensityKernel& K) {
  check_data(data);
  require(h > 0, "plr_objective: h must be positive");
  require(beta.size() == data.X.cols(), "plr_objective: beta has wrong length");
  const Eigen::Index n = data.Y.size();
  const Eigen::VectorXd fitted = data.X * beta;
  NeumaierSum sum;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = K.fn((data.W[i] - data.W[j]) / h) / h;
      const double r = (data.Y[i] - data.Y[j]) - (fitted[i] - fitted[j]);
      sum.add(w * r * r);
    }
  return sum.value() / pair_count(n) + lambda * beta.lpNorm<1>();
}

double kkt_violation(const QuadraticForm& q, const Eigen::VectorXd& beta, double lambda) {
  const Eigen::VectorXd g = 2.0 * (q.apply(beta) - q.b);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    const double v = beta[k] == 0.0 ? std::max(0.0, std::abs(g[k]) - lambda)
                                    : std::abs(g[k] + lambda * (beta[k] > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

PLRFit fit_quadratic(const QuadraticForm& q, const PLRConfig& config) {
  if (!(config.lambda >= 0) || !(config.tol > 0) || config.max_iter < 1)
    throw ConfigError("plr: invalid optimizer settings");
  Optimizer opt = config.optimizer;
  if (opt == Optimizer::automatic)
    opt = q.materialized ? Optimizer::coordinate_descent : Optimizer::proximal_gradient;
  if (opt == Optimizer::coordinate_descent && !q.materialized)
    throw ConfigError("plr: coordinate descent needs a materialized T");
  PLRFit fit = opt == Optimizer::coordinate_descent ? coordinate_descent(q, config)
                                                    : proximal_gradient(q, config);
  fit.active_set = support(fit.beta_hat);
  return fit;
}

PLRFit fit_plr(const PLRData& data, const PLRConfig& config) {
  config.validate();
  const int limit = config.optimizer == Optimizer::proximal_gradient ? 0 : kMaterializeLimit;
  return fit_quadratic(precompute_quadratic(data, config.h, config.kernel, limit), config);
}

Tuning default_tuning(int n, int p, double c_h, double c_lambda, double C2) {
  require(n >= 2 && p >= 2, "default_tuning: need n >= 2 and p >= 2");
  require(c_h > 0 && c_lambda > 0 && C2 > 0, "default_tuning: constants must be positive");
  const double base = std::sqrt(std::log(static_cast<double>(p)) / n);
  Tuning t;
  t.h = std::clamp(c_h * base, std::min(base, C2), C2);
  t.lambda = c_lambda * (t.h + base);
  return t;
}

std::vector<RateRow> rate_experiment(const RateConfig& cfg) {
  require(!cfg.ns.empty() && std::is_sorted(cfg.ns.begin(), cfg.ns.end()),
          "rate_experiment: ns must be nonempty and increasing");
  require(cfg.reps >= 20, "rate_experiment: reps must be >= 20");
  require(cfg.s >= 0 && cfg.s <= cfg.p, "rate_experiment: need 0 <= s <= p");
  const Eigen::VectorXd beta_star = alternating_beta(cfg.p, cfg.s);
  std::vector<RateRow> rows;
  for (std::size_t ni = 0; ni < cfg.ns.size(); ++ni) {
    const int n = cfg.ns[ni];
    const Tuning tune = default_tuning(n, cfg.p, cfg.c_h, cfg.c_lambda);
    PLRConfig pc;
    pc.h = tune.h;
    pc.lambda = tune.lambda;
    pc.tol = 1e-8;
    pc.kernel.validate();
    std::vector<double> err(static_cast<std::size_t>(cfg.reps));
    std::vector<char> ok(err.size());
    parallel_for(err.size(), [&](std::size_t r) {
      PLRData data = simulate_plr(n, beta_star, cfg.design, derive_seed(cfg.seed, ni, r));
      PLRFit fit = fit_quadratic(precompute_quadratic(data, pc.h, pc.kernel), pc);
      err[r] = (fit.beta_hat - beta_star).squaredNorm();
      ok[r] = fit.converged;
    });
    RateRow row;
    row.n = n;
    double mean = 0.0, sq = 0.0;
    for (double e : err) mean += e;
    mean /= cfg.reps;
    for (double e : err) sq += (e - mean) * (e - mean);
    row.mse = mean;
    row.mse_se = cfg.reps > 1 ? std::sqrt(sq / (cfg.reps - 1) / cfg.reps) : 0.0;
    row.rate_proxy = cfg.s * std::log(static_cast<double>(cfg.p)) / n;
    row.converged = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace depstat
