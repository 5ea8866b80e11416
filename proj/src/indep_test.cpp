#include "depstat/indep_test.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "depstat/bounds.hpp"
#include "depstat/common.hpp"
#include "depstat/vstat.hpp"

namespace depstat {

namespace {

constexpr double kSummandFloor = 1e-12;

// Lags needed before |rho1 rho2|^k falls below the summand floor.
int lag_limit(double rho1, double rho2, int lag_cap) {
  const double r = std::abs(rho1 * rho2);
  if (r == 0.0) return 0;
  const double k = std::ceil(std::log(kSummandFloor) / std::log(r));
  return static_cast<int>(std::min<double>(k, lag_cap));
}

// a_t = 2 Phi(X_t / sd) - 1 along a stationary Gaussian AR(1) path.
Eigen::VectorXd uniformized_ar1(double rho, int len, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double sd = 1.0 / std::sqrt(1.0 - rho * rho);
  Eigen::VectorXd a(len);
  double x = sd * z(rng);
  for (int t = 0; t < len; ++t) {
    if (t > 0) x = rho * x + z(rng);
    a[t] = std::erf(x / (sd * std::sqrt(2.0)));
  }
  return a;
}

double lag_product(const Eigen::VectorXd& a, int k) {
  const Eigen::Index L = a.size() - k;
  return a.head(L).dot(a.tail(L)) / static_cast<double>(L);
}

// Mid-rank empirical CDF mapped to 2F - 1, then centered.
Eigen::VectorXd centered_ranks(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  Eigen::VectorXd out(n);
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start;
    while (end + 1 < n && v[order[end + 1]] == v[order[start]]) ++end;
    const double mid = 0.5 * static_cast<double>(start + end) + 1.0;
    for (Eigen::Index k = start; k <= end; ++k) out[order[k]] = 2.0 * mid / n - 1.0;
    start = end + 1;
  }
  out.array() -= out.mean();
  return out;
}

}  // namespace

std::string to_string(Sigma2Method m) {
  switch (m) {
    case Sigma2Method::closed_form_gaussian:
      return "closed_form_gaussian";
    case Sigma2Method::monte_carlo:
      return "monte_carlo";
    case Sigma2Method::plug_in:
      return "plug_in";
    case Sigma2Method::user:
      return "user";
  }
  return "unknown";
}

Sigma2Value sigma2_kendall_ar1(double rho1, double rho2, const Sigma2Options& opts) {
  require(std::abs(rho1) < 1.0 && std::abs(rho2) < 1.0, "sigma2_kendall_ar1: need |rho| < 1");
  require(opts.lag_cap >= 1, "sigma2_kendall_ar1: lag_cap must be >= 1");
  Sigma2Value out;
  if (opts.method == Sigma2Method::closed_form_gaussian) {
    // 4 E F(X_0) F(X_k) - 1 = (2/pi) asin(rho^k / 2) for a Gaussian pair.
    NeumaierSum sum;
    sum.add(1.0 / 9.0);
    double r1 = 1.0, r2 = 1.0;
    for (int k = 1; k <= opts.lag_cap; ++k) {
      r1 *= rho1;
      r2 *= rho2;
      const double term = 2.0 * 4.0 / (kPi * kPi) * std::asin(r1 / 2.0) * std::asin(r2 / 2.0);
      out.lags_used = k;
      if (std::abs(term) < kSummandFloor) break;
      sum.add(term);
    }
    out.value = sum.value();
    return out;
  }
  if (opts.method != Sigma2Method::monte_carlo)
    throw ArgumentError("sigma2_kendall_ar1: method must be closed_form_gaussian or monte_carlo");

  constexpr int kBatches = 20;
  const int K = lag_limit(rho1, rho2, opts.lag_cap);
  const int len = opts.mc_budget / kBatches;
  require(len > 10 * (K + 1), "sigma2_kendall_ar1: mc_budget too small for the lag range");
  std::vector<double> est(kBatches);
  parallel_for(kBatches, [&](std::size_t b) {
    Rng r1(derive_seed(opts.seed, b, 0)), r2(derive_seed(opts.seed, b, 1));
    Eigen::VectorXd a = uniformized_ar1(rho1, len, r1);
    Eigen::VectorXd c = uniformized_ar1(rho2, len, r2);
    double s = lag_product(a, 0) * lag_product(c, 0);
    for (int k = 1; k <= K; ++k) s += 2.0 * lag_product(a, k) * lag_product(c, k);
    est[b] = s;
  });
  double mean = std::accumulate(est.begin(), est.end(), 0.0) / kBatches;
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean);
  var /= (kBatches - 1);
  out.value = mean;
  out.se = std::sqrt(var / kBatches);
  out.lags_used = K;
  if (!(out.se <= 0.05 * std::abs(out.value)))
    throw NumericalError("sigma2_kendall_ar1: Monte Carlo SE exceeds 5% of the estimate");
  return out;
}

Sigma2Value sigma2_kendall_plug_in(const Eigen::MatrixXd& pair_sample, int lags) {
  require(pair_sample.cols() == 2, "sigma2_kendall_plug_in: sample must be n x 2");
  const Eigen::Index n = pair_sample.rows();
  require(n >= 4, "sigma2_kendall_plug_in: need n >= 4");
  if (lags <= 0) lags = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));
  lags = std::min<int>(lags, static_cast<int>(n) - 2);
  Eigen::VectorXd a = centered_ranks(pair_sample.col(0));
  Eigen::VectorXd b = centered_ranks(pair_sample.col(1));
  auto gamma = [&](const Eigen::VectorXd& v, int k) {
    return v.head(n - k).dot(v.tail(n - k)) / static_cast<double>(n);
  };
  Sigma2Value out;
  out.value = gamma(a, 0) * gamma(b, 0);
  for (int k = 1; k <= lags; ++k) out.value += 2.0 * gamma(a, k) * gamma(b, k);
  out.lags_used = lags;
  if (!(out.value > 0)) throw NumericalError("sigma2_kendall_plug_in: nonpositive estimate");
  return out;
}

std::vector<PairStat> pair_statistics(const std::vector<Eigen::MatrixXd>& samples,
                                      const std::vector<double>& sigma2,
                                      const std::vector<double>& theta, Sigma2Method method) {
  require(!samples.empty(), "pair_statistics: no pairs");
  require(sigma2.size() == samples.size() && theta.size() == samples.size(),
          "pair_statistics: sigma2/theta must have one entry per pair");
  const Eigen::Index n = samples.front().rows();
  for (const auto& s : samples) require(s.rows() == n, "pair_statistics: unequal sample sizes");
  for (double s : sigma2) require(s > 0, "pair_statistics: sigma2 must be positive");
  std::vector<PairStat> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t l) {
    PairStat& ps = out[l];
    ps.pair_id = static_cast<int>(l);
    ps.u_stat = kendall_tau_fast(samples[l]);
    ps.theta = theta[l];
    ps.sigma2 = sigma2[l];
    ps.sigma2_method = method;
    ps.u_tilde = std::sqrt(static_cast<double>(n)) * (ps.u_stat - ps.theta) / (2.0 * std::sqrt(ps.sigma2));
  });
  return out;
}

TestResult max_test(const std::vector<PairStat>& stats, double alpha) {
  require(stats.size() >= 2, "max_test: need p >= 2 pairs");
  TestResult r;
  r.p_count = static_cast<int>(stats.size());
  r.alpha = alpha;
  r.q_alpha = gumbel_quantile(alpha);
  for (const auto& s : stats) r.S_n = std::max(r.S_n, std::abs(s.u_tilde));
  const double p = r.p_count;
  r.statistic = r.S_n * r.S_n - 2.0 * std::log(p) + std::log(std::log(p));
  r.reject = r.statistic >= r.q_alpha;
  r.per_pair = stats;
  return r;
}

std::vector<MdpProbeRow> mdp_ratio_probe(const KernelSpec& kernel, const SeededPath& process,
                                         double nu, const std::vector<double>& x_grid, int reps,
                                         int n, std::uint64_t seed, bool u_variant, double theta) {
  require(nu > 0, "mdp_ratio_probe: nu must be positive");
  require(reps >= 1 && n >= kernel.order, "mdp_ratio_probe: need reps >= 1 and n >= m");
  const bool fast_kendall = u_variant && kernel.id == "kendall";
  const double scale = std::sqrt(static_cast<double>(n)) / (kernel.order * nu);
  std::vector<double> T(static_cast<std::size_t>(reps));
  parallel_for(T.size(), [&](std::size_t r) {
    Eigen::MatrixXd path = process(n, derive_seed(seed, r));
    double s = fast_kendall ? kendall_tau_fast(path)
               : u_variant  ? u_statistic(kernel, path)
                            : v_statistic(kernel, path);
    T[r] = scale * (s - theta);
  });
  std::vector<MdpProbeRow> rows;
  for (double x : x_grid) {
    MdpProbeRow row;
    row.x = x;
    const auto hits = std::count_if(T.begin(), T.end(), [&](double v) { return v >= x; });
    row.tail = static_cast<double>(hits) / reps;
    row.tail_se = std::sqrt(row.tail * (1.0 - row.tail) / reps);
    row.normal_tail = normal_sf(x);
    row.ratio = row.tail / row.normal_tail;
    rows.push_back(row);
  }
  return rows;
}

Proportion wilson_interval(int successes, int trials) {
  require(trials >= 1 && successes >= 0 && successes <= trials, "wilson_interval: bad counts");
  constexpr double z = 1.959963984540054;
  const double nn = trials;
  const double ph = successes / nn;
  const double den = 1.0 + z * z / nn;
  const double centre = (ph + z * z / (2.0 * nn)) / den;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z * z / (4.0 * nn * nn)) / den;
  return {ph, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

SizePowerResult size_power_study(const SizePowerConfig& cfg) {
  require(cfg.p >= 2, "size_power_study: p must be >= 2");
  require(cfg.reps >= 200 && cfg.n >= 2, "size_power_study: need reps >= 200 and n >= 2");
  cfg.base.validate();
  if (cfg.base.ar.innovation.kind != Innovation::Kind::gaussian)
    throw ConfigError("size_power_study: sigma2 closed form needs gaussian innovations");

  SizePowerResult res;
  res.sigma2 = sigma2_kendall_ar1(cfg.base.ar.coeffs[0], cfg.base.ar.coeffs[1]).value;
  PairConfig null_cfg = cfg.base;
  null_cfg.innovation_corr = 0.0;
  PairConfig alt_cfg = cfg.base;
  alt_cfg.innovation_corr = cfg.alt_correlation;
  const std::uint64_t null_seed = derive_seed(cfg.seed, 0);
  const std::uint64_t alt_seed = derive_seed(cfg.seed, 1);

  const auto reps = static_cast<std::size_t>(cfg.reps);
  res.null_decisions.assign(reps, 0);
  res.alt_decisions.assign(reps, 0);
  res.null_statistics.assign(reps, 0.0);
  res.alt_statistics.assign(reps, 0.0);
  auto run = [&](const PairConfig& pc, std::uint64_t s, std::size_t r, char& decision, double& stat) {
    auto pairs = simulate_bivariate_pairs(cfg.p, {pc}, cfg.n, s, r);
    std::vector<PairStat> stats(pairs.size());
    const double root_n = std::sqrt(static_cast<double>(cfg.n));
    for (std::size_t l = 0; l < pairs.size(); ++l) {
      stats[l].pair_id = static_cast<int>(l);
      stats[l].u_stat = kendall_tau_fast(pairs[l].data);
      stats[l].sigma2 = res.sigma2;
      stats[l].sigma2_method = Sigma2Method::closed_form_gaussian;
      stats[l].u_tilde = root_n * stats[l].u_stat / (2.0 * std::sqrt(res.sigma2));
    }
    TestResult t = max_test(stats, cfg.alpha);
    decision = t.reject ? 1 : 0;
    stat = t.statistic;
  };
  parallel_for(reps, [&](std::size_t r) {
    run(null_cfg, null_seed, r, res.null_decisions[r], res.null_statistics[r]);
    run(alt_cfg, alt_seed, r, res.alt_decisions[r], res.alt_statistics[r]);
  });
  const int null_hits = static_cast<int>(std::count(res.null_decisions.begin(), res.null_decisions.end(), 1));
  const int alt_hits = static_cast<int>(std::count(res.alt_decisions.begin(), res.alt_decisions.end(), 1));
  res.size = wilson_interval(null_hits, cfg.reps);
  res.power = wilson_interval(alt_hits, cfg.reps);
  return res;
}

}  // namespace depstat
