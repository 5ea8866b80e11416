#include <doctest.h>

#include <cmath>

#include "depstat/bounds.hpp"
#include "depstat/indep_test.hpp"
#include "depstat/vstat.hpp"

using namespace depstat;

namespace {

std::vector<PairStat> stats_with(std::vector<double> u_tilde) {
  std::vector<PairStat> out;
  for (std::size_t l = 0; l < u_tilde.size(); ++l) {
    PairStat s;
    s.pair_id = static_cast<int>(l);
    s.sigma2 = 1.0;
    s.u_tilde = u_tilde[l];
    out.push_back(s);
  }
  return out;
}

std::vector<Eigen::MatrixXd> null_pairs(int p, int n, std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> out;
  for (auto& s : simulate_bivariate_pairs(p, {PairConfig{}}, n, seed)) out.push_back(s.data);
  return out;
}

}  // namespace

TEST_CASE("closed-form long-run variance") {
  CHECK(sigma2_kendall_ar1(0.0, 0.0).value == 1.0 / 9.0);
  for (double r : {-0.9, 0.3, 0.7}) CHECK(sigma2_kendall_ar1(0.0, r).value == 1.0 / 9.0);
  // Truncating at summands below 1e-12 costs at most ~1e-12.
  CHECK(sigma2_kendall_ar1(0.5, 0.5).value == doctest::Approx(0.179821582275708).epsilon(1e-11));
  CHECK(sigma2_kendall_ar1(0.3, 0.5).value == doctest::Approx(0.147327786125830).epsilon(1e-11));
  Sigma2Options short_sum;
  short_sum.lag_cap = 1;
  const double one_lag = 1.0 / 9.0 + 8.0 / (kPi * kPi) * std::asin(0.25) * std::asin(0.25);
  CHECK(sigma2_kendall_ar1(0.5, 0.5, short_sum).value == doctest::Approx(one_lag).epsilon(1e-15));
  CHECK(sigma2_kendall_ar1(0.5, 0.5).lags_used < 100);
  CHECK_THROWS_AS(sigma2_kendall_ar1(1.0, 0.5), ArgumentError);
}

TEST_CASE("closed form agrees with the Monte Carlo oracle") {
  Sigma2Options mc;
  mc.method = Sigma2Method::monte_carlo;
  mc.mc_budget = 400000;
  for (double r1 : {0.0, 0.3, -0.3, 0.7, -0.7})
    for (double r2 : {0.3, -0.7}) {
      CAPTURE(r1);
      CAPTURE(r2);
      mc.seed = derive_seed(11, static_cast<std::uint64_t>(10 * (r1 + 1)), static_cast<std::uint64_t>(10 * (r2 + 1)));
      auto est = sigma2_kendall_ar1(r1, r2, mc);
      CHECK(std::abs(est.value - sigma2_kendall_ar1(r1, r2).value) <= 3.0 * est.se);
    }
  mc.mc_budget = 2000;
  mc.lag_cap = 5;
  CHECK_THROWS_AS(sigma2_kendall_ar1(0.9, 0.9, mc), NumericalError);
}

TEST_CASE("plug-in estimate") {
  PairConfig pc;
  auto s = simulate_pair(pc, 50000, 2);
  auto est = sigma2_kendall_plug_in(s.data);
  CHECK(est.lags_used == static_cast<int>(std::ceil(std::cbrt(50000.0))));
  CHECK(est.value == doctest::Approx(sigma2_kendall_ar1(0.3, 0.5).value).epsilon(0.1));
  CHECK_THROWS(sigma2_kendall_plug_in(Eigen::MatrixXd(10, 3)));
}

TEST_CASE("pair statistics") {
  const int n = 400;
  Eigen::MatrixXd same(n, 2);
  for (int i = 0; i < n; ++i) same(i, 0) = same(i, 1) = std::sin(0.37 * i);
  auto st = pair_statistics({same}, {0.2}, {0.0});
  CHECK(st[0].u_stat == 1.0);
  CHECK(st[0].u_tilde == doctest::Approx(std::sqrt(double(n)) / (2.0 * std::sqrt(0.2))).epsilon(1e-14));
  CHECK(pair_statistics({same}, {0.2}, {1.0})[0].u_tilde == 0.0);
  CHECK_THROWS_AS(pair_statistics({same}, {0.0}, {0.0}), ArgumentError);

  auto samples = null_pairs(10, 300, 4);
  std::vector<double> s2(10, 0.15), th(10, 0.0);
  for (const auto& p : pair_statistics(samples, s2, th)) {
    CHECK(p.u_tilde == doctest::Approx(std::sqrt(300.0) * (p.u_stat - p.theta) / (2.0 * std::sqrt(p.sigma2))).epsilon(1e-12));
    CHECK(p.u_stat == kendall_tau_fast(samples[static_cast<std::size_t>(p.pair_id)]));
  }
}

TEST_CASE("max test decisions") {
  auto zero = max_test(stats_with(std::vector<double>(50, 0.0)), 0.05);
  CHECK(zero.statistic == doctest::Approx(-2.0 * std::log(50.0) + std::log(std::log(50.0))));
  CHECK_FALSE(zero.reject);

  std::vector<double> u(50, 0.0);
  u[17] = -10.0;
  auto one = max_test(stats_with(u), 0.05);
  CHECK(one.S_n == 10.0);
  CHECK(one.statistic == doctest::Approx(100.0 - 2.0 * std::log(50.0) + std::log(std::log(50.0))));
  CHECK(one.statistic == doctest::Approx(93.54).epsilon(1e-3));
  CHECK(one.reject);
  CHECK(one.q_alpha == gumbel_quantile(0.05));
  CHECK_THROWS_AS(max_test(stats_with({1.0}), 0.05), ArgumentError);

  // reject is a function of the reported fields.
  for (double a : {1.0, 2.5, 3.0, 3.3, 4.0}) {
    auto r = max_test(stats_with({a, -0.5, 0.1}), 0.05);
    CHECK(r.reject == (r.statistic >= r.q_alpha));
  }
}

TEST_CASE("rank invariance") {
  auto samples = null_pairs(6, 500, 21);
  samples[2].col(0) *= 1.5;
  auto warped = samples;
  for (auto& s : warped) {
    s.col(0) = s.col(0).array().exp();
    s.col(1) = s.col(1).array().cube() + 3.0 * s.col(1).array();
  }
  std::vector<double> s2(6, 0.147), th(6, 0.0);
  auto a = max_test(pair_statistics(samples, s2, th), 0.05);
  auto b = max_test(pair_statistics(warped, s2, th), 0.05);
  CHECK(a.statistic == b.statistic);
  CHECK(a.reject == b.reject);
  for (std::size_t l = 0; l < 6; ++l) CHECK(a.per_pair[l].u_stat == b.per_pair[l].u_stat);
}

TEST_CASE("MDP probe basics") {
  auto kendall = catalog_entry("kendall", 2).kernel;
  PairConfig pc;
  SeededPath path = [pc](int n, std::uint64_t seed) { return simulate_pair(pc, n, seed).data; };
  const double nu = std::sqrt(sigma2_kendall_ar1(0.3, 0.5).value);
  auto rows = mdp_ratio_probe(kendall, path, nu, {0.0, 1.0}, 4000, 300, 5);
  REQUIRE(rows.size() == 2);
  CHECK(std::abs(rows[0].tail - 0.5) <= 3.0 * rows[0].tail_se + 0.02);
  CHECK(rows[1].normal_tail == doctest::Approx(normal_sf(1.0)));
  CHECK(rows[1].ratio == doctest::Approx(rows[1].tail / rows[1].normal_tail));
  auto again = mdp_ratio_probe(kendall, path, nu, {0.0, 1.0}, 4000, 300, 5);
  CHECK(again[1].tail == rows[1].tail);
}

TEST_CASE("Wilson interval") {
  auto p = wilson_interval(50, 1000);
  CHECK(p.value == 0.05);
  CHECK(p.lo == doctest::Approx(0.03813026239274882).epsilon(1e-12));
  CHECK(p.hi == doctest::Approx(0.06531382024425081).epsilon(1e-12));
  CHECK(wilson_interval(0, 200).lo == doctest::Approx(0.0).scale(1.0));
  CHECK(wilson_interval(0, 200).hi == doctest::Approx(0.018845326377266575).epsilon(1e-12));
  CHECK(wilson_interval(200, 200).hi == 1.0);
  CHECK_THROWS(wilson_interval(3, 2));
}

TEST_CASE("size-power replications are stream stable") {
  SizePowerConfig cfg;
  cfg.p = 4;
  cfg.n = 100;
  cfg.reps = 400;
  cfg.seed = 3;
  auto full = size_power_study(cfg);
  cfg.reps = 200;
  auto half = size_power_study(cfg);
  for (std::size_t r = 0; r < 200; ++r) {
    CHECK(half.null_decisions[r] == full.null_decisions[r]);
    CHECK(half.alt_statistics[r] == full.alt_statistics[r]);
  }
  CHECK(full.power.value > 0.9);
  cfg.reps = 100;
  CHECK_THROWS_AS(size_power_study(cfg), ArgumentError);
}

TEST_CASE("normalized statistic is approximately standard under the null") {
  const int n = 2000, reps = 5000;
  PairConfig pc;
  const double s2 = sigma2_kendall_ar1(0.3, 0.5).value;
  std::vector<double> u(reps);
  parallel_for(reps, [&](std::size_t r) {
    auto s = simulate_pair(pc, n, derive_seed(77, r));
    u[r] = pair_statistics({s.data}, {s2}, {0.0})[0].u_tilde;
  });
  double mean = 0.0, var = 0.0;
  for (double v : u) mean += v / reps;
  for (double v : u) var += (v - mean) * (v - mean) / (reps - 1);
  CHECK(std::abs(mean) <= 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}
