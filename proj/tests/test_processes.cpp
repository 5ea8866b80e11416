#include <doctest.h>

#include <cmath>
#include <sstream>

#include "depstat/indep_test.hpp"
#include "depstat/processes.hpp"
#include "depstat/vstat.hpp"

using namespace depstat;

namespace {

double sample_var(const Eigen::VectorXd& x) {
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST_CASE("alpha = 0 reproduces the innovation stream") {
  auto cfg = ar1_config({0.0}, Innovation::uniform(-2.0, 3.0));
  auto s = simulate_ar1(cfg, 500, 17);
  REQUIRE(s.data.rows() == 500);
  // The same stream drawn directly.
  Rng rng(17);
  std::vector<double> direct;
  for (int i = 0; i < 2000; ++i) direct.push_back(cfg.innovation.draw(rng));
  // With alpha = 0 the first kept value is the last burn-in draw.
  const int offset = cfg.burn_in - 1;
  REQUIRE_FALSE(cfg.exact_start());
  int matched = 0;
  for (int i = 0; i < 500; ++i) matched += s.data(i, 0) == direct[static_cast<std::size_t>(offset + i)];
  CHECK(matched == 500);
  CHECK(s.data.minCoeff() >= -2.0);
  CHECK(s.data.maxCoeff() <= 3.0);
}

TEST_CASE("stationary variance and autocorrelation") {
  auto s = simulate_ar1(ar1_config({0.5}), 100000, 3);
  Eigen::VectorXd x = s.data.col(0);
  const double v = sample_var(x);
  // Asymptotic variance of the AR(1) sample variance: 2 s^4 (1 + a^2) / (1 - a^2) / n.
  const double se = std::sqrt(2.0 * (4.0 / 3.0) * (4.0 / 3.0) * (1.25 / 0.75) / 100000.0);
  CHECK(std::abs(v - 4.0 / 3.0) <= 3.0 * se);
  const double m = x.mean();
  double c1 = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) c1 += (x[i] - m) * (x[i - 1] - m);
  c1 /= static_cast<double>(x.size() - 1);
  CHECK(c1 / v == doctest::Approx(0.5).epsilon(0.03));

  auto t = simulate_ar1(ar1_config({0.5}, Innovation::student_t(5.0)), 100000, 4);
  CHECK(sample_var(t.data.col(0)) == doctest::Approx((5.0 / 3.0) / 0.75).epsilon(0.08));
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(simulate_ar1(ar1_config({1.0}), 10, 0), ConfigError);
  CHECK_THROWS_AS(simulate_ar1(ar1_config({-1.2}), 10, 0), ConfigError);
  auto c = ar1_config({0.5}, Innovation::student_t(5.0));
  c.init = InitKind::exact_stationary;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(Innovation::uniform(1.0, 1.0).validate(), ConfigError);
  CHECK(std::isinf(Innovation::student_t(2.0).variance()));
}

TEST_CASE("bit-exact reproducibility") {
  auto cfg = ar1_config({0.3, -0.7}, Innovation::gaussian(2.0));
  auto a = simulate_ar1(cfg, 300, 99);
  auto b = simulate_ar1(cfg, 300, 99);
  CHECK(a.data == b.data);
  CHECK_FALSE(simulate_ar1(cfg, 300, 100).data == a.data);

  PairConfig pc;
  auto p1 = simulate_bivariate_pairs(5, {pc}, 200, 7, 3);
  auto p2 = simulate_bivariate_pairs(8, {pc}, 200, 7, 3);
  // Pair l's stream depends on l only, not on how many pairs are drawn.
  for (int l = 0; l < 5; ++l) CHECK(p1[static_cast<std::size_t>(l)].data == p2[static_cast<std::size_t>(l)].data);
  CHECK(p1[0].data == simulate_pair(pc, 200, derive_seed(7, 0, 3)).data);
  CHECK_FALSE(p1[0].data == p1[1].data);

  std::ostringstream o1, o2;
  write_csv(o1, a.data, default_columns(2));
  write_csv(o2, b.data, default_columns(2));
  CHECK(o1.str() == o2.str());
  CHECK(o1.str().substr(0, 6) == "c0,c1\n");
}

TEST_CASE("pairs under the null and with perfect correlation") {
  PairConfig pc;
  const int n = 2000;
  const double sigma2 = sigma2_kendall_ar1(0.3, 0.5).value;
  const double sd = std::sqrt(4.0 * sigma2 / n);
  int outside = 0;
  for (int r = 0; r < 20; ++r) {
    auto s = simulate_pair(pc, n, derive_seed(5, r));
    outside += std::abs(kendall_tau_fast(s.data)) > 3.0 * sd;
  }
  CHECK(outside <= 1);

  PairConfig same;
  same.ar = ar1_config({0.4, 0.4});
  same.innovation_corr = 1.0;
  auto s = simulate_pair(same, 500, 1);
  CHECK((s.data.col(0) - s.data.col(1)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(kendall_tau_fast(s.data) == 1.0);
}

TEST_CASE("partially linear data") {
  const int n = 400, p = 6;
  Eigen::VectorXd beta = alternating_beta(p, 3);
  CHECK(beta.head(3) == Eigen::Vector3d(2, -2, 2));
  CHECK(beta.tail(3).isZero());

  PLRDesign quiet;
  quiet.zero_noise = true;
  quiet.g = [](double) { return 0.0; };
  auto d = simulate_plr(n, beta, quiet, 8);
  CHECK((d.Y - d.X * beta).cwiseAbs().maxCoeff() == 0.0);

  PLRDesign noise_only;
  noise_only.g = [](double) { return 0.0; };
  auto e = simulate_plr(n, Eigen::VectorXd::Zero(p), noise_only, 8);
  // Stream 2 is the noise.
  Rng rng(derive_seed(8, 2));
  int same = 0;
  for (int i = 0; i < n; ++i) same += e.Y[i] == noise_only.noise.draw(rng);
  CHECK(same == n);
  // X and W are shared between the two designs with the same seed.
  CHECK(e.X == d.X);
  CHECK(e.W == d.W);

  // The noise is independent of the design.
  PLRDesign std_design;
  auto big = simulate_plr(20000, beta, std_design, 9);
  Eigen::VectorXd eps = big.Y - big.X * beta - big.W.unaryExpr([](double w) { return 2.0 * std::sin(w); });
  for (int j = 0; j < p; ++j) {
    const double c = (eps.array() * (big.X.col(j).array() - big.X.col(j).mean())).mean();
    // Var(eps X) = 4/3 per term; the AR dependence in X inflates it by (1 + a)/(1 - a) at most.
    CHECK(std::abs(c) <= 4.0 * std::sqrt(4.0 / 3.0 * 3.0 / 20000.0));
  }
}

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
}
