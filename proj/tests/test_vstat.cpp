#include <doctest.h>

#include <cmath>
#include <random>

#include "depstat/bounds.hpp"
#include "depstat/expansion.hpp"
#include "depstat/vstat.hpp"

using namespace depstat;

namespace {

int sgn(double x) { return (x > 0) - (x < 0); }

double brute_kendall(const Eigen::MatrixXd& s) {
  const auto n = s.rows();
  if (n < 2) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) acc += sgn(s(i, 0) - s(j, 0)) * sgn(s(i, 1) - s(j, 1));
  return acc / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double brute_spearman(const Eigen::MatrixXd& s) {
  const auto n = s.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) acc += sgn(s(i, 0) - s(j, 0)) * sgn(s(i, 1) - s(k, 1));
  return acc / std::pow(static_cast<double>(n), 3);
}

KernelSpec scalar_kernel(std::string id, std::function<double(double, double)> f) {
  KernelSpec k;
  k.id = std::move(id);
  k.order = 2;
  k.dim = 1;
  k.eval = [f](PointSpan a) { return f(a[0][0], a[1][0]); };
  k.tags.insert(Tag::symmetric);
  return k;
}

IidSampler standard_normal(int d) {
  return [d](Rng& rng, Eigen::VectorXd& out) {
    std::normal_distribution<double> z;
    out.resize(d);
    for (int l = 0; l < d; ++l) out[l] = z(rng);
  };
}

IidSampler uniform_box(int d, double a) {
  return [d, a](Rng& rng, Eigen::VectorXd& out) {
    std::uniform_real_distribution<double> u(-a, a);
    out.resize(d);
    for (int l = 0; l < d; ++l) out[l] = u(rng);
  };
}

// Integer grid data, so ties are frequent.
Eigen::MatrixXd tied_sample(Rng& rng, int n, int levels) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  Eigen::MatrixXd s(n, 2);
  for (int i = 0; i < n; ++i) {
    s(i, 0) = u(rng);
    s(i, 1) = u(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("V-statistic examples") {
  KernelSpec c = scalar_kernel("const", [](double, double) { return 2.5; });
  Eigen::MatrixXd s = Eigen::MatrixXd::Random(17, 1);
  CHECK(v_statistic(c, s) == doctest::Approx(2.5).epsilon(1e-15));

  Eigen::MatrixXd inc(10, 2);
  for (int i = 0; i < 10; ++i) inc.row(i) << i, 2.0 * i;
  auto kendall = catalog_entry("kendall", 2).kernel;
  CHECK(v_statistic(kendall, inc) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(u_statistic(kendall, inc) == 1.0);
  CHECK(kendall_tau_fast(inc) == 1.0);
  inc.col(1) *= -1.0;
  CHECK(u_statistic(kendall, inc) == -1.0);
  CHECK(kendall_tau_fast(inc) == -1.0);

  KernelSpec quartic;
  quartic.order = 4;
  quartic.eval = [](PointSpan) { return 0.0; };
  CHECK_THROWS_AS(v_statistic(quartic, s), UnsupportedError);
}

TEST_CASE("V/U identity for m = 2") {
  Rng rng(1);
  auto f = scalar_kernel("poly", [](double x, double y) { return x * y + std::cos(x - y); });
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 5 + rep;
    Eigen::MatrixXd s(n, 1);
    std::normal_distribution<double> z;
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      s(i, 0) = z(rng);
      diag += s(i, 0) * s(i, 0) + 1.0;
    }
    // n^2 V = n(n-1) U + sum_i f(x_i, x_i)
    CHECK(n * n * v_statistic(f, s) == doctest::Approx(n * (n - 1) * u_statistic(f, s) + diag).epsilon(1e-12));
  }
}

TEST_CASE("Kendall fast path equals brute force with ties") {
  Rng rng(2);
  std::uniform_int_distribution<int> size(2, 500);
  std::uniform_int_distribution<int> lv(2, 40);
  for (int rep = 0; rep < 1000; ++rep) {
    int n = rep < 20 ? rep + 2 : size(rng);
    auto s = tied_sample(rng, n, lv(rng));
    CAPTURE(n);
    REQUIRE(kendall_tau_fast(s) == brute_kendall(s));
  }
  Eigen::MatrixXd t(3, 2);
  t << 1, 1, 1, 2, 2, 3;
  CHECK(kendall_tau_fast(t) == doctest::Approx(2.0 / 3.0));
  CHECK(kendall_score(t.col(0), t.col(1)) == 2);
  CHECK_THROWS(kendall_tau_fast(Eigen::MatrixXd(1, 2)));
}

TEST_CASE("Spearman fast path equals the triple sum") {
  Rng rng(3);
  for (int n = 1; n <= 60; ++n) {
    auto s = tied_sample(rng, n, 1 + n / 3);
    CAPTURE(n);
    CHECK(spearman_rho(s) == doctest::Approx(brute_spearman(s)).epsilon(1e-14));
  }
  Eigen::MatrixXd one(1, 2);
  one << 0.3, 0.4;
  CHECK(spearman_rho(one) == 0.0);
  Eigen::MatrixXd conc(5, 2);
  for (int i = 0; i < 5; ++i) conc.row(i) << i, i;
  CHECK(spearman_rho(conc) == doctest::Approx(brute_spearman(conc)));
  auto sp = catalog_entry("spearman", 2).kernel;
  CHECK(v_statistic(sp, conc) == doctest::Approx(spearman_rho(conc)).epsilon(1e-14));
}

TEST_CASE("Hoeffding components of simple kernels") {
  Rng rng(4);
  auto prod = scalar_kernel("xy", [](double x, double y) { return x * y; });
  HoeffdingComponents hp(prod, standard_normal(1), 20000, rng);
  CHECK(std::abs(hp.theta().value) <= 3.0 * hp.theta().se + 1e-12);
  for (double x : {-1.5, 0.3, 2.0}) {
    std::vector<Eigen::VectorXd> a{Eigen::VectorXd::Constant(1, x)};
    auto f1 = hp.f(a, rng);
    CHECK(std::abs(f1.value) <= 3.0 * f1.se);
  }

  auto add = scalar_kernel("sum", [](double x, double y) { return x + y; });
  HoeffdingComponents ha(add, standard_normal(1), 20000, rng);
  for (double x : {-1.0, 0.5}) {
    std::vector<Eigen::VectorXd> a{Eigen::VectorXd::Constant(1, x)};
    auto g1 = ha.g(a, rng);
    CHECK(std::abs(g1.value - x) <= 3.0 * g1.se + 1e-12);
    std::vector<Eigen::VectorXd> b{Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, 0.7)};
    auto f2 = ha.f(b, rng);
    CHECK(std::abs(f2.value) <= 3.0 * f2.se + 1e-9);
  }
}

TEST_CASE("Kendall projection under independence") {
  Rng rng(5);
  auto kendall = catalog_entry("kendall", 2).kernel;
  HoeffdingComponents hc(kendall, standard_normal(2), 20000, rng);
  std::normal_distribution<double> z;
  for (int k = 0; k < 10; ++k) {
    Eigen::Vector2d x(z(rng), z(rng));
    std::vector<Eigen::VectorXd> a{x};
    auto f1 = hc.f(a, rng);
    const double expect = (2.0 * normal_cdf(x[0]) - 1.0) * (2.0 * normal_cdf(x[1]) - 1.0);
    CHECK(std::abs(f1.value - expect) <= 3.0 * f1.se + 1e-3);
  }
}

TEST_CASE("Hoeffding reconstruction and centering for catalog kernels") {
  Rng rng(6);
  for (const char* id : {"gaussian", "laplacian", "cauchy", "hat", "cosine"}) {
    CAPTURE(id);
    auto k = catalog_entry(id, 1).kernel;
    HoeffdingComponents hc(k, standard_normal(1), 20000, rng);
    std::normal_distribution<double> z;
    int misses = 0;
    for (int p = 0; p < 20; ++p) {
      Eigen::VectorXd x = Eigen::VectorXd::Constant(1, z(rng));
      Eigen::VectorXd y = Eigen::VectorXd::Constant(1, z(rng));
      std::vector<Eigen::VectorXd> xs{x}, ys{y}, xy{x, y};
      auto fx = hc.f(xs, rng), fy = hc.f(ys, rng), fxy = hc.f(xy, rng);
      const double lhs = k.eval(xy) - hc.theta().value;
      const double se = std::sqrt(fx.se * fx.se + fy.se * fy.se + fxy.se * fxy.se + hc.theta().se * hc.theta().se);
      misses += std::abs(lhs - (fx.value + fy.value + fxy.value)) > 3.0 * se + 1e-12;
    }
    // 20 checks at 3 SE; a single excursion is within chance.
    CHECK(misses <= 1);

    // E f_2(x, X~) = 0.
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.4);
    double s = 0.0, s2 = 0.0;
    const int draws = 400;
    for (int i = 0; i < draws; ++i) {
      std::vector<Eigen::VectorXd> xy{x, Eigen::VectorXd::Constant(1, z(rng))};
      double v = hc.f(xy, rng).value;
      s += v;
      s2 += v * v;
    }
    const double mean = s / draws;
    CHECK(std::abs(mean) <= 3.0 * std::sqrt((s2 / draws - mean * mean) / draws) + 1e-3);
  }
}

TEST_CASE("degeneracy levels") {
  Rng rng(7);
  auto prod = scalar_kernel("xy", [](double x, double y) { return x * y; });
  auto r1 = degeneracy_level(prod, standard_normal(1), 0.1, 20000, rng);
  CHECK(r1.level == 1);
  CHECK_FALSE(r1.inconclusive);

  auto add = scalar_kernel("sum", [](double x, double y) { return x + y; });
  CHECK(degeneracy_level(add, standard_normal(1), 0.05, 20000, rng).level == 0);

  auto kendall = catalog_entry("kendall", 2).kernel;
  CHECK(degeneracy_level(kendall, standard_normal(2), 0.05, 20000, rng).level == 0);

  // A tiny budget cannot resolve a tight tolerance.
  auto r = degeneracy_level(prod, standard_normal(1), 0.01, 100, rng);
  CHECK(r.inconclusive);
}

TEST_CASE("long-run variance") {
  Rng rng(8);
  auto iid = [](int n, Rng& r) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd out(n, 1);
    for (int i = 0; i < n; ++i) out(i, 0) = z(r);
    return out;
  };
  auto f1 = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  auto nu = nu_squared(f1, iid, 20, 200000, rng);
  CHECK(std::abs(nu.value - 2.0) <= 3.0 * nu.se);

  // Kendall f1 on independent AR(1) pairs.
  auto kendall_f1 = [](const Eigen::VectorXd& x) {
    return (2.0 * normal_cdf(x[0]) - 1.0) * (2.0 * normal_cdf(x[1]) - 1.0);
  };
  auto ar_pair = [](double rho) {
    return [rho](int n, Rng& r) {
      std::normal_distribution<double> z;
      Eigen::MatrixXd out(n, 2);
      const double s = std::sqrt(1.0 - rho * rho);
      out(0, 0) = z(r);
      out(0, 1) = z(r);
      for (int i = 1; i < n; ++i) {
        out(i, 0) = rho * out(i - 1, 0) + s * z(r);
        out(i, 1) = rho * out(i - 1, 1) + s * z(r);
      }
      return out;
    };
  };
  auto nu0 = nu_squared(kendall_f1, ar_pair(0.0), 10, 200000, rng);
  CHECK(std::abs(nu0.value - 1.0 / 9.0) <= 3.0 * nu0.se);
  // 1/9 + 2 sum_k (4/pi^2) asin(rho^k/2)^2 with rho = 0.5.
  auto nu5 = nu_squared(kendall_f1, ar_pair(0.5), 30, 400000, rng);
  CHECK(std::abs(nu5.value - 0.179821582275708) <= 3.0 * nu5.se);
}

TEST_CASE("bias constants") {
  Rng rng(9);
  auto g = catalog_entry("gaussian", 1).kernel;
  auto e = rff_expand_pd(g, 3.0, 0.1, 500, 1);
  auto compact = bias_constants(g, e, uniform_box(1, 1.0), e.domain, 5000, rng);
  for (double v : compact.v) CHECK(v == 0.0);
  for (double s : compact.s) CHECK(s <= 1.0);
  CHECK(compact.t_prime == doctest::Approx(compact.C_const * e.target_t));

  ApproxDomain narrow = e.domain;
  narrow.halfwidth = 2.0;
  const int budget = 40000;
  auto bc = bias_constants(g, e, standard_normal(1), narrow, budget, rng);
  const double one = 2.0 * normal_sf(2.0);
  const double p_out = 1.0 - (1.0 - one) * (1.0 - one);
  CHECK(std::abs(bc.v[0] * bc.v[0] - p_out) <= 3.0 * std::sqrt(p_out * (1 - p_out) / budget));
  for (double v : bc.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(bc.t_prime >= bc.C_const * e.target_t);
  CHECK(bc.best_effort);
}

TEST_CASE("residual probability") {
  auto a = residual_probability(100, 1, 2, {1e-6});
  CHECK(a.value == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK_FALSE(a.vacuous);
  auto b = residual_probability(100, 1, 2, {0.0}, 2, 1e-4, 1.0);
  CHECK(b.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.vacuous);
  CHECK(residual_probability(100, 1, 2, {0.0}).value == 0.0);
}
