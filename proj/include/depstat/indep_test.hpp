#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "depstat/kernel.hpp"
#include "depstat/processes.hpp"

namespace depstat {

enum class Sigma2Method { closed_form_gaussian, monte_carlo, plug_in, user };

std::string to_string(Sigma2Method m);

struct Sigma2Options {
  Sigma2Method method = Sigma2Method::closed_form_gaussian;
  int lag_cap = 10000;
  int mc_budget = 1000000;  // total path length for monte_carlo
  std::uint64_t seed = 0;
};

struct Sigma2Value {
  double value = 0.0;
  double se = 0.0;  // zero for the closed form
  int lags_used = 0;
};

// Long-run variance of (2F1(X1)-1)(2F2(X2)-1) for two independent stationary
// Gaussian AR(1) coordinates with coefficients rho1, rho2:
// 1/9 + 2 sum_{k>=1} c1(k) c2(k), c_j(k) = 4 E F(X_0) F(X_k) - 1.
// The series stops once a summand drops below 1e-12 or at lag_cap.
Sigma2Value sigma2_kendall_ar1(double rho1, double rho2, const Sigma2Options& opts = {});

// Data-driven estimate: empirical CDFs in place of the marginals and lag
// truncation at `lags` (0 means ceil(n^{1/3})). Approximate.
Sigma2Value sigma2_kendall_plug_in(const Eigen::MatrixXd& pair_sample, int lags = 0);

struct PairStat {
  int pair_id = 0;
  double u_stat = 0.0;
  double theta = 0.0;
  double sigma2 = 0.0;
  double u_tilde = 0.0;  // sqrt(n) (u_stat - theta) / (2 sqrt(sigma2))
  Sigma2Method sigma2_method = Sigma2Method::user;
};

std::vector<PairStat> pair_statistics(const std::vector<Eigen::MatrixXd>& samples,
                                      const std::vector<double>& sigma2,
                                      const std::vector<double>& theta,
                                      Sigma2Method method = Sigma2Method::user);

struct TestResult {
  double S_n = 0.0;
  int p_count = 0;
  double alpha = 0.05;
  double q_alpha = 0.0;
  double statistic = 0.0;  // S_n^2 - 2 log p + log log p
  bool reject = false;
  std::vector<PairStat> per_pair;
};

TestResult max_test(const std::vector<PairStat>& stats, double alpha);

// Paths of length n keyed by a replication seed.
using SeededPath = std::function<Eigen::MatrixXd(int n, std::uint64_t seed)>;

struct MdpProbeRow {
  double x = 0.0;
  double tail = 0.0;  // fraction of replications with T >= x
  double tail_se = 0.0;
  double normal_tail = 0.0;
  double ratio = 0.0;
};

// T = sqrt(n) (S_n - theta) / (m nu), S_n the U-statistic (or V-statistic).
// Kendall kernels use the O(n log n) evaluator.
std::vector<MdpProbeRow> mdp_ratio_probe(const KernelSpec& kernel, const SeededPath& process,
                                         double nu, const std::vector<double>& x_grid, int reps,
                                         int n, std::uint64_t seed, bool u_variant = true,
                                         double theta = 0.0);

struct Proportion {
  double value = 0.0;
  double lo = 0.0;  // Wilson 95% interval
  double hi = 0.0;
};

Proportion wilson_interval(int successes, int trials);

struct SizePowerConfig {
  int p = 50;
  int n = 1000;
  int reps = 1000;
  double alpha = 0.05;
  double alt_correlation = 0.9;
  PairConfig base{};  // AR coefficients and innovations shared by every pair
  std::uint64_t seed = 0;
};

struct SizePowerResult {
  Proportion size;
  Proportion power;
  double sigma2 = 0.0;
  std::vector<char> null_decisions;
  std::vector<char> alt_decisions;
  std::vector<double> null_statistics;
  std::vector<double> alt_statistics;
};

SizePowerResult size_power_study(const SizePowerConfig& config);

}  // namespace depstat
