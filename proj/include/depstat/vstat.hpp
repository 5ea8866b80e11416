#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "depstat/expansion.hpp"
#include "depstat/kernel.hpp"

namespace depstat {

// Draws one point of R^d into `out` (already sized d).
using IidSampler = std::function<void(Rng&, Eigen::VectorXd& out)>;
// Simulates an n x d path.
using PathSampler = std::function<Eigen::MatrixXd(int n, Rng&)>;

// Rows of `sample` are observations.
double v_statistic(const KernelSpec& spec, const Eigen::MatrixXd& sample);
double u_statistic(const KernelSpec& spec, const Eigen::MatrixXd& sample);

// C - D over all unordered pairs, sign(0) = 0.
std::int64_t kendall_score(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y);
// U-statistic of sign(x1-y1) sign(x2-y2); equals u_statistic(kendall).
double kendall_tau_fast(const Eigen::MatrixXd& sample);
// sum_i a_i b_i with a_i = sum_j sign(x_i1 - x_j1), b_i likewise.
std::int64_t spearman_score(const Eigen::MatrixXd& sample);
// n^-3 sum_{i,j,k} sign(x_i1 - x_j1) sign(x_i2 - x_k2).
double spearman_rho(const Eigen::MatrixXd& sample);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct ProjectionEstimate {
  Estimate g;  // g_p(x) = E f(x, X~...) - theta
  Estimate f;  // Hoeffding component f_p(x)
};

// Monte Carlo Hoeffding decomposition of a symmetric kernel with m <= 3.
class HoeffdingComponents {
 public:
  HoeffdingComponents(KernelSpec spec, IidSampler sampler, int mc_budget, Rng& rng);

  int order() const { return spec_.order; }
  int mc_budget() const { return budget_; }
  const Estimate& theta() const { return theta_; }

  // p = xs.size() in [1, m].
  Estimate g(PointSpan xs, Rng& rng) const;
  Estimate f(PointSpan xs, Rng& rng) const;
  const KernelSpec& kernel() const { return spec_; }
  void draw(Rng& rng, Eigen::VectorXd& out) const { sampler_(rng, out); }

 private:
  KernelSpec spec_;
  IidSampler sampler_;
  int budget_;
  Estimate theta_;
};

std::vector<ProjectionEstimate> hoeffding_project(const HoeffdingComponents& hc,
                                                  const std::vector<std::vector<Eigen::VectorXd>>& points,
                                                  Rng& rng);

struct DegeneracyResult {
  int level = 0;              // r - 1
  bool inconclusive = false;  // noise band too wide to decide at `level + 1`
  std::vector<double> max_abs_g;
  std::vector<double> max_se;
};

// Probes g_p at `probes` sampled points for p = 1..m-1. A probe signals when
// |g_p| > tol; the decision is inconclusive when 3 SE > tol.
DegeneracyResult degeneracy_level(const KernelSpec& spec, const IidSampler& sampler, double tol,
                                  int mc_budget, Rng& rng, int probes = 20);

struct NuSquared {
  double value = 0.0;
  double se = 0.0;
  bool clamped = false;
};

// nu^2 = Var f1(X_1) + 2 sum_{k=1}^{lag_cap} Cov(f1(X_1), f1(X_{1+k})),
// averaged over `batches` independent paths of total length mc_budget.
NuSquared nu_squared(const std::function<double(const Eigen::VectorXd&)>& f1,
                     const PathSampler& process, int lag_cap, int mc_budget, Rng& rng,
                     int batches = 20);

struct BiasConstants {
  std::vector<double> s;
  std::vector<double> v;
  double t_prime = 0.0;
  double C_const = 1.0;
  bool best_effort = true;  // suprema over C_p are maxima over finite anchors
};

BiasConstants bias_constants(const KernelSpec& spec, const ExpandedKernel& expanded,
                             const IidSampler& sampler, const ApproxDomain& domain,
                             int mc_budget, Rng& rng, double C_const = 1.0, int anchors = 50);

struct ResidualProbability {
  double value = 0.0;
  bool vacuous = false;  // value >= 1
};

// n sum_l P(|X_l| >= M) + n^2 (sum_l J_l) M2 D.
ResidualProbability residual_probability(int n, int r, int m, const std::vector<double>& tails,
                                         int total_jumps = 0, double M2 = 0.0, double D = 0.0);

}  // namespace depstat
