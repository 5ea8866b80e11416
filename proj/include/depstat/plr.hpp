#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "depstat/common.hpp"
#include "depstat/processes.hpp"

namespace depstat {

struct DensityKernel {
  std::string id = "gaussian";
  std::function<double(double)> fn = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); };

  // Nonnegativity on a grid and unit mass by quadrature; throws ConfigError.
  void validate() const;
};

enum class Optimizer { automatic, coordinate_descent, proximal_gradient };

struct PLRConfig {
  DensityKernel kernel;
  double h = 0.1;
  double lambda = 0.1;
  Optimizer optimizer = Optimizer::automatic;  // coordinate descent when T is materialized
  double tol = 1e-8;                           // KKT residual
  int max_iter = 100000;

  void validate() const;
};

// Pairwise weights w_ij = (1/h) K((W_i - W_j)/h) arranged as a graph
// Laplacian so that sum_{i<j} w_ij (a_i - a_j)(b_i - b_j) = a' L b.
Eigen::MatrixXd pair_laplacian(const Eigen::VectorXd& W, double h, const DensityKernel& K);

// Quadratic part of the objective: beta' T beta - 2 b' beta + c.
struct QuadraticForm {
  bool materialized = true;
  Eigen::MatrixXd T;    // p x p when materialized
  Eigen::MatrixXd LX;   // n x p, L X / N (operator mode)
  Eigen::MatrixXd X;    // operator mode only
  Eigen::VectorXd diag;
  Eigen::VectorXd b;
  double c = 0.0;

  int dim() const { return static_cast<int>(b.size()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;  // T v
  double quadratic(const Eigen::VectorXd& beta) const;
};

constexpr int kMaterializeLimit = 500;

QuadraticForm precompute_quadratic(const PLRData& data, double h, const DensityKernel& K = {},
                                   int materialize_limit = kMaterializeLimit);

// Direct pairwise evaluation, O(n^2 p).
double plr_objective(const Eigen::VectorXd& beta, const PLRData& data, double h, double lambda,
                     const DensityKernel& K = {});

double kkt_violation(const QuadraticForm& q, const Eigen::VectorXd& beta, double lambda);

struct PLRFit {
  Eigen::VectorXd beta_hat;
  std::vector<double> objective_trace;
  int iterations = 0;
  std::vector<int> active_set;
  double kkt_violation = 0.0;
  bool converged = false;
  bool monotone = true;  // objective trace nonincreasing
  Optimizer optimizer = Optimizer::coordinate_descent;
};

PLRFit fit_quadratic(const QuadraticForm& q, const PLRConfig& config);
PLRFit fit_plr(const PLRData& data, const PLRConfig& config);

struct Tuning {
  double h = 0.0;
  double lambda = 0.0;
};

// h = c_h sqrt(log p / n) clipped to [sqrt(log p / n), C2];
// lambda = c_lambda (h + sqrt(log p / n)).
Tuning default_tuning(int n, int p, double c_h = 1.0, double c_lambda = 2.0, double C2 = 1.0);

struct RateRow {
  int n = 0;
  double mse = 0.0;
  double mse_se = 0.0;
  double rate_proxy = 0.0;  // s log p / n
  int converged = 0;
};

struct RateConfig {
  std::vector<int> ns{200, 800};
  int p = 100;
  int s = 3;
  int reps = 50;
  double c_h = 1.0;
  double c_lambda = 2.0;
  PLRDesign design;
  std::uint64_t seed = 0;
};

std::vector<RateRow> rate_experiment(const RateConfig& config);

}  // namespace depstat
