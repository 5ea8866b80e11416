#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "depstat/kernel.hpp"

namespace depstat {

struct Innovation {
  enum class Kind { gaussian, student_t, uniform };
  Kind kind = Kind::gaussian;
  double sigma = 1.0;  // gaussian
  double df = 5.0;     // student_t
  double lo = -1.0;    // uniform
  double hi = 1.0;

  static Innovation gaussian(double sigma = 1.0);
  static Innovation student_t(double df);
  static Innovation uniform(double lo, double hi);

  void validate() const;
  double draw(Rng& rng) const;
  double variance() const;  // +inf for student_t with df <= 2
};

enum class InitKind { automatic, exact_stationary, burn_in };

// X_{i+1,j} = alpha_j X_{i,j} + eps_{i+1,j}, coordinates independent.
struct AR1Config {
  std::vector<double> coeffs{0.5};
  Innovation innovation;
  InitKind init = InitKind::automatic;  // exact for gaussian, burn-in otherwise
  int burn_in = 1000;

  int dim() const { return static_cast<int>(coeffs.size()); }
  bool exact_start() const;
  void validate() const;  // throws ConfigError
};

inline AR1Config ar1_config(std::vector<double> coeffs, Innovation innovation = {}) {
  AR1Config c;
  c.coeffs = std::move(coeffs);
  c.innovation = innovation;
  return c;
}

struct ProcessSample {
  Eigen::MatrixXd data;  // n x d
  AR1Config config;
  std::uint64_t seed = 0;
};

ProcessSample simulate_ar1(const AR1Config& config, int n, std::uint64_t seed);

// Two-coordinate AR(1) whose innovations have correlation `innovation_corr`:
// eps_2 = c eps_1 + sqrt(1 - c^2) xi.
struct PairConfig {
  AR1Config ar = ar1_config({0.3, 0.5});
  double innovation_corr = 0.0;

  void validate() const;
};

ProcessSample simulate_pair(const PairConfig& config, int n, std::uint64_t seed);

// Pair l uses derive_seed(seed, l, replication). `configs` has one entry
// (shared by all pairs) or p entries.
std::vector<ProcessSample> simulate_bivariate_pairs(int p, const std::vector<PairConfig>& configs,
                                                    int n, std::uint64_t seed,
                                                    std::uint64_t replication = 0);

struct PLRData {
  Eigen::VectorXd Y;
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd W;
};

struct PLRDesign {
  AR1Config x = ar1_config({0.5});  // one coefficient (shared) or p coefficients
  AR1Config w = ar1_config({0.5});
  Innovation noise;
  bool zero_noise = false;
  std::function<double(double)> g = [](double w) { return 2.0 * std::sin(w); };
};

// Y = X beta* + g(W) + eps; X uses stream 0, W stream 1, eps stream 2.
PLRData simulate_plr(int n, const Eigen::VectorXd& beta_star, const PLRDesign& design,
                     std::uint64_t seed);

// beta* with entries (2, -2, 2, -2, ...) on the first s coordinates.
Eigen::VectorXd alternating_beta(int p, int s, double magnitude = 2.0);

// Shortest round-trip decimal form.
std::string format_double(double x);
void write_csv(std::ostream& os, const Eigen::MatrixXd& data, const std::vector<std::string>& columns);
std::vector<std::string> default_columns(int d);  // c0..c{d-1}

}  // namespace depstat
