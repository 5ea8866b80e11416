#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "depstat/kernel.hpp"

namespace depstat {

enum class BasisKind { cosine, sine, coordinate };

// e(x) = cos(2 pi u'x), sin(2 pi u'x), or x[coord].
struct Basis {
  BasisKind kind = BasisKind::cosine;
  Eigen::VectorXd freq;
  int coord = 0;

  double operator()(const Eigen::VectorXd& x) const;
};

struct ExpansionConstants {
  double F = 0.0;
  double B = 1.0;
  double mu = 1.0;  // mu_a, constant in a for every construction here
};

// f~(x_1..x_m) = sum_r coeffs[r] * prod_i bases[terms(r, i)](x_i)
struct ExpandedKernel {
  int m = 2;
  int d = 1;
  std::vector<Basis> bases;
  Eigen::MatrixXi terms;
  Eigen::VectorXd coeffs;
  ExpansionConstants constants;
  double target_t = 0.0;
  ApproxDomain domain;
  std::optional<double> lip_L;
  std::uint64_t seed = 0;

  std::size_t K() const { return bases.size(); }
  double coefficient_l1() const { return coeffs.cwiseAbs().sum(); }
  // Rows of `points` are points; returns (#points x K) basis values.
  Eigen::MatrixXd basis_matrix(const Eigen::MatrixXd& points) const;
  double evaluate(PointSpan args) const;
};

struct ExpansionReport {
  double grid_sup_error = 0.0;
  int grid_resolution = 0;
  std::size_t K_used = 0;
  std::uint64_t seed = 0;
  std::size_t points_checked = 0;
  bool pass = false;
};

struct GammaConstants {
  double gamma1;  // surface area of the unit sphere in R^n
  double gamma2;  // E||Z|| for Z ~ N(0, I_n)
};
GammaConstants gamma_constants(int n);

ExpandedKernel rff_expand_pd(const KernelSpec& spec, double M, double t, int K,
                             std::uint64_t seed);

// D = per-part sample sizes {D1, D2, D3, D4} for the real-positive,
// real-negative, imaginary-positive and imaginary-negative parts.
ExpandedKernel rff_expand_general(const KernelSpec& spec, double M, double t,
                                  std::array<int, 4> D, std::uint64_t seed);
// Splits K draws across the parts in proportion to their masses.
std::array<int, 4> allocate_parts(const SpectralDensity& density, int K);

struct SampleSizeInputs {
  double t = 0.05;
  double M = 1.0;
  int m = 2;
  int d = 1;
  double q = 1.0;
  double mu_q = 1.0;
  double l1_norm = 1.0;
  double c0 = 1.0;
};
int sample_size_heuristic(const SampleSizeInputs& in);

// Gaussian mollification of a shift-invariant product kernel with known
// per-axis transforms.
KernelSpec mollify(const KernelSpec& spec, double h);

double choose_h_lipschitz(double L, double t, int md);
double choose_h_discontinuous(double M2, int d, double Delta, double t);

enum class FRegime { B1, B2, B3, B4 };

struct FInputs {
  int m = 2;
  int d = 1;
  bool shift_invariant = false;  // use c1 = Gamma1(d), c2 = Gamma2(d)
  std::optional<double> l1_norm;
  std::optional<double> eps;
  std::optional<double> L_F;
  std::optional<double> L;
  std::optional<double> t;
  std::vector<double> transform_l1_unit;  // int_{-1}^{1} |h_hat_l|
  std::vector<double> C_ell;
  std::optional<double> h;
};
double expansion_F(FRegime kind, const FInputs& in);

double lipschitz_constant_tau(double t, double M, int m, int d, double q, double mu_q,
                              double l1_norm);

// A part of a combination: an expansion whose i-th argument is argument
// slots[i] of the combined kernel.
struct CombinePart {
  ExpandedKernel expansion;
  std::vector<int> slots;
  double lambda = 1.0;
};

ExpandedKernel combine_add(const std::vector<CombinePart>& parts, double t,
                           bool symmetrize_output = false);
// bounds[i] >= 1 bounds |f^i| on its domain.
ExpandedKernel combine_mul(const std::vector<CombinePart>& parts,
                           const std::vector<double>& bounds, double t,
                           bool symmetrize_output = false);
// Budget each part must meet in combine_mul for total error t.
double mul_part_budget(const std::vector<double>& bounds, std::size_t i, double t);

// Replaces every frequency u in R^d by the vector in R^target_d with u at
// `coords`.
ExpandedKernel embed_coordinates(const ExpandedKernel& e, int target_d,
                                 const std::vector<int>& coords);

// Exact expansion of x'y.
ExpandedKernel linear_expansion(int d, double M);

int default_grid_resolution(int md);
ExpansionReport verify_sup_error(const KernelSpec& spec, const ExpandedKernel& expanded,
                                 int grid_res, std::uint64_t seed);

// End-to-end construction used by the CLI: picks the PD, Lipschitz or
// discontinuous route from the kernel tags.
struct ExpandOptions {
  double M = 3.0;
  double t = 0.05;
  int K = 0;  // 0 = sample_size_heuristic
  double M2 = 0.1;
  double c0 = 0.8;
  std::uint64_t seed = 0;
};
struct ExpandResult {
  ExpandedKernel expansion;
  KernelSpec target;  // kernel the expansion approximates on its domain
  std::string route;
  double h = 0.0;
};
ExpandResult expand_kernel(const KernelSpec& spec, const ExpandOptions& opt);

std::string to_json(const ExpandedKernel& e);
ExpandedKernel expanded_from_json(const std::string& text);

}  // namespace depstat
