#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "depstat/common.hpp"

namespace depstat {

using Rng = std::mt19937_64;
using PointSpan = std::span<const Eigen::VectorXd>;

enum class Tag : unsigned {
  shift_invariant = 1u << 0,
  product_form = 1u << 1,
  positive_definite = 1u << 2,
  piecewise_constant_factors = 1u << 3,
  symmetric = 1u << 4,
};

class TagSet {
 public:
  TagSet() = default;
  TagSet(std::initializer_list<Tag> tags) {
    for (Tag t : tags) insert(t);
  }
  bool has(Tag t) const { return bits_ & static_cast<unsigned>(t); }
  void insert(Tag t) { bits_ |= static_cast<unsigned>(t); }
  void erase(Tag t) { bits_ &= ~static_cast<unsigned>(t); }
  unsigned bits() const { return bits_; }
  bool operator==(const TagSet&) const = default;

 private:
  unsigned bits_ = 0;
};

std::string to_string(TagSet tags);

enum class Phase { real, imaginary };

// One axis of a product-form Fourier transform: phase * r(u), r real.
// The sign parts of r carry their L1 masses and, when available,
// samplers for the normalized parts max(r,0)/mass_pos and max(-r,0)/mass_neg.
struct AxisTransform {
  Phase phase = Phase::real;
  std::function<double(double)> r;
  double mass_pos = 0.0;
  double mass_neg = 0.0;
  std::function<double(Rng&)> sample_pos;
  std::function<double(Rng&)> sample_neg;
  // Upper bound of the frequency support, infinite unless tabulated.
  double support = std::numeric_limits<double>::infinity();
};

enum class SignPart { real_pos = 0, real_neg = 1, imag_pos = 2, imag_neg = 3 };

// f_hat(u) = prod_l axes[l](u_l), u in R^dim.
struct SpectralDensity {
  std::vector<AxisTransform> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  std::complex<double> value(const Eigen::VectorXd& u) const;
  // {A_g+, A_g-, A_h+, A_h-}
  std::array<double, 4> part_masses() const;
  double l1_norm() const;
  bool can_sample() const;
  Eigen::VectorXd sample(SignPart part, Rng& rng) const;
};

// Univariate factor g of a shift-invariant product kernel
// f(x, y) = prod_l g_l(x_l - y_l).
struct AxisFactor {
  std::function<double(double)> fn;
  std::vector<double> jumps;
  std::optional<AxisTransform> transform;
  double lipschitz = std::numeric_limits<double>::infinity();
  double value_at_zero = 1.0;
};

struct KernelSpec {
  std::string id;
  int order = 2;
  int dim = 1;
  std::function<double(PointSpan)> eval;
  TagSet tags;
  // Non-empty for shift-invariant product kernels of order 2.
  std::vector<AxisFactor> factors;
  // Product-form transform of f itself on R^{order*dim}, if known.
  std::vector<AxisTransform> joint_transform;
  std::optional<double> sup_bound;
  double mollifier_h = 0.0;

  // Jump locations per coordinate; empty when continuous.
  std::vector<std::vector<double>> jumps;

  double operator()(PointSpan args) const { return eval(args); }
};

double eval_kernel(const KernelSpec& spec, PointSpan args);

KernelSpec symmetrize(const KernelSpec& spec);

// How frequencies drawn from a SpectralDensity map onto the m arguments.
enum class SpectralLift {
  shift_pair,  // density of f0 on R^d, f(x,y) = f0(x - y)
  joint,       // density of f on R^{md}
};

struct KernelSpectrum {
  SpectralDensity density;
  SpectralLift lift = SpectralLift::shift_pair;
};

KernelSpectrum spectral_density(const KernelSpec& spec);

// The set C: a box [-M, M]^{md} minus bands of half-width `margin` around
// every jump of every pairwise coordinate difference.
struct ApproxDomain {
  int m = 2;
  int d = 1;
  double halfwidth = 1.0;
  double margin = 0.0;
  std::vector<std::vector<double>> jumps;  // per coordinate, may be empty
};

bool in_domain(const ApproxDomain& dom, PointSpan args);
ApproxDomain intersect(const ApproxDomain& a, const ApproxDomain& b);

// Catalog.
struct DomainParams {
  double M = 3.0;
  double M1 = 5.0;
  double M2 = 0.1;
  double t = 0.05;
  double C = 1.0;
  // max_l (E|X_l|^a)^(1/a); needed only by the Linear row.
  std::function<double(double)> coordinate_norm;
};

struct ConstantsRow {
  double F = 0.0;
  double B = 1.0;
  std::function<double(double)> mu;
  std::string F_formula;
  std::string B_formula;
  std::string mu_formula;
  bool parameter_free = false;
};

struct CatalogEntry {
  KernelSpec kernel;
  std::string definition;
  std::string domain_formula;
  std::function<ApproxDomain(const DomainParams&)> domain;
  std::function<ConstantsRow(const DomainParams&)> constants;
};

std::vector<CatalogEntry> builtin_catalog(int d = 1);
CatalogEntry catalog_entry(const std::string& id, int d = 1);
std::vector<std::string> catalog_ids();

// Kendall factor sign(delta) 1{|delta| <= 2 M1} with its transform.
KernelSpec truncated_kendall(double M1);
AxisFactor truncated_sign_factor(double M1);

// Transforms of the catalog factors, in the convention
// f_hat(u) = int f(x) exp(-2 pi i u x) dx.
AxisTransform gaussian_axis();
AxisTransform laplacian_axis();
AxisTransform cauchy_axis();
AxisTransform hat_axis();
AxisTransform cosine_axis();
AxisTransform box_axis();
AxisTransform truncated_sign_axis(double M1);

// Multiplies an axis transform by exp(-2 pi^2 h^2 u^2) and rebuilds its
// masses and samplers.
AxisTransform damp_axis(const AxisTransform& base, double h);

// Builds a kernel from user-supplied factors; tags are inferred.
KernelSpec shift_invariant_product(std::string id, std::vector<AxisFactor> factors);

}  // namespace depstat
