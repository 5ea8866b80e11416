#pragma once

#include <map>
#include <utility>
#include <vector>

#include "depstat/expansion.hpp"

namespace depstat::detail {

// Accumulates (basis tuple, weight) terms with canonical, deduplicated
// bases. A trig basis is stored with its first nonzero frequency component
// positive; sin(-a) = -sin(a) is folded into the weight.
class ExpansionBuilder {
 public:
  ExpansionBuilder(int m, int d) : m_(m), d_(d) {}

  // Index of the canonical basis; multiplies its sign into *weight.
  // Returns -1 for the identically-zero basis sin(0).
  int trig_basis(BasisKind kind, const Eigen::VectorXd& freq, double* weight);
  int coordinate_basis(int coord);
  int add_basis(const Basis& b, double* weight);

  const Basis& basis(int i) const { return bases_[static_cast<std::size_t>(i)]; }
  int constant_basis() { double w = 1.0; return trig_basis(BasisKind::cosine, Eigen::VectorXd::Zero(d_), &w); }

  void add_term(const std::vector<int>& idx, double w);
  // Replaces the term set by its average over all argument permutations.
  void symmetrize();

  ExpandedKernel finish() const;

 private:
  using Key = std::pair<int, std::vector<double>>;
  int m_;
  int d_;
  std::map<Key, int> index_;
  std::vector<Basis> bases_;
  std::map<std::vector<int>, double> terms_;
};

// Product-to-sum lists: trig(a_1 + ... + a_m) = sum sign * prod kind_i(a_i).
struct TrigProduct {
  double sign;
  std::vector<BasisKind> kinds;
};
std::vector<TrigProduct> expand_angle_sum(BasisKind outer, int m);

}  // namespace depstat::detail
