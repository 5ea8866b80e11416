#pragma once

#include <optional>
#include <vector>

namespace depstat {

enum class MixingKind { alpha, tau };

struct MixingModel {
  MixingKind kind = MixingKind::alpha;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double delta = 1.0;
  std::optional<double> lip_L;  // required iff kind == tau

  void validate() const;
};

// 64 g1^{d/(2+d)} / (1 - exp(-g2 d/(2+d))) mu^2
double sigma_sq_alpha(double gamma1, double gamma2, double delta, double mu_2_delta);
// 12 (g1 L)^{d/(1+d)} / (1 - exp(-g2 d/(1+d))) mu^{(2+d)/(1+d)}; +inf as delta -> 0
double sigma_sq_tau(double gamma1, double gamma2, double delta, double lip_L, double mu_2_delta);
double sigma_sq(const MixingModel& model, double mu_2_delta);

struct BernSeq {
  std::vector<double> A;  // A[p-1]
  std::vector<double> M;  // M[p-1]
};
BernSeq bern_seq(double F, double B, double mu1, double sigma2, int n, int m);

struct TailBoundInputs {
  double F = 1.0;
  double B = 1.0;
  double mu1 = 1.0;
  double mu_2_delta = 1.0;
  double sigma2 = 1.0;
  int n = 2;
  int m = 2;
  int r = 1;
  double C1 = 1.0;
  double C2 = 1.0;
  double t = 0.0;
  double t_prime = 0.0;
  double residual = 0.0;

  void validate() const;
};

struct TailBound {
  double value = 0.0;  // bound on P(|V_n - theta| >= shift)
  double shift = 0.0;  // x + C1 t (or C1 t')
  bool vacuous = false;
};

// sum_{p=r}^m exp(-C2 n x^{2/p} / (A_p^{1/p} + x^{1/p} M_p^{1/p}))
double bernstein_sum(const TailBoundInputs& in, double x);

TailBound tail_bound_degenerate(const TailBoundInputs& in, double x);
TailBound tail_bound_general(const TailBoundInputs& in, double x);

enum class DiscontinuousVariant { a, b };

struct JumpTerms {
  double f0_at_0 = 0.0;
  int J_total = 0;
  double M2 = 0.0;
  double D = 0.0;
  std::vector<double> tail_at_M1;  // P(|X_l| >= M1) per coordinate
};
TailBound tail_bound_discontinuous(const TailBoundInputs& in, double x, const JumpTerms& jumps,
                                   DiscontinuousVariant variant);

struct MdpDiagnostics {
  double ratio1 = 0.0;  // mu1^{m-2} F sigma^2 / (n^{1/2} (log n)^{-3})
  double ratio2 = 0.0;  // mu1^{m-2} B^2 F / (n^{3/2} (log n)^{-8})
};
MdpDiagnostics mdp_condition_check(double F, double B, double mu1, double sigma2, int n, int m);

// q with exp(-pi^{-1/2} exp(-q/2)) = 1 - alpha.
double gumbel_quantile(double alpha);
double gumbel_cdf(double q);

double normal_sf(double x);
double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace depstat
