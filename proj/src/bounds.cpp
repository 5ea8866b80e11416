#include "depstat/bounds.hpp"

#include <cmath>
#include <limits>

#include "depstat/common.hpp"

namespace depstat {

namespace {

void positive(double v, const char* what) {
  if (!(v > 0)) throw ArgumentError(std::string(what) + " must be positive");
}

}  // namespace

void MixingModel::validate() const {
  positive(gamma1, "gamma1");
  positive(gamma2, "gamma2");
  positive(delta, "delta");
  if (kind == MixingKind::tau && !lip_L) throw ArgumentError("tau-mixing requires lip_L");
  if (kind == MixingKind::alpha && lip_L) throw ArgumentError("lip_L is only used with tau-mixing");
  if (lip_L) positive(*lip_L, "lip_L");
}

double sigma_sq_alpha(double gamma1, double gamma2, double delta, double mu_2_delta) {
  positive(gamma1, "sigma_sq_alpha: gamma1");
  positive(gamma2, "sigma_sq_alpha: gamma2");
  positive(delta, "sigma_sq_alpha: delta");
  positive(mu_2_delta, "sigma_sq_alpha: mu");
  const double e = delta / (2.0 + delta);
  return 64.0 * std::pow(gamma1, e) / (-std::expm1(-gamma2 * e)) * mu_2_delta * mu_2_delta;
}

double sigma_sq_tau(double gamma1, double gamma2, double delta, double lip_L, double mu_2_delta) {
  positive(gamma1, "sigma_sq_tau: gamma1");
  positive(gamma2, "sigma_sq_tau: gamma2");
  positive(lip_L, "sigma_sq_tau: lip_L");
  positive(mu_2_delta, "sigma_sq_tau: mu");
  if (delta == 0.0) return std::numeric_limits<double>::infinity();
  positive(delta, "sigma_sq_tau: delta");
  const double e = delta / (1.0 + delta);
  return 12.0 * std::pow(gamma1 * lip_L, e) / (-std::expm1(-gamma2 * e)) *
         std::pow(mu_2_delta, (2.0 + delta) / (1.0 + delta));
}

double sigma_sq(const MixingModel& model, double mu_2_delta) {
  model.validate();
  if (model.kind == MixingKind::alpha)
    return sigma_sq_alpha(model.gamma1, model.gamma2, model.delta, mu_2_delta);
  return sigma_sq_tau(model.gamma1, model.gamma2, model.delta, *model.lip_L, mu_2_delta);
}

BernSeq bern_seq(double F, double B, double mu1, double sigma2, int n, int m) {
  require(n >= 2, "bern_seq: n must be >= 2");
  require(m >= 1, "bern_seq: m must be >= 1");
  require(F >= 0 && B >= 0 && mu1 >= 0 && sigma2 >= 0, "bern_seq: inputs must be nonnegative");
  const double L = std::log(static_cast<double>(n));
  const double L2 = L * L;
  const double base = sigma2 + B * B * L2 * L2 / n;
  BernSeq out;
  for (int p = 1; p <= m; ++p) {
    out.A.push_back(std::pow(mu1, 2.0 * (m - p)) * F * F * std::pow(base, p));
    out.M.push_back(std::pow(mu1, m - p) * F * std::pow(B, p) * std::pow(L, 2.0 * p));
  }
  return out;
}

void TailBoundInputs::validate() const {
  require(n >= 2, "tail bound: n must be >= 2");
  require(m >= 1 && r >= 1 && r <= m, "tail bound: need 1 <= r <= m");
  require(F >= 0 && B >= 0 && mu1 >= 0 && sigma2 >= 0, "tail bound: constants must be nonnegative");
  positive(C1, "tail bound: C1");
  positive(C2, "tail bound: C2");
  require(t >= 0 && t_prime >= 0 && residual >= 0, "tail bound: t, t', residual must be >= 0");
}

double bernstein_sum(const TailBoundInputs& in, double x) {
  in.validate();
  positive(x, "tail bound: x");
  const auto seq = bern_seq(in.F, in.B, in.mu1, in.sigma2, in.n, in.m);
  double sum = 0.0;
  for (int p = in.r; p <= in.m; ++p) {
    const double inv = 1.0 / p;
    const double den = std::pow(seq.A[p - 1], inv) + std::pow(x, inv) * std::pow(seq.M[p - 1], inv);
    sum += std::exp(-in.C2 * in.n * std::pow(x, 2.0 * inv) / den);
  }
  return sum;
}

TailBound tail_bound_degenerate(const TailBoundInputs& in, double x) {
  TailBound b;
  b.value = 6.0 * bernstein_sum(in, x);
  b.shift = x + in.C1 * in.t;
  b.vacuous = b.value >= 1.0;
  return b;
}

TailBound tail_bound_general(const TailBoundInputs& in, double x) {
  TailBound b;
  b.value = 2.0 * bernstein_sum(in, x) + in.residual;
  b.shift = x + in.C1 * in.t_prime;
  b.vacuous = b.value >= 1.0;
  return b;
}

TailBound tail_bound_discontinuous(const TailBoundInputs& in, double x, const JumpTerms& jumps,
                                   DiscontinuousVariant variant) {
  require(jumps.J_total >= 0 && jumps.M2 >= 0 && jumps.D >= 0,
          "tail_bound_discontinuous: jump terms must be nonnegative");
  double y = x;
  if (variant == DiscontinuousVariant::a) {
    const double cut = (std::abs(jumps.f0_at_0) + in.F) / in.n;
    if (!(x > cut))
      throw ArgumentError("tail_bound_discontinuous: variant (a) needs x > (|f0(0)| + F)/n");
    y = x - cut;
  }
  const double nn = static_cast<double>(in.n);
  double tails = 0.0;
  for (double p : jumps.tail_at_M1) tails += p;
  TailBound b;
  b.value = 2.0 * bernstein_sum(in, y) + nn * nn * jumps.J_total * jumps.M2 * jumps.D + nn * tails;
  b.shift = x + in.C1 * in.t_prime;
  b.vacuous = b.value >= 1.0;
  return b;
}

MdpDiagnostics mdp_condition_check(double F, double B, double mu1, double sigma2, int n, int m) {
  require(n >= 3, "mdp_condition_check: n must be >= 3");
  const double nn = static_cast<double>(n);
  const double L = std::log(nn);
  const double lead = std::pow(mu1, m - 2) * F;
  MdpDiagnostics d;
  d.ratio1 = lead * sigma2 / (std::sqrt(nn) * std::pow(L, -3.0));
  d.ratio2 = lead * B * B / (std::pow(nn, 1.5) * std::pow(L, -8.0));
  return d;
}

double gumbel_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("gumbel_quantile: alpha must be in (0, 1)");
  return -std::log(kPi) - 2.0 * std::log(-std::log1p(-alpha));
}

double gumbel_cdf(double q) { return std::exp(-std::exp(-0.5 * q) / std::sqrt(kPi)); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

}  // namespace depstat
