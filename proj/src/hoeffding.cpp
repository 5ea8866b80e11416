#include <algorithm>
#include <cmath>

#include "depstat/vstat.hpp"

namespace depstat {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance
};

// Welford accumulation.
class Running {
 public:
  void add(double x) {
    ++n_;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  Moments moments() const {
    return {mean_, n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0};
  }
  std::size_t count() const { return n_; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace

HoeffdingComponents::HoeffdingComponents(KernelSpec spec, IidSampler sampler, int mc_budget,
                                         Rng& rng)
    : spec_(std::move(spec)), sampler_(std::move(sampler)), budget_(mc_budget) {
  require(mc_budget >= 100, "hoeffding: mc_budget must be >= 100");
  if (spec_.order > 3) throw UnsupportedError("hoeffding: order m > 3 is not supported");
  if (!spec_.tags.has(Tag::symmetric))
    throw ArgumentError("hoeffding: kernel must be symmetric (use symmetrize)");
  std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(spec_.order),
                                    Eigen::VectorXd(spec_.dim));
  Running acc;
  for (int k = 0; k < budget_; ++k) {
    for (auto& a : args) sampler_(rng, a);
    acc.add(spec_.eval(args));
  }
  auto mo = acc.moments();
  theta_ = {mo.mean, std::sqrt(mo.var / budget_)};
}

Estimate HoeffdingComponents::g(PointSpan xs, Rng& rng) const {
  const int p = static_cast<int>(xs.size());
  require(p >= 1 && p <= spec_.order, "hoeffding: projection order out of range");
  std::vector<Eigen::VectorXd> args(xs.begin(), xs.end());
  args.resize(static_cast<std::size_t>(spec_.order), Eigen::VectorXd(spec_.dim));
  if (p == spec_.order) return {spec_.eval(args) - theta_.value, theta_.se};
  Running acc;
  for (int k = 0; k < budget_; ++k) {
    for (int i = p; i < spec_.order; ++i) sampler_(rng, args[static_cast<std::size_t>(i)]);
    acc.add(spec_.eval(args));
  }
  auto mo = acc.moments();
  return {mo.mean - theta_.value, std::sqrt(mo.var / budget_ + theta_.se * theta_.se)};
}

Estimate HoeffdingComponents::f(PointSpan xs, Rng& rng) const {
  const int p = static_cast<int>(xs.size());
  Estimate out = g(xs, rng);
  if (p == 1) return out;
  double var = out.se * out.se;
  // Subtract every component on a proper nonempty subset of the arguments.
  for (unsigned mask = 1; mask + 1 < (1u << p); ++mask) {
    std::vector<Eigen::VectorXd> sub;
    for (int i = 0; i < p; ++i)
      if (mask & (1u << i)) sub.push_back(xs[static_cast<std::size_t>(i)]);
    Estimate part = f(sub, rng);
    out.value -= part.value;
    var += part.se * part.se;
  }
  out.se = std::sqrt(var);
  return out;
}

std::vector<ProjectionEstimate> hoeffding_project(
    const HoeffdingComponents& hc, const std::vector<std::vector<Eigen::VectorXd>>& points,
    Rng& rng) {
  const std::uint64_t base = rng();
  std::vector<ProjectionEstimate> out(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    Rng local(derive_seed(base, i));
    out[i].g = hc.g(points[i], local);
    out[i].f = hc.f(points[i], local);
  });
  return out;
}

DegeneracyResult degeneracy_level(const KernelSpec& spec, const IidSampler& sampler, double tol,
                                  int mc_budget, Rng& rng, int probes) {
  require(tol > 0, "degeneracy_level: tol must be positive");
  require(probes >= 1, "degeneracy_level: probes must be >= 1");
  HoeffdingComponents hc(spec, sampler, mc_budget, rng);
  const int m = spec.order;
  DegeneracyResult res;
  for (int p = 1; p < m; ++p) {
    bool signal = false, ambiguous = false;
    double max_g = 0.0, max_se = 0.0;
    for (int k = 0; k < probes; ++k) {
      std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(p), Eigen::VectorXd(spec.dim));
      for (auto& x : xs) sampler(rng, x);
      Estimate e = hc.g(xs, rng);
      max_g = std::max(max_g, std::abs(e.value));
      max_se = std::max(max_se, e.se);
      if (3.0 * e.se > tol)
        ambiguous = true;
      else if (std::abs(e.value) > tol)
        signal = true;
    }
    res.max_abs_g.push_back(max_g);
    res.max_se.push_back(max_se);
    if (signal || ambiguous) {
      res.level = p - 1;
      res.inconclusive = !signal;
      return res;
    }
  }
  res.level = m - 1;
  return res;
}

NuSquared nu_squared(const std::function<double(const Eigen::VectorXd&)>& f1,
                     const PathSampler& process, int lag_cap, int mc_budget, Rng& rng,
                     int batches) {
  require(lag_cap >= 1, "nu_squared: lag_cap must be >= 1");
  require(batches >= 2, "nu_squared: need at least 2 batches");
  const int len = std::max(mc_budget / batches, 20 * lag_cap);
  Running across;
  for (int b = 0; b < batches; ++b) {
    Eigen::MatrixXd path = process(len, rng);
    Eigen::VectorXd y(path.rows());
    for (Eigen::Index i = 0; i < path.rows(); ++i) y[i] = f1(path.row(i).transpose());
    y.array() -= y.mean();
    const Eigen::Index L = y.size();
    double est = y.squaredNorm() / static_cast<double>(L);
    for (int k = 1; k <= lag_cap && k < L; ++k)
      est += 2.0 * y.head(L - k).dot(y.tail(L - k)) / static_cast<double>(L);
    across.add(est);
  }
  auto mo = across.moments();
  NuSquared out;
  out.value = mo.mean;
  out.se = std::sqrt(mo.var / batches);
  if (out.value < 0) {
    out.value = 0.0;
    out.clamped = true;
  }
  return out;
}

BiasConstants bias_constants(const KernelSpec& spec, const ExpandedKernel& expanded,
                             const IidSampler& sampler, const ApproxDomain& domain,
                             int mc_budget, Rng& rng, double C_const, int anchors) {
  require(mc_budget >= 1 && anchors >= 1, "bias_constants: budgets must be positive");
  require(C_const > 0, "bias_constants: C must be positive");
  const int m = spec.order;
  const int d = spec.dim;
  const double cap = spec.sup_bound ? *spec.sup_bound : std::numeric_limits<double>::infinity();
  BiasConstants out;
  out.C_const = C_const;

  std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(m), Eigen::VectorXd(d));
  // s_p, v_p with the first p arguments fixed to `args[0..p)`.
  auto conditional = [&](int p) {
    double sq = 0.0;
    int outside = 0;
    for (int k = 0; k < mc_budget; ++k) {
      for (int i = p; i < m; ++i) sampler(rng, args[static_cast<std::size_t>(i)]);
      double v = spec.eval(args);
      sq += v * v;
      outside += !in_domain(domain, args);
    }
    return std::make_pair(std::sqrt(sq / mc_budget), std::sqrt(static_cast<double>(outside) / mc_budget));
  };

  auto [s0, v0] = conditional(0);
  out.s.push_back(std::min(s0, cap));
  out.v.push_back(v0);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double M = domain.halfwidth;
  for (int p = 1; p < m; ++p) {
    ApproxDomain section = domain;
    section.m = p;
    double s_max = 0.0, v_max = 0.0;
    for (int a = 0; a < anchors; ++a) {
      // Stratify the first coordinate of the first anchor point.
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        for (int i = 0; i < p; ++i)
          for (int l = 0; l < d; ++l) args[i][l] = -M + 2.0 * M * unif(rng);
        args[0][0] = -M + 2.0 * M * (a + unif(rng)) / anchors;
        ok = in_domain(section, std::span<const Eigen::VectorXd>(args.data(), static_cast<std::size_t>(p)));
      }
      if (!ok) continue;
      auto [s, v] = conditional(p);
      s_max = std::max(s_max, s);
      v_max = std::max(v_max, v);
    }
    out.s.push_back(std::min(s_max, cap));
    out.v.push_back(v_max);
  }

  double sv = 0.0, vsum = 0.0;
  for (int i = 0; i < m; ++i) {
    sv += out.s[i] * out.v[i];
    vsum += out.v[i];
  }
  const auto& c = expanded.constants;
  out.t_prime = C_const * (expanded.target_t + sv + c.F * std::pow(c.B, m) * vsum);
  return out;
}

}  // namespace depstat
