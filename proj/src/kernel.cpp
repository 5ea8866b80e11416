#include "depstat/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

namespace depstat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * kPi;

double sign(double v) { return (v > 0) - (v < 0); }

// Piecewise-constant inverse CDF of max(s * r, 0) on a uniform grid.
struct TabulatedPart {
  double lo = 0.0;
  double step = 0.0;
  std::vector<double> cumulative;  // cumulative[i] = mass of cells < i

  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }

  double sample(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double target = unif(rng) * total();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    std::size_t cell = std::min<std::size_t>(
        static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cumulative.begin(), 1) - 1),
        cumulative.size() - 2);
    return lo + (static_cast<double>(cell) + unif(rng)) * step;
  }
};

std::shared_ptr<TabulatedPart> tabulate(const std::function<double(double)>& r, double sgn,
                                        double U, std::size_t cells) {
  auto tab = std::make_shared<TabulatedPart>();
  tab->lo = -U;
  tab->step = 2.0 * U / static_cast<double>(cells);
  tab->cumulative.resize(cells + 1);
  tab->cumulative[0] = 0.0;
  double prev = std::max(sgn * r(-U), 0.0);
  for (std::size_t i = 1; i <= cells; ++i) {
    double cur = std::max(sgn * r(-U + static_cast<double>(i) * tab->step), 0.0);
    tab->cumulative[i] = tab->cumulative[i - 1] + 0.5 * (prev + cur) * tab->step;
    prev = cur;
  }
  return tab;
}

// Integral of |r| over [-U, U] split into its sign parts.
std::pair<double, double> grid_masses(const std::function<double(double)>& r, double U,
                                      std::size_t cells) {
  double step = 2.0 * U / static_cast<double>(cells);
  NeumaierSum pos, neg;
  for (std::size_t i = 0; i <= cells; ++i) {
    double w = (i == 0 || i == cells) ? 0.5 * step : step;
    double v = r(-U + static_cast<double>(i) * step);
    if (v > 0)
      pos.add(w * v);
    else
      neg.add(-w * v);
  }
  return {pos.value(), neg.value()};
}

bool factors_symmetric(const std::vector<AxisFactor>& factors) {
  Rng rng(0x5eed);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int trial = 0; trial < 64; ++trial) {
    double a = 1.0, b = 1.0;
    for (const auto& f : factors) {
      double delta = unif(rng);
      a *= f.fn(delta);
      b *= f.fn(-delta);
    }
    if (a != b) return false;
  }
  return true;
}

}  // namespace

std::string to_string(TagSet tags) {
  static const std::pair<Tag, const char*> names[] = {
      {Tag::shift_invariant, "shift_invariant"},
      {Tag::product_form, "product_form"},
      {Tag::positive_definite, "positive_definite"},
      {Tag::piecewise_constant_factors, "piecewise_constant_factors"},
      {Tag::symmetric, "symmetric"},
  };
  std::string out;
  for (auto [tag, name] : names) {
    if (!tags.has(tag)) continue;
    if (!out.empty()) out += '|';
    out += name;
  }
  return out;
}

std::complex<double> SpectralDensity::value(const Eigen::VectorXd& u) const {
  require(u.size() == dim(), "spectral_density: frequency dimension mismatch");
  std::complex<double> v(1.0, 0.0);
  for (int l = 0; l < dim(); ++l) {
    double r = axes[l].r(u[l]);
    v *= axes[l].phase == Phase::real ? std::complex<double>(r, 0.0)
                                      : std::complex<double>(0.0, r);
  }
  return v;
}

std::array<double, 4> SpectralDensity::part_masses() const {
  // Product of per-axis (pos - neg) and (pos + neg) gives the masses of the
  // positive and negative parts of prod r_l.
  double plus = 1.0, minus = 1.0;
  int imaginary = 0;
  for (const auto& a : axes) {
    plus *= a.mass_pos + a.mass_neg;
    minus *= a.mass_pos - a.mass_neg;
    if (a.phase == Phase::imaginary) ++imaginary;
  }
  double p = std::isinf(plus) ? kInf : 0.5 * (plus + minus);
  double n = std::isinf(plus) ? kInf : 0.5 * (plus - minus);
  switch (imaginary % 4) {
    case 0: return {p, n, 0.0, 0.0};
    case 1: return {0.0, 0.0, p, n};
    case 2: return {n, p, 0.0, 0.0};
    default: return {0.0, 0.0, n, p};
  }
}

double SpectralDensity::l1_norm() const {
  double v = 1.0;
  for (const auto& a : axes) v *= a.mass_pos + a.mass_neg;
  return v;
}

bool SpectralDensity::can_sample() const {
  for (const auto& a : axes) {
    if (std::isinf(a.mass_pos) || std::isinf(a.mass_neg)) return false;
    if (a.mass_pos > 0 && !a.sample_pos) return false;
    if (a.mass_neg > 0 && !a.sample_neg) return false;
  }
  return true;
}

Eigen::VectorXd SpectralDensity::sample(SignPart part, Rng& rng) const {
  if (!can_sample()) throw UnsupportedError("spectral density has no sampler for its sign parts");
  int imaginary = 0;
  for (const auto& a : axes) imaginary += a.phase == Phase::imaginary;
  bool want_imag = part == SignPart::imag_pos || part == SignPart::imag_neg;
  if (want_imag != (imaginary % 2 == 1)) throw ArgumentError("requested sign part has zero mass");
  int global = (imaginary % 4 >= 2) ? -1 : 1;
  int want = (part == SignPart::real_pos || part == SignPart::imag_pos) ? 1 : -1;
  int need = want * global;  // required sign of prod r_l

  const int d = dim();
  std::vector<double> weights;
  std::vector<unsigned> patterns;
  for (unsigned pat = 0; pat < (1u << d); ++pat) {
    int s = 1;
    double w = 1.0;
    for (int l = 0; l < d; ++l) {
      bool neg = pat & (1u << l);
      s *= neg ? -1 : 1;
      w *= neg ? axes[l].mass_neg : axes[l].mass_pos;
    }
    if (s == need && w > 0) {
      weights.push_back(w);
      patterns.push_back(pat);
    }
  }
  if (weights.empty()) throw ArgumentError("requested sign part has zero mass");
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  unsigned pat = patterns[pick(rng)];
  Eigen::VectorXd u(d);
  for (int l = 0; l < d; ++l)
    u[l] = (pat & (1u << l)) ? axes[l].sample_neg(rng) : axes[l].sample_pos(rng);
  return u;
}

double eval_kernel(const KernelSpec& spec, PointSpan args) {
  if (static_cast<int>(args.size()) != spec.order)
    throw ArgumentError("eval_kernel: expected " + std::to_string(spec.order) + " arguments");
  for (const auto& x : args)
    if (x.size() != spec.dim)
      throw ArgumentError("eval_kernel: point dimension " + std::to_string(x.size()) +
                          " != " + std::to_string(spec.dim));
  return spec.eval(args);
}

KernelSpec symmetrize(const KernelSpec& spec) {
  KernelSpec out = spec;
  out.tags.insert(Tag::symmetric);
  if (spec.tags.has(Tag::symmetric)) return out;
  out.id = spec.id + "_sym";
  out.factors.clear();
  out.joint_transform.clear();
  out.tags.erase(Tag::product_form);
  const int m = spec.order;
  auto base = spec.eval;
  out.eval = [base, m](PointSpan args) {
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Eigen::VectorXd> permuted(m);
    NeumaierSum acc;
    double count = 0;
    do {
      for (int i = 0; i < m; ++i) permuted[i] = args[perm[i]];
      acc.add(base(permuted));
      count += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return acc.value() / count;
  };
  return out;
}

KernelSpectrum spectral_density(const KernelSpec& spec) {
  if (!spec.factors.empty()) {
    KernelSpectrum ks;
    for (const auto& f : spec.factors) {
      if (!f.transform) break;
      ks.density.axes.push_back(*f.transform);
    }
    if (ks.density.dim() == static_cast<int>(spec.factors.size())) {
      ks.lift = SpectralLift::shift_pair;
      return ks;
    }
  }
  if (!spec.joint_transform.empty()) {
    KernelSpectrum ks;
    ks.density.axes = spec.joint_transform;
    ks.lift = SpectralLift::joint;
    return ks;
  }
  throw UnsupportedError("kernel '" + spec.id + "' has no closed-form Fourier transform");
}

bool in_domain(const ApproxDomain& dom, PointSpan args) {
  if (static_cast<int>(args.size()) != dom.m) return false;
  for (const auto& x : args) {
    if (x.size() != dom.d) return false;
    if ((x.array().abs() > dom.halfwidth).any()) return false;
  }
  for (std::size_t c = 0; c < dom.jumps.size(); ++c) {
    for (int i = 0; i < dom.m; ++i) {
      for (int j = i + 1; j < dom.m; ++j) {
        double delta = args[i][c] - args[j][c];
        for (double y : dom.jumps[c]) {
          if (std::abs(delta - y) < dom.margin || std::abs(-delta - y) < dom.margin)
            return false;
        }
      }
    }
  }
  return true;
}

ApproxDomain intersect(const ApproxDomain& a, const ApproxDomain& b) {
  require(a.d == b.d, "intersect: dimension mismatch");
  ApproxDomain out;
  out.m = std::max(a.m, b.m);
  out.d = a.d;
  out.halfwidth = std::min(a.halfwidth, b.halfwidth);
  bool a_jumps = false, b_jumps = false;
  for (const auto& j : a.jumps) a_jumps |= !j.empty();
  for (const auto& j : b.jumps) b_jumps |= !j.empty();
  out.margin = std::max(a_jumps ? a.margin : 0.0, b_jumps ? b.margin : 0.0);
  out.jumps.assign(std::max(a.jumps.size(), b.jumps.size()), {});
  for (const auto* src : {&a.jumps, &b.jumps}) {
    for (std::size_t c = 0; c < src->size(); ++c) {
      auto& dst = out.jumps[c];
      dst.insert(dst.end(), (*src)[c].begin(), (*src)[c].end());
      std::sort(dst.begin(), dst.end());
      dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
    }
  }
  return out;
}

AxisTransform gaussian_axis() {
  AxisTransform a;
  a.r = [](double u) { return std::sqrt(kTwoPi) * std::exp(-2.0 * kPi * kPi * u * u); };
  a.mass_pos = 1.0;
  a.sample_pos = [](Rng& rng) { return std::normal_distribution<double>(0.0, 1.0 / kTwoPi)(rng); };
  return a;
}

AxisTransform laplacian_axis() {
  AxisTransform a;
  a.r = [](double u) { return 2.0 / (1.0 + 4.0 * kPi * kPi * u * u); };
  a.mass_pos = 1.0;
  a.sample_pos = [](Rng& rng) {
    return std::cauchy_distribution<double>(0.0, 1.0 / kTwoPi)(rng);
  };
  return a;
}

AxisTransform cauchy_axis() {
  AxisTransform a;
  a.r = [](double u) { return kTwoPi * std::exp(-kTwoPi * std::abs(u)); };
  a.mass_pos = 2.0;
  a.sample_pos = [](Rng& rng) {
    double e = std::exponential_distribution<double>(kTwoPi)(rng);
    return std::bernoulli_distribution(0.5)(rng) ? e : -e;
  };
  return a;
}

AxisTransform hat_axis() {
  AxisTransform a;
  a.r = [](double u) {
    if (u == 0.0) return 1.0;
    double s = std::sin(kPi * u) / (kPi * u);
    return s * s;
  };
  a.mass_pos = 1.0;
  // Rejection from the envelope min(1, 1/(pi u)^2), total mass 4/pi.
  a.sample_pos = [r = a.r](Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (;;) {
      double u;
      if (unif(rng) < 0.5) {
        u = (2.0 * unif(rng) - 1.0) / kPi;
      } else {
        double v = 1.0 - unif(rng);  // (0, 1]
        u = 1.0 / (kPi * v);
        if (unif(rng) < 0.5) u = -u;
      }
      double envelope = std::min(1.0, 1.0 / (kPi * kPi * u * u));
      if (unif(rng) * envelope <= r(u)) return u;
    }
  };
  return a;
}

AxisTransform cosine_axis() {
  AxisTransform a;
  a.r = [](double u) {
    double den = 1.0 - 4.0 * kPi * kPi * u * u;
    if (std::abs(den) < 1e-9) return kPi / 2.0;  // removable point u = 1/(2 pi)
    return 2.0 * std::cos(kPi * kPi * u) / den;
  };
  // |r| ~ 1/(2 pi^2 u^2) * |cos|; masses by quadrature on [-U, U] plus the
  // averaged tail 2 * (2/pi) / (2 pi^2 U) split evenly between signs.
  static const std::pair<double, double> masses = [r = a.r] {
    const double U = 400.0;
    auto [p, n] = grid_masses(r, U, 1u << 22);
    double tail = 2.0 / (kPi * kPi * kPi * U);
    return std::make_pair(p + 0.5 * tail, n + 0.5 * tail);
  }();
  a.mass_pos = masses.first;
  a.mass_neg = masses.second;
  return a;
}

AxisTransform box_axis() {
  AxisTransform a;
  a.r = [](double u) {
    if (u == 0.0) return 2.0;
    return std::sin(kTwoPi * u) / (kPi * u);
  };
  a.mass_pos = kInf;
  a.mass_neg = kInf;
  return a;
}

AxisTransform truncated_sign_axis(double M1) {
  require(M1 > 0, "truncated_sign_axis: M1 must be positive");
  AxisTransform a;
  a.phase = Phase::imaginary;
  a.r = [M1](double u) {
    if (u == 0.0) return 0.0;
    return (std::cos(4.0 * kPi * u * M1) - 1.0) / (kPi * u);
  };
  a.mass_pos = kInf;
  a.mass_neg = kInf;
  return a;
}

AxisTransform damp_axis(const AxisTransform& base, double h) {
  require(h > 0, "damp_axis: h must be positive");
  AxisTransform a;
  a.phase = base.phase;
  const double c = 2.0 * kPi * kPi * h * h;
  a.r = [r = base.r, c](double u) { return r(u) * std::exp(-c * u * u); };
  // exp(-c U^2) = e^-40 at the cutoff.
  const double U = std::sqrt(20.0) / (kPi * h);
  a.support = U;
  const std::size_t cells = 1u << 17;
  auto pos = tabulate(a.r, 1.0, U, cells);
  auto neg = tabulate(a.r, -1.0, U, cells);
  a.mass_pos = pos->total();
  a.mass_neg = neg->total();

  auto make = [&](const std::function<double(Rng&)>& base_sampler, double base_mass,
                  double damped_mass,
                  std::shared_ptr<TabulatedPart> tab) -> std::function<double(Rng&)> {
    if (damped_mass <= 0) return {};
    bool rejection = base_sampler && std::isfinite(base_mass) && base_mass > 0 &&
                     damped_mass / base_mass >= 1e-3;
    if (rejection) {
      return [base_sampler, c](Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (;;) {
          double u = base_sampler(rng);
          if (unif(rng) <= std::exp(-c * u * u)) return u;
        }
      };
    }
    return [tab](Rng& rng) { return tab->sample(rng); };
  };
  a.sample_pos = make(base.sample_pos, base.mass_pos, a.mass_pos, pos);
  a.sample_neg = make(base.sample_neg, base.mass_neg, a.mass_neg, neg);
  return a;
}

KernelSpec shift_invariant_product(std::string id, std::vector<AxisFactor> factors) {
  require(!factors.empty(), "shift_invariant_product: at least one factor required");
  KernelSpec k;
  k.id = std::move(id);
  k.order = 2;
  k.dim = static_cast<int>(factors.size());
  k.tags = {Tag::shift_invariant, Tag::product_form};
  bool pd = true, piecewise = true;
  double sup = 1.0;
  k.jumps.resize(factors.size());
  for (std::size_t l = 0; l < factors.size(); ++l) {
    const auto& f = factors[l];
    pd &= f.transform && f.transform->phase == Phase::real && f.transform->mass_neg == 0.0;
    piecewise &= !f.jumps.empty();
    sup *= std::abs(f.value_at_zero);
    k.jumps[l] = f.jumps;
  }
  if (pd) {
    k.tags.insert(Tag::positive_definite);
    k.sup_bound = sup;
  }
  if (piecewise) k.tags.insert(Tag::piecewise_constant_factors);
  if (factors_symmetric(factors)) k.tags.insert(Tag::symmetric);
  bool any_jump = false;
  for (const auto& j : k.jumps) any_jump |= !j.empty();
  if (!any_jump) k.jumps.clear();
  k.eval = [fs = factors](PointSpan args) {
    const auto& x = args[0];
    const auto& y = args[1];
    double v = 1.0;
    for (std::size_t l = 0; l < fs.size(); ++l) v *= fs[l].fn(x[l] - y[l]);
    return v;
  };
  k.factors = std::move(factors);
  return k;
}

AxisFactor truncated_sign_factor(double M1) {
  AxisFactor f;
  f.fn = [M1](double v) { return std::abs(v) <= 2.0 * M1 ? sign(v) : 0.0; };
  f.jumps = {-2.0 * M1, 0.0, 2.0 * M1};
  f.transform = truncated_sign_axis(M1);
  f.value_at_zero = 0.0;
  return f;
}

KernelSpec truncated_kendall(double M1) {
  auto k = shift_invariant_product("kendall_truncated",
                                   {truncated_sign_factor(M1), truncated_sign_factor(M1)});
  k.sup_bound = 1.0;
  return k;
}

}  // namespace depstat
