#include "depstat/expansion.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "expansion_builder.hpp"

namespace depstat {

namespace detail {

int ExpansionBuilder::trig_basis(BasisKind kind, const Eigen::VectorXd& freq, double* weight) {
  Eigen::VectorXd u = freq;
  int first = -1;
  for (int i = 0; i < u.size(); ++i) {
    if (u[i] == 0.0) u[i] = 0.0;  // drop negative zero
    if (first < 0 && u[i] != 0.0) first = i;
  }
  if (first < 0) {
    if (kind == BasisKind::sine) return -1;
  } else if (u[first] < 0) {
    u = -u;
    if (kind == BasisKind::sine) *weight = -*weight;
  }
  Key key{static_cast<int>(kind), std::vector<double>(u.data(), u.data() + u.size())};
  auto [it, inserted] = index_.emplace(key, static_cast<int>(bases_.size()));
  if (inserted) bases_.push_back(Basis{kind, u, 0});
  return it->second;
}

int ExpansionBuilder::coordinate_basis(int coord) {
  Key key{static_cast<int>(BasisKind::coordinate), {static_cast<double>(coord)}};
  auto [it, inserted] = index_.emplace(key, static_cast<int>(bases_.size()));
  if (inserted) bases_.push_back(Basis{BasisKind::coordinate, Eigen::VectorXd::Zero(d_), coord});
  return it->second;
}

int ExpansionBuilder::add_basis(const Basis& b, double* weight) {
  if (b.kind == BasisKind::coordinate) return coordinate_basis(b.coord);
  return trig_basis(b.kind, b.freq, weight);
}

void ExpansionBuilder::add_term(const std::vector<int>& idx, double w) {
  for (int i : idx)
    if (i < 0) return;
  terms_[idx] += w;
}

void ExpansionBuilder::symmetrize() {
  std::map<std::vector<int>, double> out;
  std::vector<int> perm(m_);
  std::iota(perm.begin(), perm.end(), 0);
  double count = 0;
  do count += 1;
  while (std::next_permutation(perm.begin(), perm.end()));
  for (const auto& [idx, w] : terms_) {
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<int> p(m_);
      for (int i = 0; i < m_; ++i) p[i] = idx[perm[i]];
      out[p] += w / count;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  terms_ = std::move(out);
}

ExpandedKernel ExpansionBuilder::finish() const {
  ExpandedKernel e;
  e.m = m_;
  e.d = d_;
  std::vector<int> remap(bases_.size(), -1);
  std::size_t live = 0;
  for (const auto& [idx, w] : terms_) {
    if (w == 0.0) continue;
    ++live;
    for (int i : idx) remap[i] = 0;
  }
  for (std::size_t j = 0; j < bases_.size(); ++j) {
    if (remap[j] < 0) continue;
    remap[j] = static_cast<int>(e.bases.size());
    e.bases.push_back(bases_[j]);
  }
  e.terms.resize(static_cast<Eigen::Index>(live), m_);
  e.coeffs.resize(static_cast<Eigen::Index>(live));
  Eigen::Index r = 0;
  for (const auto& [idx, w] : terms_) {
    if (w == 0.0) continue;
    for (int i = 0; i < m_; ++i) e.terms(r, i) = remap[idx[i]];
    e.coeffs[r] = w;
    ++r;
  }
  return e;
}

std::vector<TrigProduct> expand_angle_sum(BasisKind outer, int m) {
  std::vector<TrigProduct> c{{1.0, {BasisKind::cosine}}};
  std::vector<TrigProduct> s{{1.0, {BasisKind::sine}}};
  for (int k = 1; k < m; ++k) {
    std::vector<TrigProduct> c2, s2;
    auto extend = [](const std::vector<TrigProduct>& src, double sign, BasisKind kind,
                     std::vector<TrigProduct>& dst) {
      for (auto t : src) {
        t.sign *= sign;
        t.kinds.push_back(kind);
        dst.push_back(std::move(t));
      }
    };
    // cos(A + b) = cos A cos b - sin A sin b; sin(A + b) = sin A cos b + cos A sin b
    extend(c, 1.0, BasisKind::cosine, c2);
    extend(s, -1.0, BasisKind::sine, c2);
    extend(s, 1.0, BasisKind::cosine, s2);
    extend(c, 1.0, BasisKind::sine, s2);
    c = std::move(c2);
    s = std::move(s2);
  }
  return outer == BasisKind::cosine ? c : s;
}

}  // namespace detail

namespace {

constexpr double kTwoPi = 2.0 * kPi;

ApproxDomain box(int m, int d, double M) {
  ApproxDomain dom;
  dom.m = m;
  dom.d = d;
  dom.halfwidth = M;
  return dom;
}

std::vector<AxisFactor> require_factors(const KernelSpec& spec, const char* who) {
  if (spec.factors.empty() || spec.order != 2)
    throw UnsupportedError(std::string(who) + ": kernel '" + spec.id +
                           "' is not a shift-invariant product kernel");
  return spec.factors;
}

// Gauss-Legendre nodes and weights on [-1, 1].
const std::vector<std::pair<double, double>>& gauss_legendre16() {
  static const std::vector<std::pair<double, double>> rule = [] {
    const int n = 16;
    std::vector<std::pair<double, double>> out;
    for (int i = 1; i <= n; ++i) {
      double x = std::cos(kPi * (i - 0.25) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) {
          // recompute derivative at the converged node
          double q0 = 1.0, q1 = x;
          for (int k = 2; k <= n; ++k) {
            double q2 = ((2.0 * k - 1.0) * x * q1 - (k - 1.0) * q0) / k;
            q0 = q1;
            q1 = q2;
          }
          dp = n * (x * q1 - q0) / (x * x - 1.0);
          out.emplace_back(x, 2.0 / ((1.0 - x * x) * dp * dp));
          break;
        }
      }
    }
    return out;
  }();
  return rule;
}

// int g(delta - h z) phi(z) dz, panels split at the jumps of g.
double gaussian_convolve(const std::function<double(double)>& g, const std::vector<double>& jumps,
                         double delta, double h) {
  const double zmax = 12.0;
  std::vector<double> cuts{-zmax, zmax};
  for (double y : jumps) {
    double z = (delta - y) / h;
    if (std::abs(z) < zmax) cuts.push_back(z);
  }
  std::sort(cuts.begin(), cuts.end());
  const auto& rule = gauss_legendre16();
  NeumaierSum acc;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double a = cuts[k], b = cuts[k + 1];
    int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.25)));
    double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      double lo = a + p * w;
      for (auto [x, wt] : rule) {
        double z = lo + 0.5 * w * (x + 1.0);
        double phi = std::exp(-0.5 * z * z) / std::sqrt(kTwoPi);
        acc.add(0.5 * w * wt * phi * g(delta - h * z));
      }
    }
  }
  return acc.value();
}

void validate_positive(double v, const char* name) {
  if (!(v > 0)) throw ArgumentError(std::string(name) + " must be positive");
}

}  // namespace

double Basis::operator()(const Eigen::VectorXd& x) const {
  switch (kind) {
    case BasisKind::cosine: return std::cos(kTwoPi * freq.dot(x));
    case BasisKind::sine: return std::sin(kTwoPi * freq.dot(x));
    default: return x[coord];
  }
}

Eigen::MatrixXd ExpandedKernel::basis_matrix(const Eigen::MatrixXd& points) const {
  require(points.cols() == d, "basis_matrix: point dimension mismatch");
  const Eigen::Index K = static_cast<Eigen::Index>(bases.size());
  Eigen::MatrixXd U(d, K);
  for (Eigen::Index j = 0; j < K; ++j) U.col(j) = bases[j].freq;
  Eigen::MatrixXd out = kTwoPi * (points * U);
  for (Eigen::Index j = 0; j < K; ++j) {
    switch (bases[j].kind) {
      case BasisKind::cosine: out.col(j) = out.col(j).array().cos(); break;
      case BasisKind::sine: out.col(j) = out.col(j).array().sin(); break;
      case BasisKind::coordinate: out.col(j) = points.col(bases[j].coord); break;
    }
  }
  return out;
}

double ExpandedKernel::evaluate(PointSpan args) const {
  require(static_cast<int>(args.size()) == m, "ExpandedKernel::evaluate: wrong arity");
  Eigen::MatrixXd values(m, static_cast<Eigen::Index>(bases.size()));
  for (int i = 0; i < m; ++i) {
    require(args[i].size() == d, "ExpandedKernel::evaluate: point dimension mismatch");
    for (std::size_t j = 0; j < bases.size(); ++j)
      values(i, static_cast<Eigen::Index>(j)) = bases[j](args[i]);
  }
  NeumaierSum acc;
  for (Eigen::Index r = 0; r < terms.rows(); ++r) {
    double v = coeffs[r];
    for (int i = 0; i < m; ++i) v *= values(i, terms(r, i));
    acc.add(v);
  }
  return acc.value();
}

GammaConstants gamma_constants(int n) {
  require(n >= 1, "gamma_constants: n must be >= 1");
  if (n > 200) {
    double half = 0.5 * n;
    return {2.0 * std::pow(kPi, half) / std::tgamma(half),
            std::sqrt(2.0) * std::exp(std::lgamma(half + 0.5) - std::lgamma(half))};
  }
  // Two-step recurrences from n = 1, 2 keep small dimensions exact
  // (Gamma1(1) = 2, Gamma1(2) = 2 pi).
  double g1 = n % 2 ? 2.0 : 2.0 * kPi;
  double g2 = n % 2 ? std::sqrt(2.0 / kPi) : std::sqrt(kPi / 2.0);
  for (int k = n % 2 ? 1 : 2; k + 2 <= n; k += 2) {
    g1 *= 2.0 * kPi / k;
    g2 *= (k + 1.0) / k;
  }
  return {g1, g2};
}

ExpandedKernel rff_expand_pd(const KernelSpec& spec, double M, double t, int K,
                             std::uint64_t seed) {
  validate_positive(t, "rff_expand_pd: t");
  validate_positive(M, "rff_expand_pd: M");
  require(K >= 1, "rff_expand_pd: K must be >= 1");
  if (!spec.tags.has(Tag::shift_invariant) || !spec.tags.has(Tag::positive_definite))
    throw UnsupportedError("rff_expand_pd: kernel '" + spec.id +
                           "' is not shift-invariant positive definite");
  require_factors(spec, "rff_expand_pd");
  auto spectrum = spectral_density(spec);
  const auto& density = spectrum.density;
  auto masses = density.part_masses();
  if (masses[1] != 0.0 || masses[2] != 0.0 || masses[3] != 0.0)
    throw UnsupportedError("rff_expand_pd: transform is not nonnegative");
  double f00 = 1.0;
  for (const auto& f : spec.factors) f00 *= f.value_at_zero;

  Rng rng(seed);
  detail::ExpansionBuilder builder(2, spec.dim);
  double max_norm = 0.0;
  for (int j = 0; j < K; ++j) {
    Eigen::VectorXd u = density.sample(SignPart::real_pos, rng);
    max_norm = std::max(max_norm, u.norm());
    // A sign flip of u cancels in cos*cos and sin*sin.
    double unused = 1.0;
    int c = builder.trig_basis(BasisKind::cosine, u, &unused);
    int s = builder.trig_basis(BasisKind::sine, u, &unused);
    builder.add_term({c, c}, f00 / K);
    builder.add_term({s, s}, f00 / K);
  }
  ExpandedKernel e = builder.finish();
  e.constants = {2.0 * f00, 1.0, 1.0};
  e.target_t = t;
  e.domain = box(2, spec.dim, M);
  e.lip_L = kTwoPi * max_norm;
  e.seed = seed;
  return e;
}

std::array<int, 4> allocate_parts(const SpectralDensity& density, int K) {
  auto masses = density.part_masses();
  double total = masses[0] + masses[1] + masses[2] + masses[3];
  if (!std::isfinite(total) || total <= 0)
    throw UnsupportedError("allocate_parts: spectral masses are not finite");
  std::array<int, 4> D{};
  for (int p = 0; p < 4; ++p) {
    if (masses[p] <= 0) continue;
    D[p] = std::max(1, static_cast<int>(std::llround(K * masses[p] / total)));
  }
  return D;
}

ExpandedKernel rff_expand_general(const KernelSpec& spec, double M, double t,
                                  std::array<int, 4> D, std::uint64_t seed) {
  validate_positive(t, "rff_expand_general: t");
  validate_positive(M, "rff_expand_general: M");
  auto spectrum = spectral_density(spec);
  const auto& density = spectrum.density;
  if (!density.can_sample())
    throw UnsupportedError("rff_expand_general: kernel '" + spec.id +
                           "' has no sign-part samplers");
  const int m = spec.order;
  const int d = spec.dim;
  if (spectrum.lift == SpectralLift::shift_pair)
    require(m == 2 && density.dim() == d, "rff_expand_general: shift-pair lift needs m = 2");
  else
    require(density.dim() == m * d, "rff_expand_general: joint transform dimension mismatch");

  auto masses = density.part_masses();
  // s_D = A_g+ s_1 - A_g- s_2 - A_h+ s_3 + A_h- s_4 on cos, cos, sin, sin.
  const double part_sign[4] = {1.0, -1.0, -1.0, 1.0};
  const BasisKind part_kind[4] = {BasisKind::cosine, BasisKind::cosine, BasisKind::sine,
                                  BasisKind::sine};
  Rng rng(seed);
  detail::ExpansionBuilder builder(m, d);
  std::vector<int> idx(m);
  std::vector<Eigen::VectorXd> arg_freq(m);
  for (int p = 0; p < 4; ++p) {
    if (D[p] <= 0 || masses[p] <= 0) continue;
    const auto products = detail::expand_angle_sum(part_kind[p], m);
    const double w = part_sign[p] * masses[p] / D[p];
    for (int j = 0; j < D[p]; ++j) {
      Eigen::VectorXd u = density.sample(static_cast<SignPart>(p), rng);
      if (spectrum.lift == SpectralLift::shift_pair) {
        arg_freq[0] = u;
        arg_freq[1] = -u;
      } else {
        for (int i = 0; i < m; ++i) arg_freq[i] = u.segment(i * d, d);
      }
      for (const auto& prod : products) {
        double weight = w * prod.sign;
        for (int i = 0; i < m; ++i) idx[i] = builder.trig_basis(prod.kinds[i], arg_freq[i], &weight);
        builder.add_term(idx, weight);
      }
    }
  }
  if (spec.tags.has(Tag::symmetric)) builder.symmetrize();
  ExpandedKernel e = builder.finish();
  e.constants = {std::pow(2.0, m) * density.l1_norm(), 1.0, 1.0};
  e.target_t = t;
  e.domain = box(m, d, M);
  double max_norm = 0.0;
  for (const auto& b : e.bases) max_norm = std::max(max_norm, b.freq.norm());
  e.lip_L = kTwoPi * max_norm;
  e.seed = seed;
  return e;
}

int sample_size_heuristic(const SampleSizeInputs& in) {
  validate_positive(in.t, "sample_size_heuristic: t");
  validate_positive(in.M, "sample_size_heuristic: M");
  validate_positive(in.mu_q, "sample_size_heuristic: mu_q");
  validate_positive(in.l1_norm, "sample_size_heuristic: l1_norm");
  require(in.q >= 1, "sample_size_heuristic: q must be >= 1");
  const double md = in.m * in.d;
  const double diam = 2.0 * in.M * std::sqrt(md);
  const double c = 3.0 * std::sqrt(md / kPi);
  const double lead = md * in.l1_norm * in.l1_norm / (in.t * in.t);
  const double arg = 8.0 * kPi * c * diam * std::pow(in.l1_norm, 1.0 - 1.0 / in.q) * in.mu_q / in.t;
  const double K = std::ceil(in.c0 * lead * std::log(arg));
  return static_cast<int>(std::max(1.0, K));
}

KernelSpec mollify(const KernelSpec& spec, double h) {
  validate_positive(h, "mollify: h");
  auto factors = require_factors(spec, "mollify");
  std::vector<AxisFactor> out;
  for (const auto& f : factors) {
    if (!f.transform) throw UnsupportedError("mollify: factor without Fourier transform");
    AxisFactor g;
    g.fn = [fn = f.fn, jumps = f.jumps, h](double delta) {
      return gaussian_convolve(fn, jumps, delta, h);
    };
    g.transform = damp_axis(*f.transform, h);
    g.lipschitz = f.lipschitz;
    if (!std::isfinite(g.lipschitz) && !f.jumps.empty()) {
      // sum of jump sizes times the peak of the Gaussian density
      double total = 0.0;
      for (double y : f.jumps) total += std::abs(f.fn(y + 1e-12) - f.fn(y - 1e-12));
      g.lipschitz = total / (h * std::sqrt(kTwoPi));
    }
    g.value_at_zero = g.fn(0.0);
    out.push_back(std::move(g));
  }
  KernelSpec k = shift_invariant_product(spec.id + "_mollified", std::move(out));
  if (spec.tags.has(Tag::symmetric)) k.tags.insert(Tag::symmetric);
  k.sup_bound = spec.sup_bound;
  k.mollifier_h = h;
  return k;
}

double choose_h_lipschitz(double L, double t, int md) {
  validate_positive(L, "choose_h_lipschitz: L");
  validate_positive(t, "choose_h_lipschitz: t");
  return t / (2.0 * gamma_constants(md).gamma2 * L);
}

double choose_h_discontinuous(double M2, int d, double Delta, double t) {
  validate_positive(M2, "choose_h_discontinuous: M2");
  validate_positive(Delta, "choose_h_discontinuous: Delta");
  validate_positive(t, "choose_h_discontinuous: t");
  require(d >= 1, "choose_h_discontinuous: d must be >= 1");
  double arg = std::max(2.0 * d * std::pow(Delta, d) / t, 2.0);
  return M2 / (std::sqrt(2.0) * std::sqrt(std::log(arg)));
}

double expansion_F(FRegime kind, const FInputs& in) {
  require(in.m >= 1 && in.d >= 1, "expansion_F: m and d must be >= 1");
  const int n = in.shift_invariant ? in.d : in.m * in.d;
  const auto g = gamma_constants(n);
  const double two_m = std::pow(2.0, in.m);
  auto need = [](const std::optional<double>& v, const char* name) {
    if (!v) throw ArgumentError(std::string("expansion_F: missing input ") + name);
    return *v;
  };
  switch (kind) {
    case FRegime::B1: return two_m * need(in.l1_norm, "l1_norm");
    case FRegime::B2: {
      double eps = need(in.eps, "eps");
      validate_positive(eps, "expansion_F: eps");
      return (1.0 + 1.0 / eps) * two_m * g.gamma1 * need(in.L_F, "L_F");
    }
    case FRegime::B3: {
      double L = need(in.L, "L"), t = need(in.t, "t");
      validate_positive(t, "expansion_F: t");
      return 2.0 * two_m * g.gamma1 * need(in.L_F, "L_F") *
             std::log(std::max(2.0 * g.gamma2 * L / t, 2.0));
    }
    case FRegime::B4: {
      if (in.transform_l1_unit.empty() || in.transform_l1_unit.size() != in.C_ell.size())
        throw ArgumentError("expansion_F: B4 needs per-coordinate integrals and C_l");
      double h = need(in.h, "h");
      validate_positive(h, "expansion_F: h");
      double F = 4.0;
      for (std::size_t l = 0; l < in.C_ell.size(); ++l)
        F *= in.transform_l1_unit[l] + 4.0 * in.C_ell[l] * std::log(std::max(1.0 / h, 2.0));
      return F;
    }
  }
  throw ArgumentError("expansion_F: unknown regime");
}

double lipschitz_constant_tau(double t, double M, int m, int d, double q, double mu_q,
                              double l1_norm) {
  validate_positive(t, "lipschitz_constant_tau: t");
  validate_positive(M, "lipschitz_constant_tau: M");
  validate_positive(mu_q, "lipschitz_constant_tau: mu_q");
  validate_positive(l1_norm, "lipschitz_constant_tau: l1_norm");
  require(q >= 1, "lipschitz_constant_tau: q must be >= 1");
  const double md = m * d;
  double inner = std::pow(mu_q, q) * md * l1_norm * l1_norm / (t * t) *
                 std::log(48.0 * kPi * M * md * std::pow(l1_norm, 1.0 - 1.0 / q) * mu_q / t);
  return std::pow(inner, 1.0 / q);
}

ExpandedKernel linear_expansion(int d, double M) {
  require(d >= 1, "linear_expansion: d must be >= 1");
  detail::ExpansionBuilder builder(2, d);
  for (int l = 0; l < d; ++l) {
    int b = builder.coordinate_basis(l);
    builder.add_term({b, b}, 1.0);
  }
  ExpandedKernel e = builder.finish();
  e.constants = {static_cast<double>(d), M, 1.0};
  e.domain = box(2, d, M);
  e.lip_L = 1.0;
  return e;
}

int default_grid_resolution(int md) {
  if (md <= 2) return 200;
  if (md == 3) return 40;
  if (md == 4) return 16;
  throw UnsupportedError("grid certification is refused for md > 4");
}

ExpansionReport verify_sup_error(const KernelSpec& spec, const ExpandedKernel& e, int grid_res,
                                 std::uint64_t seed) {
  require(grid_res >= 16, "verify_sup_error: grid_res must be >= 16");
  require(spec.order == e.m && spec.dim == e.d, "verify_sup_error: kernel/expansion shape mismatch");
  const int m = e.m, d = e.d;
  if (m * d > 4) throw UnsupportedError("grid certification is refused for md > 4");
  const ApproxDomain& dom = e.domain;
  const double M = dom.halfwidth;

  // All grid points of [-M, M]^d, one per row.
  Eigen::Index P = 1;
  for (int l = 0; l < d; ++l) P *= grid_res;
  Eigen::MatrixXd grid(P, d);
  for (Eigen::Index p = 0; p < P; ++p) {
    Eigen::Index rest = p;
    for (int l = 0; l < d; ++l) {
      Eigen::Index k = rest % grid_res;
      rest /= grid_res;
      grid(p, l) = -M + 2.0 * M * static_cast<double>(k) / (grid_res - 1);
    }
  }
  const Eigen::MatrixXd phi = e.basis_matrix(grid);
  const std::size_t K = e.bases.size();

  std::vector<double> row_max;
  std::vector<std::size_t> row_count;
  if (m == 2) {
    Eigen::SparseMatrix<double> C(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index r = 0; r < e.terms.rows(); ++r)
      trip.emplace_back(e.terms(r, 0), e.terms(r, 1), e.coeffs[r]);
    C.setFromTriplets(trip.begin(), trip.end());
    const Eigen::MatrixXd right = C * phi.transpose();  // K x P
    row_max.assign(static_cast<std::size_t>(P), 0.0);
    row_count.assign(static_cast<std::size_t>(P), 0);
    parallel_for(static_cast<std::size_t>(P), [&](std::size_t a) {
      const Eigen::RowVectorXd approx = phi.row(static_cast<Eigen::Index>(a)) * right;
      std::vector<Eigen::VectorXd> args{grid.row(static_cast<Eigen::Index>(a)).transpose(),
                                        Eigen::VectorXd(d)};
      for (Eigen::Index b = 0; b < P; ++b) {
        args[1] = grid.row(b).transpose();
        if (!in_domain(dom, args)) continue;
        double err = std::abs(spec.eval(args) - approx[b]);
        row_max[a] = std::max(row_max[a], err);
        ++row_count[a];
      }
    });
  } else {
    Eigen::Index tuples = 1;
    for (int i = 1; i < m; ++i) tuples *= P;
    row_max.assign(static_cast<std::size_t>(P), 0.0);
    row_count.assign(static_cast<std::size_t>(P), 0);
    parallel_for(static_cast<std::size_t>(P), [&](std::size_t a) {
      std::vector<Eigen::VectorXd> args(m);
      std::vector<Eigen::Index> id(m);
      id[0] = static_cast<Eigen::Index>(a);
      for (Eigen::Index rest_all = 0; rest_all < tuples; ++rest_all) {
        Eigen::Index rest = rest_all;
        for (int i = 1; i < m; ++i) {
          id[i] = rest % P;
          rest /= P;
        }
        for (int i = 0; i < m; ++i) args[i] = grid.row(id[i]).transpose();
        if (!in_domain(dom, args)) continue;
        NeumaierSum acc;
        for (Eigen::Index r = 0; r < e.terms.rows(); ++r) {
          double v = e.coeffs[r];
          for (int i = 0; i < m; ++i) v *= phi(id[i], e.terms(r, i));
          acc.add(v);
        }
        double err = std::abs(spec.eval(args) - acc.value());
        row_max[a] = std::max(row_max[a], err);
        ++row_count[a];
      }
    });
  }

  ExpansionReport rep;
  rep.grid_resolution = grid_res;
  rep.K_used = K;
  rep.seed = seed;
  for (std::size_t a = 0; a < row_max.size(); ++a) {
    rep.grid_sup_error = std::max(rep.grid_sup_error, row_max[a]);
    rep.points_checked += row_count[a];
  }

  // Uniform random in-domain tuples.
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-M, M);
  const int n_random = 10 * grid_res;
  std::vector<std::vector<Eigen::VectorXd>> draws;
  for (int k = 0; k < n_random; ++k) {
    std::vector<Eigen::VectorXd> args(m, Eigen::VectorXd(d));
    bool found = false;
    for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
      for (auto& x : args)
        for (int l = 0; l < d; ++l) x[l] = unif(rng);
      found = in_domain(dom, args);
    }
    if (found) draws.push_back(std::move(args));
  }
  std::vector<double> rand_err(draws.size(), 0.0);
  parallel_for(draws.size(), [&](std::size_t k) {
    rand_err[k] = std::abs(spec.eval(draws[k]) - e.evaluate(draws[k]));
  });
  for (double v : rand_err) rep.grid_sup_error = std::max(rep.grid_sup_error, v);
  rep.points_checked += draws.size();

  if (rep.points_checked == 0) throw DomainError("verify_sup_error: domain has no grid points");
  rep.pass = rep.grid_sup_error <= e.target_t;
  return rep;
}

ExpandResult expand_kernel(const KernelSpec& spec, const ExpandOptions& opt) {
  validate_positive(opt.t, "expand_kernel: t");
  validate_positive(opt.M, "expand_kernel: M");
  ExpandResult res;
  res.target = spec;

  auto heuristic = [&](double l1, int d) {
    if (opt.K > 0) return opt.K;
    SampleSizeInputs in;
    in.t = opt.t;
    in.M = opt.M;
    in.m = 2;
    in.d = d;
    in.l1_norm = l1;
    in.c0 = opt.c0;
    return sample_size_heuristic(in);
  };

  if (spec.id == "linear") {
    res.expansion = linear_expansion(spec.dim, opt.M);
    res.expansion.target_t = opt.t;
    res.route = "exact";
    return res;
  }
  if (spec.id == "spearman") {
    // sign(x1 - y1) on slots (0, 1) times sign(x2 - z2) on slots (0, 2).
    auto one = shift_invariant_product("sign_truncated", {truncated_sign_factor(opt.M)});
    double h = choose_h_discontinuous(opt.M2, 1, 1.0, opt.t);
    auto smooth = mollify(one, h);
    std::vector<double> bounds{1.0, 1.0};
    double ti = mul_part_budget(bounds, 0, opt.t);
    auto density = spectral_density(smooth).density;
    int K = heuristic(density.l1_norm(), 1);
    auto part = rff_expand_general(smooth, opt.M, ti, allocate_parts(density, K), opt.seed);
    part.domain.margin = opt.M2;
    part.domain.jumps = {{-2.0 * opt.M, 0.0, 2.0 * opt.M}};
    std::vector<CombinePart> parts{{embed_coordinates(part, 2, {0}), {0, 1}, 1.0},
                                   {embed_coordinates(part, 2, {1}), {0, 2}, 1.0}};
    res.expansion = combine_mul(parts, bounds, opt.t);
    res.expansion.seed = opt.seed;
    res.route = "discontinuous_product";
    res.h = h;
    return res;
  }

  KernelSpec work = spec;
  if (spec.id == "kendall") work = truncated_kendall(opt.M);
  if (work.factors.empty())
    throw UnsupportedError("expand_kernel: no construction for kernel '" + spec.id + "'");

  bool has_jumps = false;
  for (const auto& f : work.factors) has_jumps |= !f.jumps.empty();

  if (work.tags.has(Tag::positive_definite) && !has_jumps) {
    auto density = spectral_density(work).density;
    if (density.can_sample()) {
      res.expansion = rff_expand_pd(work, opt.M, opt.t, heuristic(density.l1_norm(), work.dim),
                                    opt.seed);
      res.route = "pd";
      return res;
    }
  }

  if (!has_jumps) {
    double L = 0.0;
    for (const auto& f : work.factors) L = std::max(L, f.lipschitz);
    if (!std::isfinite(L)) throw UnsupportedError("expand_kernel: kernel is not Lipschitz");
    double h = choose_h_lipschitz(L, opt.t, work.dim);
    auto smooth = mollify(work, h);
    auto density = spectral_density(smooth).density;
    int K = heuristic(density.l1_norm(), work.dim);
    res.expansion = rff_expand_general(smooth, opt.M, opt.t, allocate_parts(density, K), opt.seed);
    res.route = "lipschitz";
    res.h = h;
    return res;
  }

  double h = choose_h_discontinuous(opt.M2, work.dim, 1.0, opt.t);
  auto smooth = mollify(work, h);
  auto density = spectral_density(smooth).density;
  int K = heuristic(density.l1_norm(), work.dim);
  res.expansion = rff_expand_general(smooth, opt.M, opt.t, allocate_parts(density, K), opt.seed);
  res.expansion.domain.margin = opt.M2;
  res.expansion.domain.jumps = work.jumps;
  res.route = "discontinuous";
  res.h = h;
  return res;
}

}  // namespace depstat
