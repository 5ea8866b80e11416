#include <algorithm>
#include <cmath>
#include <map>

#include "depstat/expansion.hpp"
#include "expansion_builder.hpp"

namespace depstat {

namespace {

constexpr int kEmpty = -2;

int total_arity(const std::vector<CombinePart>& parts) {
  int m = 0;
  for (const auto& p : parts) {
    require(static_cast<int>(p.slots.size()) == p.expansion.m,
            "combine: slot map size must equal the part order");
    for (int s : p.slots) {
      require(s >= 0, "combine: negative slot");
      m = std::max(m, s + 1);
    }
  }
  return m;
}

void check_common(const std::vector<CombinePart>& parts) {
  require(!parts.empty(), "combine: no parts");
  for (const auto& p : parts)
    require(p.expansion.d == parts.front().expansion.d, "combine: parts differ in dimension");
}

ApproxDomain combined_domain(const std::vector<CombinePart>& parts, int m) {
  ApproxDomain dom = parts.front().expansion.domain;
  for (std::size_t i = 1; i < parts.size(); ++i) dom = intersect(dom, parts[i].expansion.domain);
  dom.m = m;
  return dom;
}

ExpansionConstants max_constants(const std::vector<CombinePart>& parts) {
  ExpansionConstants c{0.0, 0.0, 0.0};
  for (const auto& p : parts) {
    c.B = std::max(c.B, p.expansion.constants.B);
    c.mu = std::max(c.mu, p.expansion.constants.mu);
  }
  return c;
}

std::optional<double> max_lip(const std::vector<CombinePart>& parts) {
  double L = 0.0;
  for (const auto& p : parts) {
    if (!p.expansion.lip_L) return std::nullopt;
    L = std::max(L, *p.expansion.lip_L);
  }
  return L;
}

bool within_budget(double part_t, double budget) {
  return part_t <= budget * (1.0 + 1e-12);
}

struct Piece {
  Basis basis;
  double weight;
};

bool is_constant(const Basis& b) {
  return b.kind == BasisKind::cosine && (b.freq.array() == 0.0).all();
}

// a(x) * b(x) as a short trig combination.
std::vector<Piece> multiply(const Basis& a, const Basis& b) {
  if (is_constant(a)) return {{b, 1.0}};
  if (is_constant(b)) return {{a, 1.0}};
  if (a.kind == BasisKind::coordinate || b.kind == BasisKind::coordinate)
    throw UnsupportedError("combine_mul: product of coordinate bases at a shared argument");
  Eigen::VectorXd sum = a.freq + b.freq;
  Eigen::VectorXd diff = a.freq - b.freq;
  const auto C = BasisKind::cosine;
  const auto S = BasisKind::sine;
  if (a.kind == C && b.kind == C) return {{{C, diff, 0}, 0.5}, {{C, sum, 0}, 0.5}};
  if (a.kind == S && b.kind == S) return {{{C, diff, 0}, 0.5}, {{C, sum, 0}, -0.5}};
  if (a.kind == S) return {{{S, sum, 0}, 0.5}, {{S, diff, 0}, 0.5}};
  return {{{S, sum, 0}, 0.5}, {{S, diff, 0}, -0.5}};
}

}  // namespace

ExpandedKernel combine_add(const std::vector<CombinePart>& parts, double t,
                           bool symmetrize_output) {
  check_common(parts);
  require(t > 0, "combine_add: t must be positive");
  const int m = total_arity(parts);
  const int d = parts.front().expansion.d;
  double lambda_sum = 0.0;
  for (const auto& p : parts) lambda_sum += std::abs(p.lambda);
  require(lambda_sum > 0, "combine_add: all weights are zero");
  for (const auto& p : parts) {
    std::vector<int> s = p.slots;
    std::sort(s.begin(), s.end());
    require(std::adjacent_find(s.begin(), s.end()) == s.end(),
            "combine_add: a part uses the same slot twice");
    if (!within_budget(p.expansion.target_t, t / lambda_sum))
      throw ArgumentError("combine_add: part budget t_i exceeds t / sum|lambda|");
  }

  detail::ExpansionBuilder builder(m, d);
  const int one = builder.constant_basis();
  for (const auto& p : parts) {
    const auto& e = p.expansion;
    for (Eigen::Index r = 0; r < e.terms.rows(); ++r) {
      std::vector<int> idx(m, one);
      double w = p.lambda * e.coeffs[r];
      for (int i = 0; i < e.m; ++i) idx[p.slots[i]] = builder.add_basis(e.bases[e.terms(r, i)], &w);
      builder.add_term(idx, w);
    }
  }
  if (symmetrize_output) builder.symmetrize();
  ExpandedKernel out = builder.finish();
  out.constants = max_constants(parts);
  for (const auto& p : parts) out.constants.F += std::abs(p.lambda) * p.expansion.constants.F;
  out.target_t = t;
  out.domain = combined_domain(parts, m);
  out.lip_L = max_lip(parts);
  out.seed = parts.front().expansion.seed;
  return out;
}

double mul_part_budget(const std::vector<double>& bounds, std::size_t i, double t) {
  require(i < bounds.size(), "mul_part_budget: index out of range");
  double prod = 1.0;
  for (double M : bounds) {
    require(M >= 1.0, "combine_mul: bounds must be >= 1");
    prod *= M + t;
  }
  return t * (bounds[i] + t) / (static_cast<double>(bounds.size()) * prod);
}

ExpandedKernel combine_mul(const std::vector<CombinePart>& parts,
                           const std::vector<double>& bounds, double t,
                           bool symmetrize_output) {
  check_common(parts);
  require(t > 0, "combine_mul: t must be positive");
  require(bounds.size() == parts.size(), "combine_mul: one bound per part required");
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (!within_budget(parts[i].expansion.target_t, mul_part_budget(bounds, i, t)))
      throw ArgumentError("combine_mul: part budget t_i exceeds t(M^i+t)/(N prod(M^j+t))");

  const int m = total_arity(parts);
  const int d = parts.front().expansion.d;
  detail::ExpansionBuilder builder(m, d);

  // Running product as a map from per-slot basis index (kEmpty if unused).
  std::map<std::vector<int>, double> current{{std::vector<int>(m, kEmpty), 1.0}};
  for (const auto& p : parts) {
    const auto& e = p.expansion;
    std::map<std::vector<int>, double> next;
    for (const auto& [idx, w0] : current) {
      for (Eigen::Index r = 0; r < e.terms.rows(); ++r) {
        // Expand slot by slot; shared slots may branch into two pieces.
        std::vector<std::pair<std::vector<int>, double>> partial{{idx, w0 * p.lambda * e.coeffs[r]}};
        for (int i = 0; i < e.m && !partial.empty(); ++i) {
          const int slot = p.slots[i];
          const Basis& b = e.bases[e.terms(r, i)];
          std::vector<std::pair<std::vector<int>, double>> grown;
          for (auto& [pi, pw] : partial) {
            if (pi[slot] == kEmpty) {
              double w = pw;
              int k = builder.add_basis(b, &w);
              if (k < 0) continue;
              auto q = pi;
              q[slot] = k;
              grown.emplace_back(std::move(q), w);
              continue;
            }
            for (const auto& piece : multiply(builder.basis(pi[slot]), b)) {
              double w = pw * piece.weight;
              int k = builder.add_basis(piece.basis, &w);
              if (k < 0) continue;
              auto q = pi;
              q[slot] = k;
              grown.emplace_back(std::move(q), w);
            }
          }
          partial = std::move(grown);
        }
        for (auto& [pi, pw] : partial) next[pi] += pw;
      }
    }
    current = std::move(next);
  }
  const int one = builder.constant_basis();
  for (const auto& [key, w] : current) {
    auto idx = key;
    for (int& k : idx)
      if (k == kEmpty) k = one;
    builder.add_term(idx, w);
  }
  if (symmetrize_output) builder.symmetrize();
  ExpandedKernel out = builder.finish();
  out.constants = max_constants(parts);
  out.constants.F = 1.0;
  for (const auto& p : parts) out.constants.F *= std::abs(p.lambda) * p.expansion.constants.F;
  out.target_t = t;
  out.domain = combined_domain(parts, m);
  out.lip_L = max_lip(parts);
  out.seed = parts.front().expansion.seed;
  return out;
}

ExpandedKernel embed_coordinates(const ExpandedKernel& e, int target_d,
                                 const std::vector<int>& coords) {
  require(static_cast<int>(coords.size()) == e.d, "embed_coordinates: one target per coordinate");
  for (int c : coords) require(c >= 0 && c < target_d, "embed_coordinates: target out of range");
  ExpandedKernel out = e;
  out.d = target_d;
  for (auto& b : out.bases) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(target_d);
    for (int l = 0; l < e.d; ++l) u[coords[l]] = b.freq[l];
    b.freq = u;
    if (b.kind == BasisKind::coordinate) b.coord = coords[b.coord];
  }
  out.domain.d = target_d;
  std::vector<std::vector<double>> jumps(static_cast<std::size_t>(target_d));
  for (std::size_t l = 0; l < e.domain.jumps.size(); ++l) jumps[coords[l]] = e.domain.jumps[l];
  out.domain.jumps = jumps;
  return out;
}

}  // namespace depstat
