#include <cmath>

#include "depstat/expansion.hpp"
#include "depstat/kernel.hpp"

namespace depstat {

namespace {

double sgn(double v) { return (v > 0) - (v < 0); }

std::function<double(double)> unit_mu() {
  return [](double) { return 1.0; };
}

ApproxDomain box_domain(int m, int d, double M) {
  ApproxDomain dom;
  dom.m = m;
  dom.d = d;
  dom.halfwidth = M;
  return dom;
}

ApproxDomain jump_domain(int m, int d, double M1, double M2,
                         std::vector<std::vector<double>> jumps) {
  ApproxDomain dom = box_domain(m, d, M1);
  dom.margin = M2;
  dom.jumps = std::move(jumps);
  return dom;
}

std::vector<AxisFactor> repeat(const AxisFactor& f, int d) {
  return std::vector<AxisFactor>(static_cast<std::size_t>(d), f);
}

// Rows whose constants are F = 2 f0(0), B = mu = 1.
CatalogEntry pd_row(std::string id, std::string definition, const AxisFactor& factor,
                    int d) {
  CatalogEntry e;
  e.kernel = shift_invariant_product(std::move(id), repeat(factor, d));
  e.definition = std::move(definition);
  e.domain_formula = "[-M,M]^{2d}";
  e.domain = [d](const DomainParams& p) { return box_domain(2, d, p.M); };
  double f00 = std::pow(factor.value_at_zero, d);
  e.constants = [f00](const DomainParams&) {
    ConstantsRow row;
    row.F = 2.0 * f00;
    row.mu = unit_mu();
    row.F_formula = "2 f0(0)";
    row.B_formula = "1";
    row.mu_formula = "1";
    row.parameter_free = true;
    return row;
  };
  return e;
}

CatalogEntry linear_row(int d) {
  CatalogEntry e;
  e.kernel.id = "linear";
  e.kernel.order = 2;
  e.kernel.dim = d;
  e.kernel.tags = {Tag::symmetric, Tag::positive_definite};
  e.kernel.eval = [](PointSpan a) { return a[0].dot(a[1]); };
  e.definition = "x'y";
  e.domain_formula = "[-M,M]^{2d}";
  e.domain = [d](const DomainParams& p) { return box_domain(2, d, p.M); };
  e.constants = [d](const DomainParams& p) {
    ConstantsRow row;
    row.F = d;
    row.B = p.M;
    auto norm = p.coordinate_norm;
    row.mu = [norm](double a) {
      if (!norm) throw ArgumentError("linear kernel: mu_a requires the data distribution");
      return norm(a);
    };
    row.F_formula = "d";
    row.B_formula = "M";
    row.mu_formula = "max_l (E|X_l|^a)^(1/a)";
    return row;
  };
  return e;
}

}  // namespace

std::vector<std::string> catalog_ids() {
  return {"linear", "gaussian", "laplacian", "cauchy", "hat",
          "cosine", "box1",     "kendall",   "spearman"};
}

std::vector<CatalogEntry> builtin_catalog(int d) {
  require(d >= 1, "builtin_catalog: d must be >= 1");
  std::vector<CatalogEntry> rows;
  rows.push_back(linear_row(d));

  AxisFactor gauss;
  gauss.fn = [](double v) { return std::exp(-0.5 * v * v); };
  gauss.transform = gaussian_axis();
  gauss.lipschitz = std::exp(-0.5);
  rows.push_back(pd_row("gaussian", "exp(-||x-y||^2/2)", gauss, d));

  AxisFactor lap;
  lap.fn = [](double v) { return std::exp(-std::abs(v)); };
  lap.transform = laplacian_axis();
  lap.lipschitz = 1.0;
  rows.push_back(pd_row("laplacian", "exp(-||x-y||_1)", lap, d));

  AxisFactor cau;
  cau.fn = [](double v) { return 2.0 / (1.0 + v * v); };
  cau.transform = cauchy_axis();
  cau.lipschitz = 3.0 * std::sqrt(3.0) / 4.0;
  cau.value_at_zero = 2.0;
  rows.push_back(pd_row("cauchy", "prod_l 2/(1+(x_l-y_l)^2)", cau, d));

  AxisFactor hat;
  hat.fn = [](double v) { return std::abs(v) <= 1.0 ? 1.0 - std::abs(v) : 0.0; };
  hat.transform = hat_axis();
  hat.lipschitz = 1.0;
  {
    auto e = pd_row("hat", "(1-|x-y|) 1(|x-y|<=1)", hat, 1);
    e.domain_formula = "[-M,M]^2";
    rows.push_back(e);
  }

  {
    AxisFactor cosf;
    cosf.fn = [](double v) { return std::abs(v) <= kPi / 2.0 ? std::cos(v) : 0.0; };
    cosf.transform = cosine_axis();
    cosf.lipschitz = 1.0;
    CatalogEntry e;
    e.kernel = shift_invariant_product("cosine", {cosf});
    e.kernel.sup_bound = 1.0;
    e.definition = "cos(x-y) 1(|x-y|<=pi/2)";
    e.domain_formula = "[-M,M]^2";
    e.domain = [](const DomainParams& p) { return box_domain(2, 1, p.M); };
    e.constants = [](const DomainParams&) {
      FInputs in;
      in.m = 2;
      in.d = 1;
      in.shift_invariant = true;
      in.eps = 1.0;
      in.L_F = 2.0;
      ConstantsRow row;
      row.F = expansion_F(FRegime::B2, in);
      row.mu = unit_mu();
      row.F_formula = "(1+1/eps) 4 Gamma1(1) L_F, eps=1, L_F=2";
      row.B_formula = "1";
      row.mu_formula = "1";
      row.parameter_free = true;
      return row;
    };
    rows.push_back(e);
  }

  {
    AxisFactor box;
    box.fn = [](double v) { return std::abs(v) <= 1.0 ? 1.0 : 0.0; };
    box.jumps = {-1.0, 1.0};
    box.transform = box_axis();
    CatalogEntry e;
    e.kernel = shift_invariant_product("box1", {box});
    e.kernel.sup_bound = 1.0;
    e.definition = "1(|x-y|<=1)";
    e.domain_formula = "[-M1,M1]^2, |x-y-(+-1)| >= M2";
    e.domain = [](const DomainParams& p) {
      return jump_domain(2, 1, p.M1, p.M2, {{-1.0, 1.0}});
    };
    e.constants = [](const DomainParams& p) {
      ConstantsRow row;
      row.F = p.C * std::log(1.0 / p.M2) + p.C * std::log(std::log(1.0 / p.t));
      row.mu = unit_mu();
      row.F_formula = "C log(1/M2) + C log log(1/t)";
      row.B_formula = "1";
      row.mu_formula = "1";
      return row;
    };
    rows.push_back(e);
  }

  auto log2_shape = [](const DomainParams& p) {
    double a = std::log(p.M1 / p.M2);
    double b = std::log(std::log(1.0 / p.t));
    return p.C * a * a + p.C * b * b;
  };

  {
    AxisFactor sign_factor;
    sign_factor.fn = [](double v) { return sgn(v); };
    sign_factor.jumps = {0.0};
    sign_factor.value_at_zero = 0.0;
    CatalogEntry e;
    e.kernel = shift_invariant_product("kendall", {sign_factor, sign_factor});
    e.kernel.sup_bound = 1.0;
    e.definition = "sign(x1-y1) sign(x2-y2)";
    e.domain_formula = "[-M1,M1]^4, |x_l-y_l-y_k| >= M2, y_k in {-2M1,0,2M1}";
    e.domain = [](const DomainParams& p) {
      std::vector<double> j = {-2.0 * p.M1, 0.0, 2.0 * p.M1};
      return jump_domain(2, 2, p.M1, p.M2, {j, j});
    };
    e.constants = [log2_shape](const DomainParams& p) {
      ConstantsRow row;
      row.F = log2_shape(p);
      row.mu = unit_mu();
      row.F_formula = "C log^2(M1/M2) + C log^2 log(1/t)";
      row.B_formula = "1";
      row.mu_formula = "1";
      return row;
    };
    rows.push_back(e);
  }

  {
    CatalogEntry e;
    e.kernel.id = "spearman";
    e.kernel.order = 3;
    e.kernel.dim = 2;
    e.kernel.tags = {Tag::piecewise_constant_factors};
    e.kernel.eval = [](PointSpan a) {
      return sgn(a[0][0] - a[1][0]) * sgn(a[0][1] - a[2][1]);
    };
    e.kernel.jumps = {{0.0}, {0.0}};
    e.kernel.sup_bound = 1.0;
    e.definition = "sign(x1-y1) sign(x2-z2)";
    e.domain_formula = "[-M1,M1]^6, pairwise |diff_l - y_k| >= M2, y_k in {-2M1,0,2M1}";
    e.domain = [](const DomainParams& p) {
      std::vector<double> j = {-2.0 * p.M1, 0.0, 2.0 * p.M1};
      return jump_domain(3, 2, p.M1, p.M2, {j, j});
    };
    e.constants = [log2_shape](const DomainParams& p) {
      ConstantsRow row;
      row.F = log2_shape(p);
      row.mu = unit_mu();
      row.F_formula = "C log^2(M1/M2) + C log^2 log(1/t)";
      row.B_formula = "1";
      row.mu_formula = "1";
      return row;
    };
    rows.push_back(e);
  }
  return rows;
}

CatalogEntry catalog_entry(const std::string& id, int d) {
  for (auto& e : builtin_catalog(d))
    if (e.kernel.id == id) return e;
  throw UnsupportedError("unknown kernel id '" + id + "'");
}

}  // namespace depstat
