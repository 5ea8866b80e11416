#include "depstat/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "depstat/bounds.hpp"
#include "depstat/common.hpp"
#include "depstat/expansion.hpp"
#include "depstat/indep_test.hpp"
#include "depstat/kernel.hpp"
#include "depstat/plr.hpp"
#include "depstat/processes.hpp"

namespace depstat {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------- configs

Json innovation_defaults() {
  return Json{{"kind", "gaussian"}, {"sigma", 1.0}, {"df", 5.0}, {"lo", -1.0}, {"hi", 1.0}};
}

Json ar_defaults(std::vector<double> coeffs) {
  return Json{{"coeffs", coeffs},
              {"innovation", innovation_defaults()},
              {"init", "automatic"},
              {"burn_in", 1000}};
}

Json design_defaults() {
  return Json{{"x", ar_defaults({0.5})},
              {"w", ar_defaults({0.5})},
              {"noise", innovation_defaults()},
              {"zero_noise", false},
              {"g", "2sin"}};
}

Json defaults_for(const std::string& cmd) {
  Json j;
  if (cmd == "constants") {
    j = {{"d_values", {1, 2, 3}}, {"M", 3.0}, {"M1", 5.0}, {"M2", 0.1}, {"t", 0.05}, {"C", 1.0}, {"a", 1.0}};
  } else if (cmd == "expand-verify") {
    j = {{"kernel", "gaussian"}, {"d", 1},     {"M", 3.0},  {"t", 0.05},
         {"K", 0},               {"M2", 0.1},  {"c0", 0.8}, {"seeds", 20},
         {"grid", 0},            {"required_pass_rate", 0.95}};
  } else if (cmd == "tail-bound") {
    j = {{"kind", "general"},
         {"variant", "a"},
         {"F", 2.0},
         {"B", 1.0},
         {"mu1", 1.0},
         {"mu_2_delta", 1.0},
         {"sigma2", nullptr},
         {"mixing", {{"kind", "alpha"}, {"gamma1", 1.0}, {"gamma2", 1.0}, {"delta", 1.0}, {"lip_L", nullptr}}},
         {"n", 1000},
         {"m", 2},
         {"r", 1},
         {"C1", 1.0},
         {"C2", 1.0},
         {"t", 0.0},
         {"t_prime", 0.0},
         {"residual", 0.0},
         {"x_grid", {0.5, 1.0, 2.0, 4.0, 8.0}},
         {"jumps", {{"f0_at_0", 0.0}, {"J_total", 0}, {"M2", 0.0}, {"D", 0.0}, {"tail_at_M1", Json::array()}}}};
  } else if (cmd == "simulate") {
    j = {{"process", "ar1"},
         {"n", 1000},
         {"ar", ar_defaults({0.5})},
         {"p", 2},
         {"innovation_corr", 0.0},
         {"plr", {{"p", 10}, {"s", 3}, {"beta_magnitude", 2.0}, {"design", design_defaults()}}}};
  } else if (cmd == "indep-test") {
    j = {{"p", 50},
         {"n", 1000},
         {"alpha", 0.05},
         {"ar", ar_defaults({0.3, 0.5})},
         {"innovation_corr", 0.0},
         {"sigma2_method", "closed_form_gaussian"},
         {"replication", 0}};
  } else if (cmd == "mdp-probe") {
    j = {{"kernel", "kendall"},
         {"d", 2},
         {"ar", ar_defaults({0.3, 0.5})},
         {"innovation_corr", 0.0},
         {"n", 2000},
         {"reps", 10000},
         {"x_grid", {0.0, 0.5, 1.0, 2.0}},
         {"nu", nullptr},
         {"theta", 0.0},
         {"u_variant", true}};
  } else if (cmd == "plr-fit") {
    j = {{"n", 400},          {"p", 100},         {"s", 3},           {"beta_magnitude", 2.0},
         {"c_h", 1.0},        {"c_lambda", 2.0},  {"h", nullptr},     {"lambda", nullptr},
         {"optimizer", "automatic"}, {"tol", 1e-8}, {"max_iter", 100000},
         {"design", design_defaults()}};
  } else if (cmd == "rate-study") {
    j = {{"ns", {200, 800}}, {"p", 100},       {"s", 3}, {"reps", 50},
         {"c_h", 1.0},       {"c_lambda", 2.0}, {"design", design_defaults()}};
  } else {
    throw ConfigError("unknown command '" + cmd + "'");
  }
  j["seed"] = 0;
  j["out"] = "out";
  return j;
}

bool compatible(const Json& def, const Json& val) {
  if (def.is_null() || val.is_null()) return true;
  if (def.is_number()) return val.is_number();
  return def.type() == val.type();
}

void merge(Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config" + (path.empty() ? "" : " '" + path + "'") + " must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge(slot, it.value(), key);
    } else {
      if (!compatible(slot, it.value())) throw ConfigError("config key '" + key + "' has the wrong type");
      slot = it.value();
    }
  }
}

void apply_override(Json& cfg, const std::string& dotted, const std::string& text) {
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json patch = value;
  std::string rest = dotted;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = Json{{*it, patch}};
  merge(cfg, patch, "");
}

Innovation innovation_from(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") return Innovation::gaussian(j.at("sigma").get<double>());
  if (kind == "student_t") return Innovation::student_t(j.at("df").get<double>());
  if (kind == "uniform") return Innovation::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  throw ConfigError("unknown innovation kind '" + kind + "'");
}

AR1Config ar_from(const Json& j) {
  AR1Config c;
  c.coeffs = j.at("coeffs").get<std::vector<double>>();
  c.innovation = innovation_from(j.at("innovation"));
  const std::string init = j.at("init").get<std::string>();
  if (init == "automatic")
    c.init = InitKind::automatic;
  else if (init == "exact_stationary")
    c.init = InitKind::exact_stationary;
  else if (init == "burn_in")
    c.init = InitKind::burn_in;
  else
    throw ConfigError("unknown init '" + init + "'");
  c.burn_in = j.at("burn_in").get<int>();
  c.validate();
  return c;
}

PLRDesign design_from(const Json& j) {
  PLRDesign d;
  d.x = ar_from(j.at("x"));
  d.w = ar_from(j.at("w"));
  d.noise = innovation_from(j.at("noise"));
  d.zero_noise = j.at("zero_noise").get<bool>();
  const std::string g = j.at("g").get<std::string>();
  if (g == "zero")
    d.g = nullptr;
  else if (g != "2sin")
    throw ConfigError("unknown g '" + g + "' (expected 2sin or zero)");
  return d;
}

// ---------------------------------------------------------------- outputs

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string num(double v) { return format_double(v); }
std::string num(long long v) { return std::to_string(v); }

struct Table {
  std::vector<std::pair<std::string, std::string>> columns;  // name, description
  std::vector<std::vector<std::string>> rows;
};

struct Context {
  std::string command;
  Json config;
  fs::path out;
  std::uint64_t seed = 0;
  Json results = Json::object();
  Json outputs = Json::array();
  Json columns = Json::object();

  void write_table(const std::string& name, const Table& t) {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (out / name).string());
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << csv_field(t.columns[j].first);
    os << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << csv_field(r[j]);
      os << '\n';
    }
    outputs.push_back(name);
    Json cols = Json::object();
    for (const auto& [c, d] : t.columns) cols[c] = d;
    columns[name] = cols;
  }

  void write_json(const std::string& name, const Json& j) {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (out / name).string());
    os << j.dump(2) << '\n';
    outputs.push_back(name);
  }

  void write_manifest() {
    Json m;
    m["command"] = command;
    m["version"] = {{"depstat", kVersion},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                  "." + std::to_string(EIGEN_MINOR_VERSION)}};
    m["seed"] = seed;
    // The output location is not an input; leaving it out keeps manifests
    // of identical runs byte-identical wherever they are written.
    m["config"] = config;
    m["config"].erase("out");
    m["outputs"] = outputs;
    m["columns"] = columns;
    m["results"] = results;
    std::ofstream os(out / "manifest.json", std::ios::binary);
    if (!os) throw ConfigError("cannot write manifest");
    os << m.dump(2) << '\n';
  }
};

// ---------------------------------------------------------------- commands

bool dimension_dependent(const std::string& id) {
  return id == "linear" || id == "gaussian" || id == "laplacian" || id == "cauchy";
}

void cmd_constants(Context& ctx) {
  const Json& c = ctx.config;
  DomainParams dp;
  dp.M = c.at("M").get<double>();
  dp.M1 = c.at("M1").get<double>();
  dp.M2 = c.at("M2").get<double>();
  dp.t = c.at("t").get<double>();
  dp.C = c.at("C").get<double>();
  const double a = c.at("a").get<double>();
  const auto ds = c.at("d_values").get<std::vector<int>>();
  if (ds.empty()) throw ConfigError("d_values must be nonempty");

  Table t;
  t.columns = {{"kernel", "catalog id"},
               {"d", "dimension of one argument"},
               {"F", "coefficient sum bound"},
               {"B", "basis sup bound on the domain"},
               {"mu", "basis moment mu_a at the configured a (NA if data dependent)"},
               {"parameter_free", "1 if F, B, mu do not depend on domain parameters"},
               {"F_formula", "symbolic F"},
               {"B_formula", "symbolic B"},
               {"mu_formula", "symbolic mu_a"},
               {"domain", "approximation domain"}};
  std::ostringstream screen;
  screen << std::left << std::setw(10) << "kernel" << std::setw(4) << "d" << std::setw(14) << "F"
         << std::setw(8) << "B" << std::setw(6) << "mu" << "domain\n";
  for (std::size_t di = 0; di < ds.size(); ++di) {
    for (const auto& e : builtin_catalog(ds[di])) {
      if (!dimension_dependent(e.kernel.id) && di > 0) continue;
      ConstantsRow row = e.constants(dp);
      std::string mu = "NA";
      try {
        mu = num(row.mu(a));
      } catch (const ArgumentError&) {
      }
      t.rows.push_back({e.kernel.id, num(static_cast<long long>(e.kernel.dim)), num(row.F), num(row.B), mu,
                        row.parameter_free ? "1" : "0", row.F_formula, row.B_formula, row.mu_formula,
                        e.domain_formula});
      screen << std::left << std::setw(10) << e.kernel.id << std::setw(4) << e.kernel.dim << std::setw(14)
             << num(row.F) << std::setw(8) << num(row.B) << std::setw(6) << mu << e.domain_formula << '\n';
    }
  }
  std::cout << screen.str();
  ctx.write_table("constants.csv", t);
  ctx.results["rows"] = t.rows.size();
}

void cmd_expand_verify(Context& ctx) {
  const Json& c = ctx.config;
  const auto entry = catalog_entry(c.at("kernel").get<std::string>(), c.at("d").get<int>());
  ExpandOptions opt;
  opt.M = c.at("M").get<double>();
  opt.t = c.at("t").get<double>();
  opt.K = c.at("K").get<int>();
  opt.M2 = c.at("M2").get<double>();
  opt.c0 = c.at("c0").get<double>();
  const int seeds = c.at("seeds").get<int>();
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  int grid = c.at("grid").get<int>();

  Table t;
  t.columns = {{"seed_index", "replication index"},
               {"seed", "derived expansion seed"},
               {"route", "construction route"},
               {"K", "number of bases"},
               {"h", "mollifier bandwidth (0 if none)"},
               {"grid_resolution", "grid points per axis"},
               {"points_checked", "grid and random points evaluated"},
               {"sup_error", "max |f - f~| over checked points"},
               {"pass", "1 if sup_error <= t"}};
  int passes = 0;
  for (int s = 0; s < seeds; ++s) {
    opt.seed = derive_seed(ctx.seed, static_cast<std::uint64_t>(s));
    ExpandResult r = expand_kernel(entry.kernel, opt);
    const int res = grid > 0 ? grid : default_grid_resolution(r.expansion.m * r.expansion.d);
    ExpansionReport rep = verify_sup_error(r.target, r.expansion, res, derive_seed(opt.seed, 1));
    passes += rep.pass;
    t.rows.push_back({num(static_cast<long long>(s)), std::to_string(opt.seed), r.route,
                      num(static_cast<long long>(rep.K_used)), num(r.h), num(static_cast<long long>(rep.grid_resolution)),
                      num(static_cast<long long>(rep.points_checked)), num(rep.grid_sup_error), rep.pass ? "1" : "0"});
  }
  ctx.write_table("expand_verify.csv", t);
  const double rate = static_cast<double>(passes) / seeds;
  ctx.results["passes"] = passes;
  ctx.results["pass_rate"] = rate;
  ctx.results["meets_required_pass_rate"] = rate >= c.at("required_pass_rate").get<double>();
  std::cerr << "expand-verify: pass rate " << rate << " over " << seeds << " seeds\n";
}

void cmd_tail_bound(Context& ctx) {
  const Json& c = ctx.config;
  TailBoundInputs in;
  in.F = c.at("F").get<double>();
  in.B = c.at("B").get<double>();
  in.mu1 = c.at("mu1").get<double>();
  in.mu_2_delta = c.at("mu_2_delta").get<double>();
  in.n = c.at("n").get<int>();
  in.m = c.at("m").get<int>();
  in.r = c.at("r").get<int>();
  in.C1 = c.at("C1").get<double>();
  in.C2 = c.at("C2").get<double>();
  in.t = c.at("t").get<double>();
  in.t_prime = c.at("t_prime").get<double>();
  in.residual = c.at("residual").get<double>();
  if (c.at("sigma2").is_null()) {
    const Json& mj = c.at("mixing");
    MixingModel mm;
    const std::string kind = mj.at("kind").get<std::string>();
    if (kind == "alpha")
      mm.kind = MixingKind::alpha;
    else if (kind == "tau")
      mm.kind = MixingKind::tau;
    else
      throw ConfigError("unknown mixing kind '" + kind + "'");
    mm.gamma1 = mj.at("gamma1").get<double>();
    mm.gamma2 = mj.at("gamma2").get<double>();
    mm.delta = mj.at("delta").get<double>();
    if (!mj.at("lip_L").is_null()) mm.lip_L = mj.at("lip_L").get<double>();
    in.sigma2 = sigma_sq(mm, in.mu_2_delta);
  } else {
    in.sigma2 = c.at("sigma2").get<double>();
  }
  in.validate();
  const std::string kind = c.at("kind").get<std::string>();
  JumpTerms jt;
  DiscontinuousVariant variant = DiscontinuousVariant::a;
  if (kind == "discontinuous") {
    const Json& jj = c.at("jumps");
    jt.f0_at_0 = jj.at("f0_at_0").get<double>();
    jt.J_total = jj.at("J_total").get<int>();
    jt.M2 = jj.at("M2").get<double>();
    jt.D = jj.at("D").get<double>();
    jt.tail_at_M1 = jj.at("tail_at_M1").get<std::vector<double>>();
    const std::string v = c.at("variant").get<std::string>();
    if (v == "b")
      variant = DiscontinuousVariant::b;
    else if (v != "a")
      throw ConfigError("variant must be a or b");
  } else if (kind != "general" && kind != "degenerate") {
    throw ConfigError("unknown bound kind '" + kind + "'");
  }

  Table t;
  t.columns = {{"x", "deviation level"},
               {"bound", "upper bound on P(|V_n - theta| >= shift)"},
               {"shift", "deviation threshold including the bias term"},
               {"vacuous", "1 if bound >= 1"}};
  for (double x : c.at("x_grid").get<std::vector<double>>()) {
    TailBound b = kind == "general"      ? tail_bound_general(in, x)
                  : kind == "degenerate" ? tail_bound_degenerate(in, x)
                                         : tail_bound_discontinuous(in, x, jt, variant);
    t.rows.push_back({num(x), num(b.value), num(b.shift), b.vacuous ? "1" : "0"});
  }
  ctx.write_table("tail_bound.csv", t);
  const BernSeq seq = bern_seq(in.F, in.B, in.mu1, in.sigma2, in.n, in.m);
  ctx.results["sigma2"] = in.sigma2;
  ctx.results["A"] = seq.A;
  ctx.results["M"] = seq.M;
  if (in.n >= 3) {
    const MdpDiagnostics md = mdp_condition_check(in.F, in.B, in.mu1, in.sigma2, in.n, in.m);
    ctx.results["mdp_ratio1"] = md.ratio1;
    ctx.results["mdp_ratio2"] = md.ratio2;
  }
}

void write_sample(Context& ctx, const std::string& name, const Eigen::MatrixXd& data,
                  const std::vector<std::string>& cols, const std::string& what) {
  Table t;
  for (const auto& c : cols) t.columns.push_back({c, what});
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::vector<std::string> r;
    for (Eigen::Index j = 0; j < data.cols(); ++j) r.push_back(num(data(i, j)));
    t.rows.push_back(std::move(r));
  }
  ctx.write_table(name, t);
}

void cmd_simulate(Context& ctx) {
  const Json& c = ctx.config;
  const std::string process = c.at("process").get<std::string>();
  const int n = c.at("n").get<int>();
  if (process == "ar1") {
    ProcessSample s = simulate_ar1(ar_from(c.at("ar")), n, ctx.seed);
    write_sample(ctx, "sample.csv", s.data, default_columns(s.config.dim()), "AR(1) coordinate");
  } else if (process == "pairs") {
    PairConfig pc;
    pc.ar = ar_from(c.at("ar"));
    pc.innovation_corr = c.at("innovation_corr").get<double>();
    const int p = c.at("p").get<int>();
    auto pairs = simulate_bivariate_pairs(p, {pc}, n, ctx.seed);
    Eigen::MatrixXd all(static_cast<Eigen::Index>(p) * n, 3);
    for (int l = 0; l < p; ++l) {
      all.block(static_cast<Eigen::Index>(l) * n, 0, n, 1).setConstant(l);
      all.block(static_cast<Eigen::Index>(l) * n, 1, n, 2) = pairs[static_cast<std::size_t>(l)].data;
    }
    write_sample(ctx, "pairs.csv", all, {"pair_id", "c0", "c1"}, "pair index or coordinate");
  } else if (process == "plr") {
    const Json& pj = c.at("plr");
    const int p = pj.at("p").get<int>();
    const Eigen::VectorXd beta = alternating_beta(p, pj.at("s").get<int>(), pj.at("beta_magnitude").get<double>());
    PLRData d = simulate_plr(n, beta, design_from(pj.at("design")), ctx.seed);
    Eigen::MatrixXd all(n, p + 2);
    all.col(0) = d.Y;
    all.col(1) = d.W;
    all.rightCols(p) = d.X;
    std::vector<std::string> cols = {"Y", "W"};
    for (int k = 0; k < p; ++k) cols.push_back("X" + std::to_string(k));
    write_sample(ctx, "plr.csv", all, cols, "response, index variable or covariate");
  } else {
    throw ConfigError("unknown process '" + process + "'");
  }
}

void cmd_indep_test(Context& ctx) {
  const Json& c = ctx.config;
  PairConfig pc;
  pc.ar = ar_from(c.at("ar"));
  pc.innovation_corr = c.at("innovation_corr").get<double>();
  pc.validate();
  const int p = c.at("p").get<int>();
  const int n = c.at("n").get<int>();
  const double alpha = c.at("alpha").get<double>();
  const auto rep = c.at("replication").get<std::uint64_t>();
  const std::string method = c.at("sigma2_method").get<std::string>();

  auto pairs = simulate_bivariate_pairs(p, {pc}, n, ctx.seed, rep);
  std::vector<Eigen::MatrixXd> data;
  for (auto& s : pairs) data.push_back(std::move(s.data));
  std::vector<double> sigma2(data.size());
  Sigma2Method m;
  if (method == "closed_form_gaussian") {
    if (pc.ar.innovation.kind != Innovation::Kind::gaussian)
      throw ConfigError("closed_form_gaussian needs gaussian innovations");
    m = Sigma2Method::closed_form_gaussian;
    std::fill(sigma2.begin(), sigma2.end(), sigma2_kendall_ar1(pc.ar.coeffs[0], pc.ar.coeffs[1]).value);
  } else if (method == "plug_in") {
    m = Sigma2Method::plug_in;
    for (std::size_t l = 0; l < data.size(); ++l) sigma2[l] = sigma2_kendall_plug_in(data[l]).value;
  } else {
    throw ConfigError("sigma2_method must be closed_form_gaussian or plug_in");
  }
  const std::vector<double> theta(data.size(), 0.0);
  TestResult r = max_test(pair_statistics(data, sigma2, theta, m), alpha);

  Table t;
  t.columns = {{"pair_id", "pair index"},
               {"u_stat", "Kendall U-statistic"},
               {"sigma2", "long-run variance of the projection"},
               {"u_tilde", "sqrt(n) (u_stat - theta) / (2 sigma)"}};
  for (const auto& ps : r.per_pair)
    t.rows.push_back({num(static_cast<long long>(ps.pair_id)), num(ps.u_stat), num(ps.sigma2), num(ps.u_tilde)});
  ctx.write_table("pairs.csv", t);
  Json res = {{"S_n", r.S_n},         {"p", r.p_count},   {"alpha", r.alpha},
              {"q_alpha", r.q_alpha}, {"statistic", r.statistic}, {"reject", r.reject},
              {"sigma2_method", to_string(m)}};
  ctx.write_json("test_result.json", res);
  ctx.results = res;
  std::cerr << "indep-test: statistic " << r.statistic << ", q_alpha " << r.q_alpha
            << (r.reject ? ", reject\n" : ", accept\n");
}

void cmd_mdp_probe(Context& ctx) {
  const Json& c = ctx.config;
  const auto entry = catalog_entry(c.at("kernel").get<std::string>(), c.at("d").get<int>());
  KernelSpec kernel = entry.kernel;
  if (!kernel.tags.has(Tag::symmetric)) kernel = symmetrize(kernel);
  const AR1Config ar = ar_from(c.at("ar"));
  const double corr = c.at("innovation_corr").get<double>();
  SeededPath path;
  if (kernel.dim == 2 && ar.dim() == 2) {
    PairConfig pc;
    pc.ar = ar;
    pc.innovation_corr = corr;
    pc.validate();
    path = [pc](int n, std::uint64_t s) { return simulate_pair(pc, n, s).data; };
  } else {
    if (ar.dim() != kernel.dim) throw ConfigError("ar.coeffs must have one entry per kernel coordinate");
    path = [ar](int n, std::uint64_t s) { return simulate_ar1(ar, n, s).data; };
  }
  double nu;
  if (c.at("nu").is_null()) {
    if (kernel.id != "kendall" || ar.dim() != 2 || ar.innovation.kind != Innovation::Kind::gaussian || corr != 0.0)
      throw ConfigError("nu must be given unless the kernel is kendall on independent gaussian AR pairs");
    nu = std::sqrt(sigma2_kendall_ar1(ar.coeffs[0], ar.coeffs[1]).value);
  } else {
    nu = c.at("nu").get<double>();
  }
  auto rows = mdp_ratio_probe(kernel, path, nu, c.at("x_grid").get<std::vector<double>>(), c.at("reps").get<int>(),
                              c.at("n").get<int>(), ctx.seed, c.at("u_variant").get<bool>(),
                              c.at("theta").get<double>());
  Table t;
  t.columns = {{"x", "deviation level"},
               {"tail", "fraction of replications with T >= x"},
               {"tail_se", "binomial standard error of tail"},
               {"normal_tail", "1 - Phi(x)"},
               {"ratio", "tail / normal_tail"}};
  for (const auto& r : rows) t.rows.push_back({num(r.x), num(r.tail), num(r.tail_se), num(r.normal_tail), num(r.ratio)});
  ctx.write_table("mdp_probe.csv", t);
  ctx.results["nu"] = nu;
}

int cmd_plr_fit(Context& ctx) {
  const Json& c = ctx.config;
  const int n = c.at("n").get<int>();
  const int p = c.at("p").get<int>();
  const Eigen::VectorXd beta = alternating_beta(p, c.at("s").get<int>(), c.at("beta_magnitude").get<double>());
  PLRData data = simulate_plr(n, beta, design_from(c.at("design")), ctx.seed);
  const Tuning tune = default_tuning(n, p, c.at("c_h").get<double>(), c.at("c_lambda").get<double>());
  PLRConfig pc;
  pc.h = c.at("h").is_null() ? tune.h : c.at("h").get<double>();
  pc.lambda = c.at("lambda").is_null() ? tune.lambda : c.at("lambda").get<double>();
  const std::string opt = c.at("optimizer").get<std::string>();
  if (opt == "automatic")
    pc.optimizer = Optimizer::automatic;
  else if (opt == "coordinate_descent")
    pc.optimizer = Optimizer::coordinate_descent;
  else if (opt == "proximal_gradient")
    pc.optimizer = Optimizer::proximal_gradient;
  else
    throw ConfigError("unknown optimizer '" + opt + "'");
  pc.tol = c.at("tol").get<double>();
  pc.max_iter = c.at("max_iter").get<int>();
  PLRFit fit = fit_plr(data, pc);

  Table t;
  t.columns = {{"k", "coordinate"}, {"beta_hat", "estimate"}, {"beta_star", "true coefficient"}};
  for (int k = 0; k < p; ++k) t.rows.push_back({num(static_cast<long long>(k)), num(fit.beta_hat[k]), num(beta[k])});
  ctx.write_table("beta.csv", t);
  Table tr;
  tr.columns = {{"iteration", "sweep or step index"}, {"objective", "penalized objective"}};
  for (std::size_t i = 0; i < fit.objective_trace.size(); ++i)
    tr.rows.push_back({num(static_cast<long long>(i)), num(fit.objective_trace[i])});
  ctx.write_table("objective_trace.csv", tr);
  Json res = {{"h", pc.h},
              {"lambda", pc.lambda},
              {"optimizer", fit.optimizer == Optimizer::coordinate_descent ? "coordinate_descent" : "proximal_gradient"},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"kkt_violation", fit.kkt_violation},
              {"active_set", fit.active_set},
              {"squared_error", (fit.beta_hat - beta).squaredNorm()}};
  ctx.write_json("fit.json", res);
  ctx.results = res;
  return fit.converged ? kExitOk : kExitInconclusive;
}

int cmd_rate_study(Context& ctx) {
  const Json& c = ctx.config;
  RateConfig rc;
  rc.ns = c.at("ns").get<std::vector<int>>();
  rc.p = c.at("p").get<int>();
  rc.s = c.at("s").get<int>();
  rc.reps = c.at("reps").get<int>();
  rc.c_h = c.at("c_h").get<double>();
  rc.c_lambda = c.at("c_lambda").get<double>();
  rc.design = design_from(c.at("design"));
  rc.seed = ctx.seed;
  auto rows = rate_experiment(rc);
  Table t;
  t.columns = {{"n", "sample size"},
               {"mse", "mean squared l2 error of beta_hat"},
               {"mse_se", "standard error of mse"},
               {"rate_proxy", "s log p / n"},
               {"converged", "replications that met the KKT tolerance"}};
  bool all = true;
  for (const auto& r : rows) {
    t.rows.push_back({num(static_cast<long long>(r.n)), num(r.mse), num(r.mse_se), num(r.rate_proxy),
                      num(static_cast<long long>(r.converged))});
    all = all && r.converged == rc.reps;
  }
  ctx.write_table("rate_study.csv", t);
  if (rows.size() >= 2) ctx.results["mse_ratio_last_first"] = rows.back().mse / rows.front().mse;
  return all ? kExitOk : kExitInconclusive;
}

int dispatch(Context& ctx) {
  const std::string& c = ctx.command;
  if (c == "constants") cmd_constants(ctx);
  else if (c == "expand-verify") cmd_expand_verify(ctx);
  else if (c == "tail-bound") cmd_tail_bound(ctx);
  else if (c == "simulate") cmd_simulate(ctx);
  else if (c == "indep-test") cmd_indep_test(ctx);
  else if (c == "mdp-probe") cmd_mdp_probe(ctx);
  else if (c == "plr-fit") return cmd_plr_fit(ctx);
  else if (c == "rate-study") return cmd_rate_study(ctx);
  else throw ConfigError("unknown command '" + c + "'");
  return kExitOk;
}

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::string> out;
};

int execute(const std::string& command, const GlobalFlags& flags, const std::vector<std::string>& extras) {
  Context ctx;
  ctx.command = command;
  ctx.config = defaults_for(command);
  if (!flags.config_path.empty()) {
    std::ifstream is(flags.config_path);
    if (!is) throw ConfigError("cannot read config '" + flags.config_path + "'");
    Json user;
    try {
      user = Json::parse(is);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    merge(ctx.config, user, "");
  }
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string tok = extras[i];
    if (tok.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + tok + "'");
    tok = tok.substr(2);
    std::string value;
    if (auto eq = tok.find('='); eq != std::string::npos) {
      value = tok.substr(eq + 1);
      tok = tok.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("override --" + tok + " needs a value");
      value = extras[++i];
    }
    apply_override(ctx.config, tok, value);
  }
  if (flags.seed) ctx.config["seed"] = *flags.seed;
  if (flags.out) ctx.config["out"] = *flags.out;
  ctx.seed = ctx.config.at("seed").get<std::uint64_t>();
  ctx.out = ctx.config.at("out").get<std::string>();
  set_thread_count(flags.threads);
  fs::create_directories(ctx.out);
  const int code = dispatch(ctx);
  ctx.write_manifest();
  return code;
}

}  // namespace

std::vector<std::string> cli_commands() {
  return {"constants", "expand-verify", "tail-bound", "simulate",
          "indep-test", "mdp-probe", "plr-fit", "rate-study"};
}

std::string default_config(const std::string& command) { return defaults_for(command).dump(2); }

int run_cli(int argc, char** argv) {
  CLI::App app{"Concentration and moderate-deviation tools for V-statistics of dependent data"};
  app.require_subcommand(1);
  GlobalFlags flags;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  const std::vector<std::pair<std::string, std::string>> help = {
      {"constants", "print the kernel constants catalog"},
      {"expand-verify", "build kernel expansions and certify their sup error"},
      {"tail-bound", "evaluate exponential tail bounds"},
      {"simulate", "simulate AR(1) paths, bivariate pairs or partially linear data"},
      {"indep-test", "run the max-type Kendall independence test"},
      {"mdp-probe", "compare normalized tails with the normal tail"},
      {"plr-fit", "fit the penalized pairwise-difference estimator"},
      {"rate-study", "estimation error of the penalized estimator across sample sizes"}};
  for (const auto& [name, text] : help) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->allow_extras();
    sub->add_option("--config", flags.config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--threads", flags.threads, "worker threads (0 = hardware concurrency)");
    sub->add_option("--out", out, "output directory");
    subs.emplace_back(name, sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) flags.seed = seed;
    if (sub->count("--out")) flags.out = out;
    try {
      return execute(name, flags, sub->remaining());
    } catch (const ArgumentError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const DomainError& e) {
      std::cerr << "domain error: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const UnsupportedError& e) {
      std::cerr << "unsupported: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const Json::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const NumericalError& e) {
      std::cerr << "inconclusive: " << e.what() << '\n';
      return kExitInconclusive;
    } catch (const std::exception& e) {
      std::cerr << "failure: " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return kExitInvalid;
}

}  // namespace depstat
