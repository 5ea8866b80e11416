#include <json.hpp>

#include "depstat/expansion.hpp"

namespace depstat {

namespace {

using nlohmann::json;

const char* kind_tag(BasisKind k) {
  switch (k) {
    case BasisKind::cosine: return "cos";
    case BasisKind::sine: return "sin";
    default: return "coord";
  }
}

BasisKind parse_kind(const std::string& s) {
  if (s == "cos") return BasisKind::cosine;
  if (s == "sin") return BasisKind::sine;
  if (s == "coord") return BasisKind::coordinate;
  throw ConfigError("unknown basis tag '" + s + "'");
}

}  // namespace

std::string to_json(const ExpandedKernel& e) {
  json j;
  j["m"] = e.m;
  j["d"] = e.d;
  json freqs = json::array(), tags = json::array(), coords = json::array();
  for (const auto& b : e.bases) {
    freqs.push_back(std::vector<double>(b.freq.data(), b.freq.data() + b.freq.size()));
    tags.push_back(kind_tag(b.kind));
    coords.push_back(b.coord);
  }
  j["frequencies"] = freqs;
  j["basis_tags"] = tags;
  j["basis_coords"] = coords;
  json terms = json::array();
  for (Eigen::Index r = 0; r < e.terms.rows(); ++r) {
    std::vector<int> row(static_cast<std::size_t>(e.m));
    for (int i = 0; i < e.m; ++i) row[i] = e.terms(r, i);
    terms.push_back(row);
  }
  j["terms"] = terms;
  j["coeffs"] = std::vector<double>(e.coeffs.data(), e.coeffs.data() + e.coeffs.size());
  j["F"] = e.constants.F;
  j["B"] = e.constants.B;
  j["mu"] = e.constants.mu;
  j["t"] = e.target_t;
  j["domain"] = {{"m", e.domain.m},
                 {"d", e.domain.d},
                 {"halfwidth", e.domain.halfwidth},
                 {"margin", e.domain.margin},
                 {"jumps", e.domain.jumps}};
  j["lip_L"] = e.lip_L ? json(*e.lip_L) : json(nullptr);
  j["seed"] = e.seed;
  return j.dump();
}

ExpandedKernel expanded_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("expansion JSON: ") + ex.what());
  }
  try {
    ExpandedKernel e;
    e.m = j.at("m").get<int>();
    e.d = j.at("d").get<int>();
    const auto& freqs = j.at("frequencies");
    const auto& tags = j.at("basis_tags");
    const auto& coords = j.at("basis_coords");
    if (freqs.size() != tags.size() || freqs.size() != coords.size())
      throw ConfigError("expansion JSON: basis arrays differ in length");
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      auto u = freqs[k].get<std::vector<double>>();
      Basis b;
      b.kind = parse_kind(tags[k].get<std::string>());
      b.freq = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
      b.coord = coords[k].get<int>();
      e.bases.push_back(b);
    }
    const auto& terms = j.at("terms");
    auto coeffs = j.at("coeffs").get<std::vector<double>>();
    if (terms.size() != coeffs.size()) throw ConfigError("expansion JSON: terms/coeffs mismatch");
    e.terms.resize(static_cast<Eigen::Index>(terms.size()), e.m);
    for (std::size_t r = 0; r < terms.size(); ++r) {
      auto row = terms[r].get<std::vector<int>>();
      if (static_cast<int>(row.size()) != e.m) throw ConfigError("expansion JSON: bad term arity");
      for (int i = 0; i < e.m; ++i) {
        if (row[i] < 0 || row[i] >= static_cast<int>(e.bases.size()))
          throw ConfigError("expansion JSON: basis index out of range");
        e.terms(static_cast<Eigen::Index>(r), i) = row[i];
      }
    }
    e.coeffs = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    e.constants.F = j.at("F").get<double>();
    e.constants.B = j.at("B").get<double>();
    e.constants.mu = j.at("mu").get<double>();
    e.target_t = j.at("t").get<double>();
    const auto& dom = j.at("domain");
    e.domain.m = dom.at("m").get<int>();
    e.domain.d = dom.at("d").get<int>();
    e.domain.halfwidth = dom.at("halfwidth").get<double>();
    e.domain.margin = dom.at("margin").get<double>();
    e.domain.jumps = dom.at("jumps").get<std::vector<std::vector<double>>>();
    if (!j.at("lip_L").is_null()) e.lip_L = j.at("lip_L").get<double>();
    e.seed = j.at("seed").get<std::uint64_t>();
    return e;
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("expansion JSON: ") + ex.what());
  }
}

}  // namespace depstat
