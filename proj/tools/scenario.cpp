#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace pipcli {

json Settings::to_json() const {
  return json{{"trunc", trunc},
              {"grid", json::array({grid_w, grid_h})},
              {"tol", tol},
              {"det_tol", defaults::det_tol},
              {"jobs", jobs},
              {"seed", seed}};
}

json read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw SchemaError("scenario must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
  }
}

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      return pip::to_double(pip::parse_rational(j.get<std::string>()));
    } catch (const std::exception&) {
    }
  }
  throw SchemaError(where + ": expected a number");
}

std::size_t count(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::size_t>(j.get<long long>());
  if (j.is_number_float()) {
    double v = j.get<double>();
    if (v >= 0 && std::floor(v) == v) return static_cast<std::size_t>(v);
  }
  throw SchemaError(where + ": expected a non-negative integer");
}

pip::Complex complex_number(const json& j, const std::string& where) {
  if (j.is_array()) {
    if (j.size() != 2) throw SchemaError(where + ": a complex number is [re, im]");
    return {number(j[0], where), number(j[1], where)};
  }
  if (j.is_object()) return {number(field(j, "re", where), where), number(j.value("im", json(0.0)), where)};
  return number(j, where);
}

pip::Rational rational(const json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return pip::Rational(j.get<std::int64_t>());
    if (j.is_number_float()) {
      std::ostringstream s;
      s.precision(17);
      s << j.get<double>();
      return pip::parse_rational(s.str());
    }
    if (j.is_string()) return pip::parse_rational(j.get<std::string>());
  } catch (const std::exception&) {
  }
  throw SchemaError(where + ": expected a rational such as \"1/2\"");
}

namespace {

// Shorthand symbols: "n+1", "n", "n+c", "(n+1)^e", "1/(n+1)", "1/(n+1)^e", "c".
pip::Sequence parse_sequence_text(const std::string& raw, const std::string& where) {
  std::string t;
  for (char ch : raw)
    if (ch != ' ') t += ch;
  static const std::regex affine(R"(n(?:\+([0-9.]+))?)");
  static const std::regex power(R"(\(n\+1\)\^\(?([-0-9./]+)\)?)");
  static const std::regex inverse(R"(1/\(n\+1\)(?:\^\(?([-0-9./]+)\)?)?)");
  std::smatch m;
  try {
    if (t == "n+1") return pip::Sequence::power(1.0, 1);
    if (std::regex_match(t, m, affine))
      return pip::Sequence::affine(1.0, m[1].matched ? pip::to_double(pip::parse_rational(m[1].str())) : 0.0);
    if (std::regex_match(t, m, power)) return pip::Sequence::power(1.0, pip::parse_rational(m[1].str()));
    if (std::regex_match(t, m, inverse))
      return pip::Sequence::power(1.0, m[1].matched ? -pip::parse_rational(m[1].str()) : pip::Rational(-1));
    return pip::Sequence::constant(pip::to_double(pip::parse_rational(t)));
  } catch (const std::exception&) {
  }
  throw SchemaError(where + ": unrecognized sequence '" + raw + "'");
}

}  // namespace

pip::Sequence parse_sequence(const json& j, const std::string& where) {
  if (j.is_string()) return parse_sequence_text(j.get<std::string>(), where);
  if (j.is_number() || j.is_array()) return pip::Sequence::constant(complex_number(j, where));
  if (!j.is_object()) throw SchemaError(where + ": expected a sequence");
  if (j.contains("power")) {
    const json& p = j.at("power");
    return pip::Sequence::power(complex_number(p.value("coeff", json(1.0)), where + ".coeff"),
                                rational(field(p, "exponent", where), where + ".exponent"),
                                number(p.value("rate", json(1.0)), where + ".rate"));
  }
  if (j.contains("affine")) {
    const json& a = j.at("affine");
    return pip::Sequence::affine(complex_number(field(a, "slope", where), where + ".slope"),
                                 complex_number(field(a, "intercept", where), where + ".intercept"));
  }
  if (j.contains("profile")) {
    const json& p = j.at("profile");
    if (!p.is_array() || p.empty()) throw SchemaError(where + ".profile: expected a non-empty list");
    std::vector<pip::Rational> e;
    for (const auto& x : p) e.push_back(rational(x, where + ".profile"));
    return pip::Sequence::power_profile(std::move(e));
  }
  if (j.contains("values")) {
    const json& v = j.at("values");
    if (!v.is_array()) throw SchemaError(where + ".values: expected a list");
    std::vector<pip::Complex> head;
    for (const auto& x : v) head.push_back(complex_number(x, where + ".values"));
    pip::Sequence tail = j.contains("tail") ? parse_sequence(j.at("tail"), where + ".tail") : pip::Sequence();
    return pip::Sequence::explicit_values(std::move(head), tail);
  }
  throw SchemaError(where + ": unknown sequence form");
}

pip::PipVector parse_vector(const json& j, const std::string& where) {
  if (j.is_array()) {
    Eigen::VectorXcd d(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) d(static_cast<Eigen::Index>(i)) = complex_number(j[i], where);
    return pip::PipVector::from_dense(d);
  }
  if (!j.is_object()) throw SchemaError(where + ": expected a vector");
  if (j.contains("basis"))
    return pip::PipVector::basis(count(j.at("basis"), where + ".basis"),
                                 complex_number(j.value("value", json(1.0)), where + ".value"));
  std::vector<pip::PipVector::Entry> head;
  if (j.contains("head")) {
    for (const auto& e : j.at("head")) {
      if (!e.is_array() || e.size() != 2) throw SchemaError(where + ".head: entries are [index, value]");
      head.push_back({count(e[0], where + ".head"), complex_number(e[1], where + ".head")});
    }
  }
  if (!j.contains("tail")) return pip::PipVector(std::move(head));
  const json& t = j.at("tail");
  std::size_t start = count(t.value("start", json(0)), where + ".tail.start");
  if (t.contains("exponent"))
    return pip::PipVector::power_tail(complex_number(t.value("coeff", json(1.0)), where + ".tail.coeff"),
                                      rational(t.at("exponent"), where + ".tail.exponent"), start, std::move(head));
  if (t.contains("rate"))
    return pip::PipVector::geometric_tail(complex_number(t.value("coeff", json(1.0)), where + ".tail.coeff"),
                                          number(t.at("rate"), where + ".tail.rate"), start, std::move(head));
  return pip::PipVector::with_tail(parse_sequence(field(t, "sequence", where + ".tail"), where + ".tail.sequence"),
                                   start, std::move(head));
}

Eigen::MatrixXcd parse_matrix(const json& j, const std::string& where) {
  if (j.is_number()) return Eigen::MatrixXcd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a square matrix");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXcd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw SchemaError(where + ": expected a square matrix");
    for (Eigen::Index k = 0; k < n; ++k) M(i, k) = complex_number(row[static_cast<std::size_t>(k)], where);
  }
  return M;
}

pip::PipOperator parse_operator(const json& j, const std::string& where) {
  const std::string type = field(j, "type", where).get<std::string>();
  if (type == "diagonal") return pip::PipOperator::diagonal(parse_sequence(field(j, "symbol", where), where + ".symbol"));
  if (type == "shift") return pip::PipOperator::shift(static_cast<int>(number(j.value("offset", json(1)), where)));
  if (type == "identity")
    return pip::PipOperator::identity(complex_number(j.value("lambda", json(1.0)), where + ".lambda"));
  if (type == "dyadic")
    return pip::PipOperator::dyadic(parse_vector(field(j, "f", where), where + ".f"),
                                    parse_vector(field(j, "g", where), where + ".g"));
  if (type == "finite_rank") {
    std::vector<pip::PipVector> phi;
    for (const auto& v : field(j, "phi", where)) phi.push_back(parse_vector(v, where + ".phi"));
    Eigen::MatrixXcd B = parse_matrix(field(j, "B", where), where + ".B");
    if (static_cast<std::size_t>(B.rows()) != phi.size()) throw SchemaError(where + ": B must match phi");
    return pip::PipOperator::finite_rank(std::move(phi), std::move(B));
  }
  if (type == "sum") {
    std::vector<pip::PipOperator> terms;
    for (const auto& t : field(j, "terms", where)) terms.push_back(parse_operator(t, where + ".terms"));
    if (terms.empty()) throw SchemaError(where + ".terms: empty");
    return pip::PipOperator::sum(std::move(terms));
  }
  throw SchemaError(where + ": unknown operator type '" + type + "'");
}

pip::SpaceIndex parse_space(const json& j, const std::string& where) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "central") return pip::SpaceIndex::central();
    if (s == "V#" || s == "intersection") return pip::SpaceIndex::intersection();
    if (s == "V" || s == "union") return pip::SpaceIndex::union_all();
    if (s.rfind("s_", 0) == 0) s = s.substr(2);
    return pip::SpaceIndex::power(rational(json(s), where));
  }
  if (j.is_number()) return pip::SpaceIndex::power(rational(j, where));
  if (j.is_object() && j.contains("weight"))
    return pip::SpaceIndex::weighted(parse_sequence(j.at("weight"), where + ".weight"),
                                     j.value("label", std::string("w")));
  throw SchemaError(where + ": expected a space such as \"s_1/2\"");
}

std::vector<std::pair<pip::SpaceIndex, pip::SpaceIndex>> parse_pairs(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a non-empty list of [q, p]");
  std::vector<std::pair<pip::SpaceIndex, pip::SpaceIndex>> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw SchemaError(where + ": entries are [q, p]");
    out.emplace_back(parse_space(e[0], where), parse_space(e[1], where));
  }
  return out;
}

pip::Grid parse_grid(const json& scenario, const Settings& s, pip::Grid g) {
  if (scenario.contains("grid")) {
    const json& j = scenario.at("grid");
    auto range = [&](const char* key, double& lo, double& hi) {
      if (!j.contains(key)) return;
      const json& r = j.at(key);
      if (!r.is_array() || r.size() != 2) throw SchemaError(std::string("grid.") + key + ": expected [min, max]");
      lo = number(r[0], "grid");
      hi = number(r[1], "grid");
      if (!(lo <= hi)) throw SchemaError(std::string("grid.") + key + ": min exceeds max");
    };
    range("re", g.re_min, g.re_max);
    range("im", g.im_min, g.im_max);
  }
  g.nx = s.grid_w;
  g.ny = s.grid_h;
  return g;
}

json grid_json(const pip::Grid& g) {
  return json{{"re", {g.re_min, g.re_max}}, {"im", {g.im_min, g.im_max}}, {"points", {g.nx, g.ny}}};
}

pip::PipOperator first_operator(const json& scenario) {
  const json& ops = field(scenario, "operators", "scenario");
  if (!ops.is_array()) throw SchemaError("operators: expected a list");
  if (ops.empty()) throw SchemaError("operators: the list is empty");
  return parse_operator(ops[0], "operators[0]");
}

pip::KreinModel parse_model(const json& j, const std::string& where) {
  const std::string kind = field(j, "model", where).get<std::string>();
  if (kind == "delta1d") return pip::delta1d(number(field(j, "alpha", where), where + ".alpha"));
  if (kind == "delta") {
    std::vector<double> centers;
    for (const auto& c : field(j, "centers", where)) centers.push_back(number(c, where + ".centers"));
    Eigen::MatrixXcd B = parse_matrix(field(j, "B", where), where + ".B");
    if (static_cast<std::size_t>(B.rows()) != centers.size()) throw SchemaError(where + ": B must match centers");
    return pip::delta_model(std::move(centers), std::move(B));
  }
  if (kind == "sequence-krein") {
    pip::Sequence t = parse_sequence(field(j, "t", where), where + ".t");
    std::vector<pip::PipVector> phi;
    const json& list = field(j, "phi", where);
    if (!list.is_array() || list.empty()) throw SchemaError(where + ".phi: expected a non-empty list");
    // A flat list of numbers is a single dense coupling vector.
    bool flat = std::all_of(list.begin(), list.end(), [](const json& x) { return x.is_number(); });
    if (flat)
      phi.push_back(parse_vector(list, where + ".phi"));
    else
      for (const auto& v : list) phi.push_back(parse_vector(v, where + ".phi"));
    Eigen::MatrixXcd B = parse_matrix(field(j, "B", where), where + ".B");
    if (static_cast<std::size_t>(B.rows()) != phi.size()) throw SchemaError(where + ": B must match phi");
    return pip::sequence_model(std::move(t), std::move(phi), std::move(B));
  }
  throw SchemaError(where + ": unknown model '" + kind + "'");
}

}  // namespace pipcli
