#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pip/frames.hpp"
#include "pip/singular.hpp"

namespace pipcli {

using nlohmann::json;

// A scenario that does not match the schema (exit code 2).
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

namespace defaults {
inline constexpr std::size_t trunc = 128;
inline constexpr std::size_t grid_w = 201, grid_h = 201;
inline constexpr double identity_tol = 1e-10;
inline constexpr double det_tol = 1e-12;
inline constexpr unsigned jobs = 1;
inline constexpr unsigned seed = 7;
}  // namespace defaults

// Effective numeric settings: scenario values, overridden by command-line flags.
struct Settings {
  std::size_t trunc = defaults::trunc;
  std::size_t grid_w = defaults::grid_w, grid_h = defaults::grid_h;
  double tol = defaults::identity_tol;
  unsigned jobs = defaults::jobs;
  unsigned seed = defaults::seed;
  json to_json() const;
};

json read_scenario(const std::string& path);

// Typed field access with SchemaError on mismatch.  `where` names the field in messages.
const json& field(const json& j, const std::string& key, const std::string& where);
double number(const json& j, const std::string& where);
std::size_t count(const json& j, const std::string& where);
pip::Complex complex_number(const json& j, const std::string& where);
pip::Rational rational(const json& j, const std::string& where);

pip::Sequence parse_sequence(const json& j, const std::string& where);
pip::PipVector parse_vector(const json& j, const std::string& where);
pip::PipOperator parse_operator(const json& j, const std::string& where);
pip::SpaceIndex parse_space(const json& j, const std::string& where);
Eigen::MatrixXcd parse_matrix(const json& j, const std::string& where);
std::vector<std::pair<pip::SpaceIndex, pip::SpaceIndex>> parse_pairs(const json& j, const std::string& where);

// "grid": {"re": [a, b], "im": [c, d]}; the point counts come from Settings.
pip::Grid parse_grid(const json& scenario, const Settings& s, pip::Grid fallback);
json grid_json(const pip::Grid& g);

// operators[0], requiring a non-empty list.
pip::PipOperator first_operator(const json& scenario);

pip::KreinModel parse_model(const json& j, const std::string& where);

}  // namespace pipcli
