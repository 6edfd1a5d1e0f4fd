#include "tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "parallel.hpp"
#include "pip/frames.hpp"
#include "pip/klmn.hpp"
#include "pip/singular.hpp"
#include "pip/spectral.hpp"

#ifndef PIPSPACE_VERSION
#define PIPSPACE_VERSION "0.0.0"
#endif

namespace pipcli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json cjson(pip::Complex z) { return json::array({z.real(), z.imag()}); }

// NaN and infinities have no JSON form; they are written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string label(const pip::SpaceIndex& r) { return pip::space_name(r); }

json pairs_json(const std::vector<std::pair<pip::SpaceIndex, pip::SpaceIndex>>& pairs) {
  json out = json::array();
  for (const auto& [q, p] : pairs) out.push_back(json::array({label(q), label(p)}));
  return out;
}

unsigned inner_jobs(const Settings& s) { return std::max(1u, s.jobs); }

// Scenario model: the scenario itself when "model" is a string, or the object under "model".
const json& model_node(const json& scenario) {
  const json& m = field(scenario, "model", "scenario");
  return m.is_string() ? scenario : m;
}

std::vector<pip::PipVector> random_heads(std::size_t count, std::size_t length, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<pip::PipVector> out;
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(length));
    for (auto& x : v) x = pip::Complex(u(rng), u(rng));
    out.push_back(pip::PipVector::from_dense(v));
  }
  return out;
}

// ---- spectrum ------------------------------------------------------------------------------

TaskResult spectrum_task(const json& sc, const Settings& s) {
  const pip::PipOperator A = first_operator(sc);
  const auto pairs = sc.contains("pairs") ? parse_pairs(sc.at("pairs"), "pairs")
                                          : std::vector<std::pair<pip::SpaceIndex, pip::SpaceIndex>>{
                                                {pip::SpaceIndex::central(), pip::SpaceIndex::central()}};
  const pip::Grid grid = parse_grid(sc, s, pip::Grid{});
  pip::SpectralOptions opt;
  opt.truncation = s.trunc;
  const pip::SpectralReport rep = pip::j_resolvent(A, pairs, grid, opt, inner_jobs(s));

  TaskResult out;
  out.parameters = {{"pairs", pairs_json(pairs)}, {"grid", grid_json(grid)}, {"operator", A.describe()}};
  json regions = json::array();
  Table points{{"re", "im", "pair", "q", "p", "status", "c", "defect", "resolvent", "component"}, {}};
  for (std::size_t r = 0; r < rep.regions.size(); ++r) {
    const auto& g = rep.regions[r];
    std::size_t regular = 0, resolvent = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      regular += g.status[k] == pip::PointStatus::Regular;
      resolvent += g.resolvent[k];
      const pip::Complex z = grid.point(k % grid.nx, k / grid.nx);
      points.rows.push_back({cell(z.real()), cell(z.imag()), cell(r), label(g.q), label(g.p),
                             std::string(pip::point_status_name(g.status[k])), cell(g.c[k]), cell(g.defect[k]),
                             cell(static_cast<bool>(g.resolvent[k])), cell(g.component[k])});
    }
    regions.push_back({{"q", label(g.q)},
                       {"p", label(g.p)},
                       {"regular_points", regular},
                       {"resolvent_points", resolvent},
                       {"components", g.components}});
  }
  const auto rho = static_cast<std::size_t>(std::count(rep.rho.begin(), rep.rho.end(), true));
  out.report.body = {{"task", "spectrum"},
                     {"regions", regions},
                     {"rho_points", rho},
                     {"sigma_points", grid.size() - rho},
                     {"conjugate_mismatches", rep.conjugate_mismatches},
                     {"conjugate_symmetric", rep.conjugate_symmetric}};
  out.report.tables.emplace_back("", std::move(points));
  int components = 0;
  pip::label_components(rep.rho, grid.nx, grid.ny, &components);
  out.report.body["rho_components"] = components;
  out.summary = {cell(rho), cell(grid.size() - rho), cell(components)};
  return out;
}

// ---- krein ---------------------------------------------------------------------------------

TaskResult krein_task(const json& sc, const Settings& s) {
  const json& node = model_node(sc);
  const pip::KreinModel model = parse_model(node, "model");
  const std::string kind = node.at("model").get<std::string>();
  pip::BoundStateOptions opt;
  opt.det_tol = defaults::det_tol;
  opt.jobs = inner_jobs(s);
  const auto states = pip::bound_states(model, opt);

  TaskResult out;
  out.parameters = {{"model", node}, {"det_tol", opt.det_tol}, {"span", opt.span}, {"bracket_grid", opt.grid}};
  json list = json::array();
  const bool alpha_model = kind == "delta1d";
  Table t;
  t.header = alpha_model ? std::vector<std::string>{"alpha", "lambda", "residual"}
                         : std::vector<std::string>{"root", "lambda", "residual", "det"};
  double alpha = alpha_model ? number(node.at("alpha"), "alpha") : 0.0;

  // Dense N x N truncation of H as an independent check for sequence models.
  std::vector<double> dense;
  const bool sequence = model.T.kind() == pip::FreeOperator::Kind::Sequence;
  if (sequence && model.hermitian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pip::dense_block(model.H(), s.trunc, s.trunc),
                                                       Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) < model.T.threshold()) dense.push_back(es.eigenvalues()(i));
  }
  double worst_truncation = sequence ? 0.0 : kNaN;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& b = states[i];
    json e{{"lambda", b.lambda}, {"residual", b.residual}, {"det", b.det}};
    if (alpha_model) e["exact"] = -1.0 / (4.0 * alpha * alpha);
    if (sequence) {
      double err = std::numeric_limits<double>::infinity();
      for (double d : dense) err = std::min(err, std::abs(d - b.lambda));
      e["truncation_error"] = num(err);
      worst_truncation = std::max(worst_truncation, err);
    }
    list.push_back(e);
    if (alpha_model)
      t.rows.push_back({cell(alpha), cell(b.lambda), cell(b.residual)});
    else
      t.rows.push_back({cell(i), cell(b.lambda), cell(b.residual), cell(b.det)});
  }
  out.report.body = {{"task", "krein"}, {"threshold", model.T.threshold()}, {"bound_states", list}};
  if (sequence) {
    out.report.body["dense_eigenvalues_below_threshold"] = dense;
    out.report.body["truncation_error"] = num(worst_truncation);
    // Resolvent identity of the Krein formula off the real axis.
    const pip::Complex probe = pip::Complex(model.T.threshold() - 1.0, 1.0);
    out.report.body["krein_residual"] = {{"lambda", cjson(probe)},
                                         {"residual", pip::krein_residual(model, probe, 8)}};
  }
  if (model.T.kind() == pip::FreeOperator::Kind::Continuum1D && !states.empty()) {
    const pip::Complex l0 = states.front().lambda;
    const double diff = (pip::gamma_matrix(model, l0).matrix - pip::gamma_quadrature(model, l0).matrix).norm();
    out.report.body["quadrature_check"] = {{"lambda", states.front().lambda}, {"gamma_difference", diff}};
  }
  out.report.tables.emplace_back("", std::move(t));
  out.summary = {cell(states.size()), states.empty() ? "" : cell(states.front().lambda),
                 states.empty() ? "" : cell(states.front().residual), sequence ? cell(worst_truncation) : ""};
  return out;
}

// ---- tightness -----------------------------------------------------------------------------

TaskResult tightness_task(const json& sc, const Settings& s) {
  const pip::PipOperator A = first_operator(sc);
  if (A.kind() != pip::OpKind::Diagonal) throw SchemaError("tightness: operators[0] must be diagonal");
  const int degree = static_cast<int>(number(sc.value("degree", json(0)), "degree"));
  const pip::Multiplier M = pip::multiplier(A.symbol(), degree);
  const pip::Grid grid = parse_grid(sc, s, pip::Grid{-0.5, 1.5, -0.5, 0.5});
  pip::ExtendedSpectrumOptions opt;
  opt.truncation = count(sc.value("ext_truncation", json(64)), "ext_truncation");
  opt.jobs = inner_jobs(s);
  const pip::MultiplierSpectrum ms = pip::multiplier_spectrum(M, grid, opt);

  const int r = std::max(degree, 0) / 2;
  const auto pairs =
      sc.contains("pairs") ? parse_pairs(sc.at("pairs"), "pairs")
                           : std::vector<std::pair<pip::SpaceIndex, pip::SpaceIndex>>{{M.space(r), M.space(-r)}};
  pip::SpectralOptions sopt;
  sopt.truncation = s.trunc;
  const pip::InclusionReport inc = pip::spectral_inclusions(ms.extended, A, pairs, sopt, inner_jobs(s));

  TaskResult out;
  out.parameters = {{"degree", degree},
                    {"ext_truncation", opt.truncation},
                    {"residual_tol", opt.residual_tol},
                    {"decay_tol", opt.decay_tol},
                    {"grid", grid_json(grid)},
                    {"pairs", pairs_json(pairs)},
                    {"operator", A.describe()}};
  json eig = json::array();
  for (auto z : ms.extended.eigenvalues) eig.push_back(cjson(z));
  std::size_t members = 0;
  Table t{{"re", "im", "sigma_min", "member"}, {}};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const pip::Complex z = grid.point(k % grid.nx, k / grid.nx);
    members += ms.extended.grid_member[k];
    t.rows.push_back({cell(z.real()), cell(z.imag()), cell(ms.extended.grid_sigma[k]),
                      cell(static_cast<bool>(ms.extended.grid_member[k]))});
  }
  out.report.body = {{"task", "tightness"},
                     {"tight", ms.tight},
                     {"matches_closure", ms.matches_closure},
                     {"accumulation", ms.accumulation ? num(*ms.accumulation) : json(nullptr)},
                     {"closure_head", std::vector<double>(ms.closure.begin(),
                                                          ms.closure.begin() + std::min<std::size_t>(16, ms.closure.size()))},
                     {"extended_eigenvalues", eig},
                     {"grid_members", members},
                     {"grid_tolerance", ms.extended.grid_tolerance},
                     {"approximate", ms.extended.approximate},
                     {"babbitt_dense", ms.extended.babbitt.dense},
                     {"inclusions",
                      {{"spectrum_points", inc.spectrum_points},
                       {"ext_points", inc.ext_points},
                       {"j_points", inc.j_points},
                       {"spectrum_in_ext", inc.spectrum_in_ext},
                       {"ext_in_j", inc.ext_in_j}}}};
  out.report.tables.emplace_back("", std::move(t));
  out.summary = {cell(ms.tight), cell(ms.matches_closure), cell(ms.extended.eigenvalues.size())};
  return out;
}

// ---- klmn ----------------------------------------------------------------------------------

TaskResult klmn_task(const json& sc, const Settings& s) {
  const pip::PipOperator X = first_operator(sc);
  const pip::SpaceIndex m = parse_space(field(sc, "m", "scenario"), "m");
  const pip::SpaceIndex n = parse_space(field(sc, "n", "scenario"), "n");
  const double lambda = number(sc.value("lambda", json(-1.0)), "lambda");
  pip::KlmnOptions opt;
  if (sc.contains("truncations")) {
    opt.truncations.clear();
    for (const auto& v : sc.at("truncations")) opt.truncations.push_back(count(v, "truncations"));
  } else {
    opt.truncations = {32, 64, s.trunc};
  }
  std::sort(opt.truncations.begin(), opt.truncations.end());
  opt.truncations.erase(std::unique(opt.truncations.begin(), opt.truncations.end()), opt.truncations.end());
  if (opt.truncations.empty() || opt.truncations.front() == 0) throw SchemaError("truncations: expected sizes > 0");
  opt.spectral.truncation = s.trunc;
  const pip::KlmnRestriction K = pip::klmn_restrict(X, m, n, lambda, opt);

  TaskResult out;
  out.parameters = {{"m", label(m)},
                    {"n", label(n)},
                    {"lambda", lambda},
                    {"truncations", opt.truncations},
                    {"hermitian_tol", opt.hermitian_tol},
                    {"rank_tol", opt.rank_tol},
                    {"operator", X.describe()}};
  Table t{{"N", "r_asymmetry", "x_asymmetry", "distance", "rank", "spectrum_min", "spectrum_max"}, {}};
  for (const auto& tr : K.truncations)
    t.rows.push_back({cell(tr.N), cell(tr.r_asymmetry), cell(tr.x_asymmetry), cell(tr.distance), cell(tr.rank),
                      cell(tr.spectrum.size() ? tr.spectrum.minCoeff() : kNaN),
                      cell(tr.spectrum.size() ? tr.spectrum.maxCoeff() : kNaN)});
  out.report.body = {{"task", "klmn"},
                     {"chain_case", K.chain_case ? json(std::string(pip::chain_case_name(K.chain_case->kind)))
                                                 : json(nullptr)},
                     {"ordering", K.chain_case ? json(K.chain_case->ordering) : json(nullptr)},
                     {"domain", K.domain},
                     {"predicate_domain", K.predicate_domain},
                     {"resolvent_exact", K.resolvent_exact},
                     {"hermitian", K.hermitian},
                     {"dense_domain", K.dense_domain},
                     {"min_distance", K.min_distance}};
  out.report.tables.emplace_back("", std::move(t));
  out.summary = {cell(K.hermitian), cell(K.min_distance)};
  return out;
}

// ---- frames --------------------------------------------------------------------------------

json bounds_json(const pip::FrameBounds& b) {
  return {{"upper", b.upper},        {"argsup", b.argsup},         {"lower", b.lower},
          {"witness", b.witness},    {"witness_values", b.witness_values},
          {"frame", b.frame},        {"collapses", b.collapses},   {"symbolic", b.symbolic}};
}

TaskResult frames_task(const json& sc, const Settings& s) {
  const json& f = field(sc, "frame", "scenario");
  const std::string kind = field(f, "kind", "frame").get<std::string>();
  TaskResult out;
  if (kind == "semi") {
    const pip::SemiFrameScale scale(parse_sequence(field(f, "weight", "frame"), "frame.weight"));
    const std::size_t N = count(f.value("N", json(s.trunc)), "frame.N");
    const pip::FrameBounds b = pip::semi_frame_bounds(scale, N);
    out.parameters = {{"kind", kind}, {"weight", scale.m().describe()}, {"N", N}};
    out.report.body = {{"task", "frames"}, {"bounds", bounds_json(b)}, {"upper_semi_frame", scale.upper_semi_frame()}};
    Table t{{"n", "value"}, {}};
    for (std::size_t i = 0; i < b.witness.size(); ++i) t.rows.push_back({cell(b.witness[i]), cell(b.witness_values[i])});
    out.report.tables.emplace_back("witness", std::move(t));
    out.summary = {cell(b.upper), cell(b.lower), cell(b.frame), ""};
    return out;
  }
  if (kind == "affine") {
    const std::string profile = f.value("profile", std::string("gaussian"));
    const int n = static_cast<int>(number(f.value("n", json(1)), "frame.n"));
    pip::RadialGrid grid;
    grid.r_max = number(f.value("r_max", json(grid.r_max)), "frame.r_max");
    grid.points = count(f.value("points", json(grid.points)), "frame.points");
    const std::size_t levels = count(f.value("refinements", json(3)), "frame.refinements");
    const auto model = pip::affine_frame_build(pip::affine_profile(profile), n, grid, true, s.tol);
    const auto delta = pip::delta_projection(model);
    const double unitarity = pip::unitarity_defect(model.frame, 20, s.seed);

    std::vector<pip::ContinuousFrame> chain;
    // Each level doubles the radial window and halves the step, so both ends of R+ are resolved.
    Table t{{"r_max", "points", "lambda_min", "lambda_max", "inverse_frame_vector_norm"}, {}};
    for (std::size_t l = 0; l < std::max<std::size_t>(levels, 2); ++l) {
      pip::RadialGrid g = grid;
      g.r_max = grid.r_max * static_cast<double>(1u << l);
      g.points = grid.points << (2 * l);
      auto m = pip::affine_frame_build(pip::affine_profile(profile), n, g, true, s.tol);
      t.rows.push_back({cell(g.r_max), cell(g.points), cell(m.s_inf), cell(m.s_sup), cell(m.inverse_frame_vector_norm())});
      chain.push_back(std::move(m.frame));
    }
    const pip::FrameBounds b = pip::semi_frame_bounds(chain);
    out.parameters = {{"kind", kind},        {"profile", profile},   {"n", n},
                      {"r_max", grid.r_max}, {"points", grid.points}, {"refinements", chain.size()},
                      {"unitarity_probes", 20}};
    out.report.body = {{"task", "frames"},
                       {"s_sup", model.s_sup},
                       {"s_inf", model.s_inf},
                       {"normalization", model.normalization},
                       {"frame_operator_defect", model.frame_operator_defect},
                       {"quadrature_error", model.quadrature_error},
                       {"delta_projection",
                        {{"defect", delta.defect},
                         {"projection_defect", delta.projection_defect},
                         {"quadrature_error", delta.quadrature_error},
                         {"within_quadrature_error", delta.defect <= delta.quadrature_error}}},
                       {"unitarity_defect", unitarity},
                       {"bounds", bounds_json(b)}};
    out.report.tables.emplace_back("refinements", std::move(t));
    out.summary = {cell(b.upper), cell(b.lower), cell(b.frame), cell(unitarity)};
    return out;
  }
  throw SchemaError("frame.kind: expected \"semi\" or \"affine\"");
}

// ---- identities ----------------------------------------------------------------------------

TaskResult identities_task(const json& sc, const Settings& s) {
  const pip::PipOperator A = first_operator(sc);
  const json& ops = sc.at("operators");
  const std::optional<pip::PipOperator> B =
      ops.size() > 1 ? std::optional(parse_operator(ops[1], "operators[1]")) : std::nullopt;
  const pip::SpaceIndex q = parse_space(sc.value("q", json("s_0")), "q");
  const pip::SpaceIndex p = parse_space(sc.value("p", json("s_0")), "p");
  const std::size_t pairs = count(sc.value("pairs", json(10)), "pairs");
  const std::size_t vectors = count(sc.value("vectors", json(4)), "vectors");
  const double h = number(sc.value("h", json(1e-5)), "h");
  pip::SpectralOptions opt;
  opt.truncation = s.trunc;

  // Spectral parameters off the real axis, where self-adjoint models are always regular.
  std::mt19937 rng(s.seed);
  std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.5, 2.0);
  std::bernoulli_distribution sign(0.5);
  auto draw = [&] { return pip::Complex(re(rng), sign(rng) ? im(rng) : -im(rng)); };
  const auto tests = random_heads(vectors, 8, s.seed + 1);

  Table t{{"identity", "lambda_re", "lambda_im", "mu_re", "mu_im", "residual"}, {}};
  double second = 0.0, first = B ? 0.0 : kNaN, derivative = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const pip::Complex l = draw(), m = draw();
    const double r2 = pip::second_resolvent_identity(A, l, m, q, p, tests, opt).max_residual;
    second = std::max(second, r2);
    t.rows.push_back({"second", cell(l.real()), cell(l.imag()), cell(m.real()), cell(m.imag()), cell(r2)});
    if (B) {
      const double r1 = pip::first_resolvent_identity(A, *B, l, q, p, tests, opt).max_residual;
      first = std::max(first, r1);
      t.rows.push_back({"first", cell(l.real()), cell(l.imag()), "", "", cell(r1)});
    }
    const double rd = pip::resolvent_derivative_identity(A, l, q, p, tests, h, opt).max_residual;
    derivative = std::max(derivative, rd);
    t.rows.push_back({"derivative", cell(l.real()), cell(l.imag()), "", "", cell(rd)});
  }
  TaskResult out;
  out.parameters = {{"q", label(q)}, {"p", label(p)}, {"pairs", pairs}, {"vectors", vectors}, {"h", h},
                    {"operator", A.describe()}};
  if (B) out.parameters["perturbed"] = B->describe();
  out.report.body = {{"task", "identities"},
                     {"second_resolvent", second},
                     {"first_resolvent", num(first)},
                     {"derivative", derivative},
                     {"identities_within_tol", second < s.tol && (!B || first < s.tol)}};
  out.report.tables.emplace_back("", std::move(t));
  out.summary = {cell(second), B ? cell(first) : "", cell(derivative)};
  return out;
}

// ---- boundary extensions -------------------------------------------------------------------

TaskResult boundary_task(const json& sc, const Settings&) {
  std::vector<pip::Complex> alphas;
  if (sc.contains("alphas")) {
    for (const auto& a : sc.at("alphas")) alphas.push_back(complex_number(a, "alphas"));
  } else {
    for (int k = 0; k < 8; ++k) alphas.push_back(std::polar(1.0, -std::numbers::pi + 2 * std::numbers::pi * (k + 0.5) / 8));
  }
  if (alphas.empty()) throw SchemaError("alphas: the list is empty");
  const long n_max = static_cast<long>(number(sc.value("n_max", json(50)), "n_max"));
  const auto rep = pip::boundary_extension_demo(alphas, n_max);

  TaskResult out;
  json list = json::array();
  for (auto a : alphas) list.push_back(cjson(a));
  out.parameters = {{"alphas", list}, {"n_max", n_max}};
  json spectra = json::array();
  Table t{{"alpha_re", "alpha_im", "n", "eigenvalue"}, {}};
  for (const auto& sp : rep.spectra) {
    spectra.push_back({{"alpha", cjson(sp.alpha)}, {"theta", sp.theta}, {"eigenvalue_0", sp.eigenvalue(0)}});
    const auto w = sp.window(n_max);
    for (std::size_t i = 0; i < w.size(); ++i)
      t.rows.push_back({cell(sp.alpha.real()), cell(sp.alpha.imag()), cell(static_cast<long long>(i) - n_max),
                        cell(w[i])});
  }
  out.report.body = {{"task", "demo-boundary-extension"},
                     {"spectra", spectra},
                     {"pairwise_disjoint", rep.pairwise_disjoint},
                     {"min_separation", rep.min_separation},
                     {"diagnosis", rep.diagnosis}};
  out.report.tables.emplace_back("", std::move(t));
  out.summary = {cell(rep.pairwise_disjoint), cell(rep.min_separation)};
  return out;
}

}  // namespace

Settings settings_from(const json& sc) {
  Settings s;
  if (sc.contains("trunc")) s.trunc = count(sc.at("trunc"), "trunc");
  if (sc.contains("grid") && sc.at("grid").contains("points")) {
    const json& p = sc.at("grid").at("points");
    if (!p.is_array() || p.size() != 2) throw SchemaError("grid.points: expected [W, H]");
    s.grid_w = count(p[0], "grid.points");
    s.grid_h = count(p[1], "grid.points");
  }
  if (sc.contains("tol")) s.tol = number(sc.at("tol"), "tol");
  if (sc.contains("jobs")) s.jobs = static_cast<unsigned>(count(sc.at("jobs"), "jobs"));
  if (sc.contains("seed")) s.seed = static_cast<unsigned>(count(sc.at("seed"), "seed"));
  if (s.trunc == 0) throw SchemaError("trunc: must be positive");
  if (s.grid_w == 0 || s.grid_h == 0) throw SchemaError("grid: must have at least one point per axis");
  if (!(s.tol > 0)) throw SchemaError("tol: must be positive");
  return s;
}

TaskResult run_task(const std::string& task, const json& sc, const Settings& s) {
  if (sc.contains("operators") && (!sc.at("operators").is_array() || sc.at("operators").empty()))
    throw SchemaError("operators: the list is empty");
  if (task == "spectrum") return spectrum_task(sc, s);
  if (task == "krein") return krein_task(sc, s);
  if (task == "tightness") return tightness_task(sc, s);
  if (task == "klmn") return klmn_task(sc, s);
  if (task == "frames") return frames_task(sc, s);
  if (task == "identities") return identities_task(sc, s);
  if (task == "demo-boundary-extension") return boundary_task(sc, s);
  throw SchemaError("unknown task '" + task + "'");
}

std::vector<std::string> summary_columns(const std::string& task) {
  if (task == "spectrum") return {"rho_points", "sigma_points", "rho_components"};
  if (task == "krein") return {"bound_states", "lambda0", "residual0", "truncation_error"};
  if (task == "tightness") return {"tight", "matches_closure", "extended_eigenvalues"};
  if (task == "klmn") return {"hermitian", "min_distance"};
  if (task == "frames") return {"upper", "lower", "frame", "unitarity_defect"};
  if (task == "identities") return {"second_resolvent", "first_resolvent", "derivative"};
  if (task == "demo-boundary-extension") return {"pairwise_disjoint", "min_separation"};
  throw SchemaError("unknown task '" + task + "'");
}

std::vector<json> sweep_values(const json& sw) {
  std::vector<json> out;
  if (sw.contains("values")) {
    const json& v = sw.at("values");
    if (!v.is_array()) throw SchemaError("sweep.values: expected a list");
    for (const auto& x : v) out.push_back(x);
    return out;
  }
  const double from = number(field(sw, "from", "sweep"), "sweep.from");
  const double to = number(field(sw, "to", "sweep"), "sweep.to");
  const double step = number(field(sw, "step", "sweep"), "sweep.step");
  if (!std::isfinite(from) || !std::isfinite(to) || !(step > 0) || !std::isfinite(step))
    throw SchemaError("sweep: the range must be finite with a positive step");
  if (to < from) return out;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  if (n > 1000000) throw SchemaError("sweep: too many values");
  for (std::size_t i = 0; i < n; ++i) {
    // Rounded to 12 significant digits so that 0.1 + 2 * 0.1 reads as 0.3.
    const double v = from + static_cast<double>(i) * step;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out.push_back(std::stod(buf));
  }
  return out;
}

Report run_sweep(const json& sc, const std::string& task, unsigned jobs) {
  const json& sw = field(sc, "sweep", "scenario");
  const std::string parameter = field(sw, "parameter", "sweep").get<std::string>();
  if (parameter.empty()) throw SchemaError("sweep.parameter: empty");
  std::string pointer;
  for (char c : parameter) pointer += c == '.' ? '/' : c;
  const json::json_pointer at("/" + pointer);
  const std::vector<json> values = sweep_values(sw);
  const auto columns = summary_columns(task);

  std::vector<std::vector<std::string>> rows(values.size());
  pip::detail::parallel_for(values.size(), std::max(1u, jobs), [&](std::size_t i) {
    json row = sc;
    row.erase("sweep");
    std::vector<std::string> cells;
    std::string status = "ok";
    try {
      row[at] = values[i];
      Settings s = settings_from(row);
      if (jobs > 1) s.jobs = 1;
      cells = run_task(task, row, s).summary;
    } catch (const pip::Error& e) {
      status = std::string(pip::error_name(e.code()));
    } catch (const SchemaError& e) {
      status = "SchemaError";
    } catch (const json::exception& e) {
      status = "SchemaError";
    }
    cells.resize(columns.size());
    std::vector<std::string> r{values[i].is_number() ? cell(values[i].get<double>()) : cell(values[i].dump()),
                               status};
    r.insert(r.end(), cells.begin(), cells.end());
    rows[i] = std::move(r);
  });

  Report rep;
  Table t;
  t.header = {"parameter", "status"};
  t.header.insert(t.header.end(), columns.begin(), columns.end());
  t.rows = std::move(rows);
  std::size_t failed = 0;
  for (const auto& r : t.rows) failed += r[1] != "ok";
  rep.body = {{"task", "sweep"},
              {"sweep_task", task},
              {"parameter", parameter},
              {"values", values},
              {"rows", t.rows.size()},
              {"failed_rows", failed}};
  rep.tables.emplace_back("", std::move(t));
  return rep;
}

json report_header(const std::string& task, const json& scenario, const Settings& s, const json& parameters) {
  json params = s.to_json();
  for (const auto& [k, v] : parameters.items()) params[k] = v;
  return {{"library_version", PIPSPACE_VERSION},
          {"scenario_sha256", scenario_hash(scenario)},
          {"task", task},
          {"parameters", params},
          {"seed", s.seed}};
}

}  // namespace pipcli
