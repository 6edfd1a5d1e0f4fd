#include "pip/frames.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "parallel.hpp"

namespace pip {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kProbeSamples = 10000;

// sup_n |s_n|, folding in the limit when the asymptotics are known; sampled otherwise.
double sequence_sup(const Sequence& s, bool* symbolic = nullptr) {
  const Extrema e = abs_extrema(s, kProbeSamples);
  if (symbolic) *symbolic = e.symbolic;
  return e.sup;
}

double max_abs(const Eigen::MatrixXcd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

double relative_gap(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  const double scale = std::max({max_abs(A), max_abs(B), std::numeric_limits<double>::min()});
  return max_abs(A - B) / scale;
}

}  // namespace

SemiFrameScale::SemiFrameScale(Sequence m) : m_(std::move(m)) {
  if (!m_.is_real()) throw Error(ErrorCode::InvalidArgument, "the semi-frame weight must be real");
  for (std::size_t n = 0; n < kProbeSamples; ++n)
    if (!(m_(n).real() > 0.0))
      throw Error(ErrorCode::InvalidArgument, "the semi-frame weight must be positive, fails at n = " + std::to_string(n));
  const Sequence inv = reciprocal(m_);
  if (!std::isfinite(sequence_sup(inv)))
    throw Error(ErrorCode::InvalidArgument, "1/m_n must be bounded for an upper frame bound");
  const Extrema e = abs_extrema(inv, kProbeSamples);
  semi_ = e.symbolic ? e.inf == 0.0 : e.inf < 1e-3 * e.sup;
}

PipVector SemiFrameScale::psi(std::size_t n) const { return PipVector::basis(n, 1.0 / m_(n).real()); }
PipVector SemiFrameScale::phi(std::size_t n) const { return PipVector::basis(n, m_(n).real()); }

PipOperator SemiFrameScale::frame_operator() const { return PipOperator::diagonal(pow(m_, Rational(-2)), "S"); }
PipOperator SemiFrameScale::inverse_frame_operator() const {
  return PipOperator::diagonal(pow(m_, Rational(2)), "S^-1");
}

SpaceIndex SemiFrameScale::space(Rational k) const {
  if (k == Rational(0)) return SpaceIndex::central();
  return SpaceIndex::weighted(pow(m_, 2 * k), "H_" + to_string(k));
}

SpaceIndex Multiplier::space(Rational j) const {
  return scale ? scale->space(j) : SpaceIndex::power(j);
}

namespace {

Multiplier build_multiplier(const Sequence& a, int k, std::optional<SemiFrameScale> scale) {
  for (std::size_t n = 0; n < kProbeSamples; ++n)
    if (a(n) == Complex(0.0))
      throw Error(ErrorCode::GrowthViolated, "a multiplier symbol must not vanish, a_" + std::to_string(n) + " = 0");
  const Sequence bound2 = scale ? pow(scale->m(), Rational(-2 * k)) : Sequence::power(1.0, Rational(-k));
  Multiplier M;
  M.op = PipOperator::diagonal(a, "A^(" + std::to_string(k) + ")");
  M.degree = k;
  M.scale = std::move(scale);
  const double sup2 = sequence_sup(abs2(a) * bound2, &M.growth_symbolic);
  if (!std::isfinite(sup2))
    throw Error(ErrorCode::GrowthViolated, "the symbol outgrows the degree " + std::to_string(k) + " bound");
  M.growth_constant = std::sqrt(sup2);
  for (int j = -3; j <= 3; ++j) M.mappings.push_back(representative_exists(M.op, M.space(j), M.space(j - k)));

  M.real_positive = a.is_real();
  for (std::size_t n = 0; M.real_positive && n < kProbeSamples; ++n) M.real_positive = a(n).real() > 0.0;
  M.klmn_applicable = M.real_positive && k > 0 && k % 2 == 0;
  return M;
}

}  // namespace

Multiplier multiplier(const Sequence& a, int k) { return build_multiplier(a, k, std::nullopt); }

Multiplier multiplier(const Sequence& a, int k, const SemiFrameScale& scale) { return build_multiplier(a, k, scale); }

Multiplier riesz_multiplier(const Sequence& alpha, const SemiFrameScale& scale) {
  const Sequence symbol = alpha * pow(scale.m(), Rational(-2));
  if (!scale.upper_semi_frame()) return multiplier(symbol, 0, scale);
  // The sharpest degree: the smallest k with |symbol| <= c m^k.
  for (int k = -4; k <= 8; ++k)
    if (std::isfinite(sequence_sup(abs2(symbol) * pow(scale.m(), Rational(-2 * k))))) return multiplier(symbol, k, scale);
  throw Error(ErrorCode::GrowthViolated, "R^alpha has no finite degree on this scale");
}

MultiplierSpectrum multiplier_spectrum(const Multiplier& M, const Grid& grid, const ExtendedSpectrumOptions& options) {
  if (!M.real_positive || (M.degree > 0 && M.degree % 2 != 0))
    throw Error(ErrorCode::InvalidArgument, "the spectral report needs a real positive symbol of even degree");
  const int r = std::max(M.degree, 0) / 2;
  const auto K = klmn_restrict(M.op, M.space(r), M.space(-r), -1.0);
  MultiplierSpectrum out;
  out.extended = extended_spectrum(K, make_rigging(K), grid, options);
  out.tight = out.extended.tight;

  const Sequence& a = M.op.symbol();
  for (std::size_t n = 0; n < 2 * options.truncation; ++n) out.closure.push_back(a(n).real());
  const auto& as = a.asymptotics();
  if (as.known() && as.limsup_abs() == as.liminf_abs() && std::isfinite(as.limsup_abs())) {
    out.accumulation = as.limsup_abs();
    out.closure.push_back(*out.accumulation);
  }
  auto distance = [&](Complex z) {
    double d = kInf;
    for (double c : out.closure) d = std::min(d, std::abs(z - c));
    return d;
  };
  out.matches_closure = true;
  for (Complex z : out.extended.eigenvalues)
    if (distance(z) > 1e-8 * std::max(1.0, std::abs(z))) out.matches_closure = false;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (out.extended.grid_member[i] && distance(grid.point(i % grid.nx, i / grid.nx)) > out.extended.grid_tolerance)
      out.matches_closure = false;
  return out;
}

FrameBounds semi_frame_bounds(const SemiFrameScale& scale, std::size_t N) {
  if (N == 0) throw Error(ErrorCode::InvalidArgument, "semi_frame_bounds needs at least one probe");
  FrameBounds b;
  std::vector<double> v(N);
  for (std::size_t n = 0; n < N; ++n) v[n] = 1.0 / (scale.m()(n).real() * scale.m()(n).real());
  b.argsup = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  b.upper = v[b.argsup];
  b.lower = *std::min_element(v.begin(), v.end());

  const auto& as = pow(scale.m(), Rational(-2)).asymptotics();
  b.symbolic = as.known();
  if (b.symbolic) {
    b.upper = std::max(b.upper, as.limsup_abs());
    b.frame = as.liminf_abs() > 0.0;
  } else {
    b.frame = !scale.upper_semi_frame();
  }
  b.collapses = b.frame;
  if (!b.frame) {
    // Successive record lows, each at most half the previous one.
    double last = b.upper;
    for (std::size_t n = 0; n < N; ++n)
      if (v[n] <= 0.5 * last) {
        b.witness.push_back(n);
        b.witness_values.push_back(v[n]);
        last = v[n];
      }
  }
  return b;
}

Eigen::MatrixXcd ContinuousFrame::analysis() const {
  const Eigen::VectorXcd root = weights.cwiseSqrt().cast<Complex>();
  return (vectors * root.asDiagonal()).adjoint();
}

Eigen::MatrixXcd ContinuousFrame::frame_operator() const {
  const Eigen::MatrixXcd C = analysis();
  return C.adjoint() * C;
}

Eigen::MatrixXcd ContinuousFrame::gram() const {
  const Eigen::MatrixXcd C = analysis();
  return C * C.adjoint();
}

FrameBounds semi_frame_bounds(const std::vector<ContinuousFrame>& refinements) {
  if (refinements.size() < 2) throw Error(ErrorCode::InvalidArgument, "the lower bound is decided over two refinements or more");
  FrameBounds b;
  b.lower = kInf;
  for (std::size_t i = 0; i < refinements.size(); ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(refinements[i].frame_operator(), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(ev.size() - 1) > b.upper) {
      b.upper = ev(ev.size() - 1);
      b.argsup = i;
    }
    b.witness.push_back(i);
    b.witness_values.push_back(std::max(ev(0), 0.0));
    b.lower = std::min(b.lower, b.witness_values.back());
  }
  b.frame = b.witness_values.back() >= 0.5 * b.witness_values.front() && b.lower > 0.0;
  b.collapses = b.frame;
  return b;
}

double unitarity_defect(const ContinuousFrame& frame, std::size_t probes, unsigned seed) {
  const Eigen::MatrixXcd C = frame.analysis();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(C);
  if (qr.rank() < C.cols()) throw Error(ErrorCode::InvalidArgument, "the sampled analysis map is not injective");
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    Eigen::VectorXcd f(C.cols());
    for (auto& x : f) x = Complex(nd(rng), nd(rng));
    const Eigen::VectorXcd back = qr.solve(C * f);
    worst = std::max(worst, std::abs(back.norm() - f.norm()) / f.norm());
  }
  return worst;
}

TripletConstants triplet_constants(const ContinuousFrame& frame) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(frame.frame_operator(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  TripletConstants t;
  t.inner = t.outer = std::sqrt(std::max(ev(ev.size() - 1), 0.0));
  t.reverse = ev(0) > 0.0 ? 1.0 / std::sqrt(ev(0)) : kInf;
  t.contained = std::isfinite(t.inner) && std::isfinite(t.outer);
  return t;
}

Eigen::VectorXcd sample_symbol(const ContinuousSymbol& m, const ContinuousFrame& X) {
  const Eigen::Index n = X.points.size();
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  if (m.kind == ContinuousSymbol::Class::Delta) {
    Eigen::Index i0 = 0;
    (X.points.array() - m.at).abs().minCoeff(&i0);
    v(i0) = 1.0 / X.weights(i0);
    return v;
  }
  if (!m.fn) throw Error(ErrorCode::InvalidArgument, "symbol without a function");
  double sup = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = m.fn(X.points(i));
    if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag()))
      throw Error(ErrorCode::SymbolUnbounded, "the symbol is not finite at a grid point");
    sup = std::max(sup, std::abs(v(i)));
  }
  if (m.kind == ContinuousSymbol::Class::Bounded) {
    for (int k = 0; k <= 40; ++k)
      for (double sgn : {-1.0, 1.0}) {
        const Complex z = m.fn(sgn * std::ldexp(1.0, k));
        if (!std::isfinite(std::abs(z)) || std::abs(z) > 1e6 * std::max(1.0, sup))
          throw Error(ErrorCode::SymbolUnbounded, "the symbol grows at large |x|; declare it integrable instead");
      }
  }
  return v;
}

ContinuousMultiplier continuous_multiplier(const ContinuousSymbol& m, const ContinuousFrame& psi,
                                           const ContinuousFrame& phi, unsigned jobs) {
  if (psi.points.size() != phi.points.size() || psi.points != phi.points || psi.weights != phi.weights ||
      psi.vectors.rows() != phi.vectors.rows())
    throw Error(ErrorCode::InvalidArgument, "the two frames must share the quadrature grid and the Hilbert space");
  const Eigen::VectorXcd mv = sample_symbol(m, psi);
  const Eigen::Index dim = psi.vectors.rows(), npts = psi.points.size();

  ContinuousMultiplier out;
  out.direct = Eigen::MatrixXcd::Zero(dim, dim);
  detail::parallel_for(static_cast<std::size_t>(dim), jobs, [&](std::size_t c) {
    const auto col = static_cast<Eigen::Index>(c);
    for (Eigen::Index i = 0; i < npts; ++i) {
      const Complex w = psi.weights(i) * mv(i) * std::conj(psi.vectors(col, i));
      if (w != Complex(0.0)) out.direct.col(col) += w * phi.vectors.col(i);
    }
  });
  out.factorized = phi.analysis().adjoint() * mv.asDiagonal() * psi.analysis();
  out.agreement = relative_gap(out.direct, out.factorized);
  out.bounded = m.kind == ContinuousSymbol::Class::Bounded;
  out.norm = Eigen::JacobiSVD<Eigen::MatrixXcd>(out.direct).singularValues()(0);
  out.hermitian_defect = relative_gap(out.direct, out.direct.adjoint());
  return out;
}

SingularValueDecay singular_value_decay(const Eigen::MatrixXcd& M, double rel) {
  SingularValueDecay d;
  d.values = Eigen::BDCSVD<Eigen::MatrixXcd>(M).singularValues();
  d.monotone = true;
  for (Eigen::Index i = 1; i < d.values.size(); ++i) d.monotone = d.monotone && d.values(i) <= d.values(i - 1);
  const double cut = d.values.size() ? rel * d.values(0) : 0.0;
  for (Eigen::Index i = 0; i < d.values.size(); ++i)
    if (d.values(i) > cut) ++d.effective_rank;
  return d;
}

RadialProfile affine_profile(const std::string& name) {
  if (name == "gaussian") return [](double r) { return Complex(std::exp(-0.5 * r * r)); };
  if (name == "exponential") return [](double r) { return Complex(std::exp(-r)); };
  if (name == "rational") return [](double r) { return Complex(1.0 / (1.0 + r * r)); };
  throw Error(ErrorCode::InvalidArgument, "unknown radial profile '" + name + "'");
}

namespace {

double radial_mass(const RadialProfile& psi, int n, double r_max, std::size_t J) {
  const double h = r_max / static_cast<double>(J);
  double q = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const double r = (static_cast<double>(j) + 0.5) * h;
    q += h * std::pow(r, n - 1) * std::norm(psi(r));
  }
  return q;
}

}  // namespace

AffineFrameModel affine_frame_build(RadialProfile psi, int n, const RadialGrid& grid, bool normalize, double tol) {
  if (n < 1 || grid.points < 2 || !(grid.r_max > 0.0))
    throw Error(ErrorCode::InvalidArgument, "the affine model needs n >= 1, r_max > 0 and at least two radial points");
  const auto J = static_cast<Eigen::Index>(grid.points);
  AffineFrameModel A;
  A.n = n;
  A.h = grid.r_max / static_cast<double>(J);
  A.r.resize(J);
  A.s.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    A.r(j) = (static_cast<double>(j) + 0.5) * A.h;
    A.s(j) = 2.0 * std::numbers::pi * std::pow(A.r(j), n - 1) * std::norm(psi(A.r(j)));
  }
  const double sup = A.s.maxCoeff();
  if (!(sup > 0.0) || !std::isfinite(sup)) throw Error(ErrorCode::NotAdmissible, "the profile vanishes on the grid");
  if (normalize) {
    A.normalization = 1.0 / std::sqrt(sup);
    A.s /= sup;
  } else if (std::abs(sup - 1.0) > tol) {
    throw Error(ErrorCode::NotAdmissible, "sup s(r) = " + std::to_string(sup) + " instead of 1");
  }
  for (Eigen::Index j = 0; j + 1 < J; ++j)
    if (A.s(j) == 0.0 && A.s(j + 1) == 0.0)
      throw Error(ErrorCode::NotAdmissible, "psi vanishes on an interval, not only at isolated points");
  const double c = A.normalization;
  A.psi = [psi = std::move(psi), c](double r) { return c * psi(r); };
  A.s_sup = A.s.maxCoeff();
  A.s_inf = A.s.minCoeff();

  const double dx = 2.0 * std::numbers::pi / (static_cast<double>(J) * A.h);
  A.frame.points.resize(J);
  A.frame.weights = Eigen::VectorXd::Constant(J, dx);
  for (Eigen::Index i = 0; i < J; ++i) A.frame.points(i) = static_cast<double>(i - J / 2) * dx;
  A.frame.vectors.resize(J, J);
  for (Eigen::Index i = 0; i < J; ++i) A.frame.vectors.col(i) = A.frame_vector(A.frame.points(i));

  A.frame_operator_defect = max_abs(A.frame.frame_operator() - Eigen::MatrixXcd(A.s.cast<Complex>().asDiagonal()));
  A.quadrature_error = 4.0 / 3.0 *
                       std::abs(radial_mass(A.psi, n, grid.r_max, grid.points) -
                                radial_mass(A.psi, n, grid.r_max, 2 * grid.points));
  return A;
}

Eigen::VectorXcd AffineFrameModel::coordinates(const Eigen::VectorXcd& v) const {
  return v.cwiseProduct((h * r.array().pow(n - 1)).sqrt().matrix().cast<Complex>());
}

Eigen::VectorXcd AffineFrameModel::values(const Eigen::VectorXcd& c) const {
  return c.cwiseQuotient((h * r.array().pow(n - 1)).sqrt().matrix().cast<Complex>());
}

Eigen::VectorXcd AffineFrameModel::frame_vector(double x) const {
  Eigen::VectorXcd v(r.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) v(j) = std::exp(Complex(0.0, -x * r(j))) * psi(r(j));
  return coordinates(v);
}

double AffineFrameModel::scale_norm2(const Eigen::VectorXcd& v, int k) const {
  if (v.size() != r.size()) throw Error(ErrorCode::InvalidArgument, "grid values have the wrong length");
  double q = 0.0;
  for (Eigen::Index j = 0; j < r.size(); ++j) q += h * std::pow(r(j), n - 1) * std::norm(v(j)) * std::pow(s(j), -k);
  return q;
}

double AffineFrameModel::inverse_frame_vector_norm() const {
  Eigen::VectorXcd v(r.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) v(j) = psi(r(j));
  return std::sqrt(scale_norm2(v, 2));
}

DeltaProjection delta_projection(const AffineFrameModel& model) {
  DeltaProjection d;
  d.M = continuous_multiplier(ContinuousSymbol::delta(0.0), model.frame, model.frame).direct;
  const Eigen::VectorXcd v = model.frame_vector(0.0);
  d.dyad = v * v.adjoint();
  d.defect = max_abs(d.M - d.dyad);
  d.projection_defect = max_abs(d.M * d.M - d.M);
  d.quadrature_error = model.quadrature_error;
  return d;
}

DyadicDeltaReport dyadic_delta_model(const PipVector& g, const Grid& grid, std::size_t kernel_size, unsigned jobs) {
  if (membership(g, SpaceIndex::central()).in)
    throw Error(ErrorCode::GeneratorTooRegular, "the generator lies in l^2, so M is an ordinary bounded dyad");
  if (!membership(g, SpaceIndex::power(Rational(-3))).in)
    throw Error(ErrorCode::InvalidArgument, "the generator is not in s_-3");
  DyadicDeltaReport R;
  R.op = PipOperator::dyadic(g, g);
  std::vector<std::pair<SpaceIndex, SpaceIndex>> pairs;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= a; ++b) {
      const SpaceIndex q = SpaceIndex::power(Rational(a)), p = SpaceIndex::power(Rational(b));
      pairs.emplace_back(q, p);
      auto c = representative_exists(R.op, q, p);
      if (c.valid) R.mappings.push_back(c);
    }

  for (std::size_t k = 0; k < kernel_size; ++k) {
    PipVector v({{k, std::conj(g[k + 1])}, {k + 1, -std::conj(g[k])}});
    R.kernel_residual = std::max(R.kernel_residual, std::abs(pairing(g, v)));
    R.kernel.push_back(std::move(v));
  }

  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  R.min_form = kInf;
  for (int t = 0; t < 20; ++t) {
    std::vector<PipVector::Entry> e;
    for (std::size_t i = 0; i < 8; ++i) e.push_back({i, Complex(nd(rng), nd(rng))});
    const PipVector f(e);
    const Complex form = pairing(act(R.op, f), f);
    const Complex gf = pairing(g, f);
    R.min_form = std::min(R.min_form, form.real());
    R.form_identity = std::max(R.form_identity, std::abs(form - std::norm(gf)));
  }

  R.j_spectrum = j_resolvent(R.op, pairs, grid, {}, jobs);
  R.j_spectrum_is_plane = std::all_of(R.j_spectrum.sigma.begin(), R.j_spectrum.sigma.end(), [](bool b) { return b; });
  for (const auto& region : R.j_spectrum.regions)
    if (same_index(region.q, region.p))
      for (bool b : region.resolvent) R.equal_weight_regular = R.equal_weight_regular || b;
  return R;
}

}  // namespace pip
