#include "pip/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "parallel.hpp"

namespace pip {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kResidualCoords = 512;

void require_sequence(const KreinModel& m, const char* what) {
  if (m.T.kind() != FreeOperator::Kind::Sequence)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " needs a sequence model");
}

void require_continuum(const KreinModel& m, const char* what) {
  if (m.T.kind() != FreeOperator::Kind::Continuum1D)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " needs a 1-D point-interaction model");
}

Eigen::MatrixXcd checked_inverse(const Eigen::MatrixXcd& B) {
  if (B.rows() == 0 || B.rows() != B.cols()) throw Error(ErrorCode::InvalidArgument, "B must be square and nonempty");
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(B);
  if (!lu.isInvertible()) throw Error(ErrorCode::InvalidArgument, "B must be invertible");
  return lu.inverse();
}

bool is_hermitian(const Eigen::MatrixXcd& B) {
  return (B - B.adjoint()).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, B.cwiseAbs().maxCoeff());
}

Complex green_1d(Complex kappa, double dx) { return std::exp(-kappa * std::abs(dx)) / (2.0 * kappa); }

double norm2(const Eigen::MatrixXcd& M) { return Eigen::JacobiSVD<Eigen::MatrixXcd>(M).singularValues()(0); }

// Smallest singular value of Gamma against the size of the two terms it is the difference of.
bool gamma_singular(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& B_inverse) {
  auto s = Eigen::JacobiSVD<Eigen::MatrixXcd>(G).singularValues();
  const double scale = norm2(G + B_inverse) + norm2(B_inverse);
  return s(s.size() - 1) <= 1e-12 * scale;
}

}  // namespace

FreeOperator FreeOperator::sequence(Sequence t) {
  if (!t.is_real()) throw Error(ErrorCode::InvalidArgument, "the free symbol must be real");
  FreeOperator T;
  T.kind_ = Kind::Sequence;
  auto ex = abs_extrema(t, kSampleHorizon);
  for (std::size_t n = 0; n < 64; ++n)
    if (t(n).real() < 0) throw Error(ErrorCode::InvalidArgument, "the free symbol must be nonnegative");
  T.threshold_ = ex.inf;
  T.t_ = std::move(t);
  return T;
}

FreeOperator FreeOperator::continuum_1d() {
  FreeOperator T;
  T.kind_ = Kind::Continuum1D;
  T.threshold_ = 0.0;
  return T;
}

const Sequence& FreeOperator::symbol() const {
  if (kind_ != Kind::Sequence) throw Error(ErrorCode::InvalidArgument, "p^2 has no sequence symbol");
  return t_;
}

PipOperator FreeOperator::op() const { return PipOperator::diagonal(symbol(), "T"); }

double FreeOperator::threshold() const { return threshold_; }

SpaceIndex FreeOperator::scale(Rational r) const {
  return SpaceIndex::weighted(pow(symbol() + 1.0, r), "H_" + to_string(r));
}

bool FreeOperator::in_spectrum(Complex lambda) const {
  const double tol = 1e-14 * std::max(1.0, std::abs(lambda));
  if (std::abs(lambda.imag()) > tol) return false;
  if (kind_ == Kind::Continuum1D) return lambda.real() >= -tol;
  if (lambda.real() < threshold_ - tol) return false;
  return abs_extrema(t_ - lambda, kSampleHorizon).inf <= tol;
}

PipOperator KreinModel::H() const {
  if (T.kind() != FreeOperator::Kind::Sequence) throw Error(ErrorCode::InvalidArgument, "H needs a sequence model");
  return PipOperator::sum({T.op(), PipOperator::finite_rank(phi, -B)});
}

KreinModel sequence_model(Sequence t, std::vector<PipVector> phi, Eigen::MatrixXcd B) {
  if (phi.size() != static_cast<std::size_t>(B.rows()))
    throw Error(ErrorCode::InvalidArgument, "Phi and B disagree in rank");
  KreinModel m{FreeOperator::sequence(std::move(t)), std::move(phi), {}, B, checked_inverse(B), is_hermitian(B)};
  return m;
}

KreinModel delta_model(std::vector<double> centers, Eigen::MatrixXcd B) {
  if (centers.size() != static_cast<std::size_t>(B.rows()))
    throw Error(ErrorCode::InvalidArgument, "centres and B disagree in rank");
  KreinModel m{FreeOperator::continuum_1d(), {}, std::move(centers), B, checked_inverse(B), is_hermitian(B)};
  return m;
}

KreinModel delta1d(double alpha) {
  if (alpha == 0.0) throw Error(ErrorCode::InvalidArgument, "alpha = 0 is the infinite-coupling limit");
  Eigen::MatrixXcd B(1, 1);
  B(0, 0) = 1.0 / alpha;
  return delta_model({0.0}, B);
}

Complex kappa_of(Complex lambda) {
  Complex k = std::sqrt(-lambda);
  return k.real() < 0 ? -k : k;
}

PipOperator free_resolvent(const FreeOperator& T, Complex lambda) {
  if (T.in_spectrum(lambda)) throw Error(ErrorCode::InSpectrum, "lambda lies in the spectrum of T");
  return PipOperator::diagonal(reciprocal(T.symbol() - lambda), "R_T");
}

PipOperator free_resolvent_sqrt(const FreeOperator& T, double lambda) {
  if (lambda >= T.threshold()) throw Error(ErrorCode::InvalidArgument, "square root needs lambda below the threshold");
  return PipOperator::diagonal(pow(T.symbol() - lambda, Rational(-1, 2)), "R_T^1/2");
}

MappingCertificate free_resolvent_mapping(const FreeOperator& T, Complex lambda, Rational r, int step) {
  if (step != 1 && step != 2) throw Error(ErrorCode::InvalidArgument, "step must be 1 or 2");
  const SpaceIndex from = T.scale(r), to = T.scale(r + Rational(step));
  MappingCertificate c;
  if (step == 2) {
    c.forward = representative_exists(free_resolvent(T, lambda), from, to);
    c.inverse = representative_exists(PipOperator::diagonal(T.symbol() - lambda), to, from);
  } else {
    c.forward = representative_exists(free_resolvent_sqrt(T, lambda.real()), from, to);
    c.inverse = representative_exists(PipOperator::diagonal(pow(T.symbol() - lambda.real(), Rational(1, 2))), to, from);
  }
  c.bijective = c.forward.valid && c.inverse.valid;
  return c;
}

GammaValue gamma_matrix(const KreinModel& model, Complex lambda) {
  if (model.T.in_spectrum(lambda)) throw Error(ErrorCode::InSpectrum, "lambda lies in the spectrum of T");
  const Eigen::Index n = model.B.rows();
  GammaValue g;
  g.matrix = -model.B_inverse;
  if (model.T.kind() == FreeOperator::Kind::Continuum1D) {
    const Complex k = kappa_of(lambda);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        g.matrix(i, j) += green_1d(k, model.centers[i] - model.centers[j]);
    g.closed_form = true;
    return g;
  }
  const SpaceIndex mild = model.T.scale(-1);
  for (const auto& f : model.phi) {
    if (membership(f, mild).in) continue;
    const bool strong = membership(f, model.T.scale(-2)).in;
    throw Error(ErrorCode::PairingDiverges,
                strong ? "a coupling vector lies in H_-2 but not in H_-1 (strongly singular, out of scope)"
                       : "a coupling vector is not even in H_-2, or sits on the edge of H_-1");
  }
  const Sequence r = reciprocal(model.T.symbol() - lambda);
  for (Eigen::Index j = 0; j < n; ++j) {
    const PipVector Rf = model.phi[j].multiplied(r);
    for (Eigen::Index i = 0; i < n; ++i) {
      try {
        auto p = partial_inner_product(model.phi[i], Rf);
        g.matrix(i, j) += p.value;
        g.error_bound += p.error_bound;
      } catch (const Error& e) {
        throw Error(ErrorCode::PairingDiverges, e.what());
      }
    }
  }
  return g;
}

GammaValue gamma_quadrature(const KreinModel& model, Complex lambda) {
  require_continuum(model, "gamma_quadrature");
  if (model.T.in_spectrum(lambda)) throw Error(ErrorCode::InSpectrum, "lambda lies in [0, inf)");
  const Complex k = kappa_of(lambda), k2 = k * k;
  auto re = [k2](double p) { return (1.0 / (p * p + k2)).real(); };
  auto im = [k2](double p) { return (1.0 / (p * p + k2)).imag(); };
  boost::math::quadrature::exp_sinh<double> es;
  boost::math::quadrature::ooura_fourier_cos<double> oc;
  const Eigen::Index n = model.B.rows();
  GammaValue g;
  g.matrix = -model.B_inverse;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dx = std::abs(model.centers[i] - model.centers[j]);
      Complex v;
      double err = 0.0;
      if (dx == 0.0) {
        double e1 = 0, e2 = 0;
        v = Complex(es.integrate(re, 0.0, kInf, 1e-12, &e1), es.integrate(im, 0.0, kInf, 1e-12, &e2));
        err = e1 + e2;
      } else {
        auto a = oc.integrate(re, dx);
        auto b = oc.integrate(im, dx);
        v = Complex(a.first, b.first);
        err = a.second * std::abs(a.first) + b.second * std::abs(b.first);
      }
      // (1/2 pi) int_R e^{ip dx} / (p^2 + kappa^2) dp, with the even integrand folded.
      g.matrix(i, j) += v / std::numbers::pi;
      g.error_bound += err / std::numbers::pi;
    }
  return g;
}

Complex gamma_determinant(const KreinModel& model, Complex lambda) {
  return gamma_matrix(model, lambda).matrix.determinant();
}

PipOperator krein_resolvent(const KreinModel& model, Complex lambda) {
  require_sequence(model, "krein_resolvent");
  if (model.T.in_spectrum(lambda)) throw Error(ErrorCode::FreeSpectrum, "lambda lies in the spectrum of T");
  auto G = gamma_matrix(model, lambda).matrix;
  if (gamma_singular(G, model.B_inverse)) throw Error(ErrorCode::GammaSingular, "det Gamma(lambda) = 0: a bound state");
  const Sequence r = reciprocal(model.T.symbol() - lambda);
  std::vector<PipVector> U, V;
  for (const auto& f : model.phi) {
    U.push_back(f.multiplied(r));
    V.push_back(f.multiplied(conj(r)));
  }
  return PipOperator::sum({PipOperator::diagonal(r, "R_T"), PipOperator::low_rank(U, V, -G.inverse())});
}

Complex KreinKernel::free(double x, double y) const { return green_1d(kappa, x - y); }

Complex KreinKernel::operator()(double x, double y) const {
  Complex v = free(x, y);
  const Eigen::Index n = gamma_inverse.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v -= free(x, centers[i]) * gamma_inverse(i, j) * free(centers[j], y);
  return v;
}

KreinKernel krein_kernel_1d(const KreinModel& model, Complex lambda) {
  require_continuum(model, "krein_kernel_1d");
  if (model.T.in_spectrum(lambda)) throw Error(ErrorCode::FreeSpectrum, "lambda lies in [0, inf)");
  auto G = gamma_matrix(model, lambda).matrix;
  if (gamma_singular(G, model.B_inverse)) throw Error(ErrorCode::GammaSingular, "det Gamma(lambda) = 0: a bound state");
  return KreinKernel{lambda, kappa_of(lambda), model.centers, G.inverse()};
}

LatticeResolvent delta_lattice_resolvent(const KreinModel& model, Complex lambda, std::size_t N, double L) {
  require_continuum(model, "delta_lattice_resolvent");
  if (N < 3 || !(L > 0)) throw Error(ErrorCode::InvalidArgument, "need N >= 3 nodes on [-L, L]");
  const Complex k = kappa_of(lambda);
  const double h = 2 * L / static_cast<double>(N - 1);
  LatticeResolvent out;
  out.nodes = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(N), -L, L);

  // Each element contributes its exact Dirichlet-to-Neumann map for -u'' + kappa^2 u.
  const Complex diag = k * std::cosh(k * h) / std::sinh(k * h), off = -k / std::sinh(k * h);
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (Eigen::Index a = 0; a + 1 < static_cast<Eigen::Index>(N); ++a) {
    K(a, a) += diag;
    K(a + 1, a + 1) += diag;
    K(a, a + 1) += off;
    K(a + 1, a) += off;
  }
  // Outgoing exterior solutions e^{-kappa |x|}.
  K(0, 0) += k;
  K(static_cast<Eigen::Index>(N) - 1, static_cast<Eigen::Index>(N) - 1) += k;

  std::vector<Eigen::Index> at;
  for (double x : model.centers) {
    const double pos = (x + L) / h;
    const double idx = std::round(pos);
    if (std::abs(pos - idx) * h > 1e-9 * std::max(1.0, L) || idx < 0 || idx > static_cast<double>(N - 1))
      throw Error(ErrorCode::InvalidArgument, "every centre must be a grid node");
    at.push_back(static_cast<Eigen::Index>(idx));
  }
  for (std::size_t i = 0; i < at.size(); ++i)
    for (std::size_t j = 0; j < at.size(); ++j)
      K(at[i], at[j]) -= model.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  out.G = K.inverse();
  return out;
}

double krein_residual(const KreinModel& model, Complex lambda, std::size_t kmax) {
  const PipOperator R = krein_resolvent(model, lambda);
  const PipOperator Hl = PipOperator::sum({model.H(), PipOperator::identity(-lambda)});
  double worst = 0.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    const PipVector e = PipVector::basis(k);
    const PipVector res = act(Hl, act(R, e)) - e;
    worst = std::max(worst, res.dense(kResidualCoords).norm());
  }
  return worst;
}

std::vector<BoundState> bound_states(const KreinModel& model, const BoundStateOptions& options) {
  if (!model.hermitian) throw Error(ErrorCode::InvalidArgument, "bound states need a Hermitian B");
  const double top = model.T.threshold();
  auto det_at = [&](double d) { return gamma_determinant(model, top - d).real(); };

  // log-spaced distances below the threshold, largest first so lambda ascends
  const std::size_t M = std::max<std::size_t>(options.grid, 2);
  std::vector<double> d(M), v(M);
  const double lo = std::log(options.closest), hi = std::log(options.span);
  for (std::size_t i = 0; i < M; ++i) d[i] = std::exp(hi - (hi - lo) * static_cast<double>(i) / static_cast<double>(M - 1));
  detail::parallel_for(M, options.jobs, [&](std::size_t i) { v[i] = det_at(d[i]); });

  std::vector<BoundState> out;
  for (std::size_t i = 0; i + 1 < M; ++i) {
    if (v[i] != 0.0 && (v[i] > 0) == (v[i + 1] > 0)) continue;
    if (v[i + 1] == 0.0 && i + 2 < M) continue;  // counted at the next bracket
    double mid = d[i];
    if (v[i] != 0.0) {
      std::uintmax_t iters = 200;
      auto root = boost::math::tools::toms748_solve(det_at, d[i + 1], d[i], v[i + 1], v[i],
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
      mid = 0.5 * (root.first + root.second);
    }
    BoundState s;
    s.lambda = top - mid;
    auto G = gamma_matrix(model, s.lambda).matrix;
    s.det = std::abs(G.determinant());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G, Eigen::ComputeFullV);
    s.y = svd.matrixV().col(G.cols() - 1);
    if (model.T.kind() == FreeOperator::Kind::Sequence) {
      const Sequence r = reciprocal(model.T.symbol() - s.lambda);
      PipVector x;
      for (Eigen::Index i = 0; i < s.y.size(); ++i) x = x + s.y(i) * model.phi[static_cast<std::size_t>(i)].multiplied(r);
      const PipVector res = act(model.H(), x) - s.lambda * x;
      s.residual = res.dense(8 * kResidualCoords).norm() / x.dense(8 * kResidualCoords).norm();
    } else {
      s.residual = (G * s.y).norm();
    }
    out.push_back(std::move(s));
  }
  if (out.size() > model.rank()) {
    std::ostringstream os;
    os << out.size() << " roots of det Gamma for a rank " << model.rank() << " perturbation";
    throw Error(ErrorCode::Unstable, os.str());
  }
  return out;
}

Resonance resonances_1d(double alpha) {
  if (alpha == 0.0) throw Error(ErrorCode::InvalidArgument, "alpha = 0 has no finite pole");
  Resonance r;
  r.kappa = 1.0 / (2.0 * alpha);
  r.lambda = -r.kappa * r.kappa;
  r.bound_state = alpha > 0;
  r.sheet = r.bound_state ? "physical" : "second";
  return r;
}

Resonance resonances_1d(const KreinModel& model) {
  if (model.T.kind() != FreeOperator::Kind::Continuum1D || model.rank() != 1)
    throw Error(ErrorCode::NotClosedForm, "the continuation is only available for one 1-D centre");
  const Complex a = model.B_inverse(0, 0);
  if (std::abs(a.imag()) > 1e-14 * std::max(1.0, std::abs(a)))
    throw Error(ErrorCode::NotClosedForm, "complex coupling");
  return resonances_1d(a.real());
}

bool exponential_membership(int nu, int r) {
  if (nu < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be at least 1");
  return 2 * r < -nu;
}

double exponential_norm2(int nu, int r) {
  if (!exponential_membership(nu, r)) return kInf;
  const double half = 0.5 * nu;
  // angular part 2 pi^{nu/2} / Gamma(nu/2), radial part B(nu/2, -r - nu/2) / 2
  const double sphere = 2.0 * std::pow(std::numbers::pi, half) / boost::math::tgamma(half);
  const double radial = 0.5 * boost::math::beta(half, -r - half);
  return sphere * radial / std::pow(2.0 * std::numbers::pi, nu);
}

}  // namespace pip
