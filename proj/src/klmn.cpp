#include "pip/klmn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parallel.hpp"

namespace pip {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs(const Eigen::MatrixXcd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

double asymmetry(const Eigen::MatrixXcd& M) {
  return max_abs(M - M.adjoint()) / std::max(1.0, max_abs(M));
}

void require_regular(const SpaceIndex& r, const char* what) {
  if (!r.is_regular()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be an assaying space");
}

std::optional<Sequence> diagonal_part(const PipOperator& X) {
  switch (X.kind()) {
    case OpKind::Diagonal: return X.symbol();
    case OpKind::ScaledIdentity: return Sequence::constant(X.lambda());
    case OpKind::Sum:
      for (const auto& t : X.terms())
        if (t.kind() == OpKind::Diagonal) return t.symbol();
      return std::nullopt;
    default: return std::nullopt;
  }
}

bool purely_diagonal(const PipOperator& X) {
  return X.kind() == OpKind::Diagonal || X.kind() == OpKind::ScaledIdentity;
}

double smallest_singular_value(const Eigen::MatrixXcd& M) {
  if (M.size() == 0) return 0.0;
  auto s = Eigen::BDCSVD<Eigen::MatrixXcd>(M).singularValues();
  return s(s.size() - 1);
}

}  // namespace

std::string_view chain_case_name(ChainCaseKind k) {
  switch (k) {
    case ChainCaseKind::Ia: return "ia";
    case ChainCaseKind::Ib: return "ib";
    case ChainCaseKind::IIa: return "iia";
    case ChainCaseKind::IIb: return "iib";
    case ChainCaseKind::Boundary: return "boundary";
  }
  return "?";
}

std::string space_name(const SpaceIndex& r) {
  if (r.kind() == SpaceKind::Intersection) return "V#";
  if (r.kind() == SpaceKind::Union) return "V";
  if (!r.label().empty()) return r.label();
  if (auto e = r.power_exponent()) return "s_" + to_string(*e);
  return "V_r";
}

ChainCase chain_case_classify(const SpaceIndex& m, const SpaceIndex& n) {
  require_regular(m, "m");
  require_regular(n, "n");
  const Order mn = compare(m, n);
  if (mn == Order::Incomparable) throw Error(ErrorCode::NotComparable, space_name(m) + " and " + space_name(n));
  if (mn == Order::Greater)
    throw Error(ErrorCode::InvalidArgument, "expected " + space_name(m) + " <= " + space_name(n));

  const SpaceIndex om = dual_index(m), on = dual_index(n), zero = SpaceIndex::central();
  const std::vector<SpaceIndex> all{m, n, om, on, zero};
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      if (compare(all[i], all[j]) == Order::Incomparable)
        throw Error(ErrorCode::NotAChain, space_name(all[i]) + " and " + space_name(all[j]) + " are incomparable");

  ChainCase c;
  const Order m_on = compare(m, on);
  if (m_on == Order::Equal) {
    c.kind = ChainCaseKind::Boundary;
    c.chain = {m, zero, om};
  } else if (m_on == Order::Less) {
    // n = ov n only at the centre, where both sub-cases coincide.
    const Order n_on = compare(n, on);
    if (n_on == Order::Less) {
      c.kind = ChainCaseKind::Ia;
      c.chain = {m, n, zero, on, om};
    } else {
      c.kind = ChainCaseKind::Ib;
      c.chain = {m, on, zero, n, om};
    }
  } else {
    const Order m_om = compare(m, om);
    if (m_om == Order::Greater) {
      c.kind = ChainCaseKind::IIb;
      c.chain = {on, om, zero, m, n};
    } else {
      c.kind = ChainCaseKind::IIa;
      c.chain = {on, m, zero, om, n};
    }
  }

  // Collapse coincident neighbours.
  std::vector<SpaceIndex> chain;
  for (const auto& s : c.chain)
    if (chain.empty() || compare(chain.back(), s) != Order::Equal) chain.push_back(s);
  c.chain = std::move(chain);
  std::ostringstream os;
  for (std::size_t i = 0; i < c.chain.size(); ++i) os << (i ? " <= " : "") << space_name(c.chain[i]);
  c.ordering = os.str();

  const bool first = c.kind == ChainCaseKind::Ia || c.kind == ChainCaseKind::Ib || c.kind == ChainCaseKind::Boundary;
  c.small = first ? m : on;
  c.large = first ? om : n;
  c.eigenvector_space = first ? om : n;
  c.expansion_applies = c.kind == ChainCaseKind::Ib || c.kind == ChainCaseKind::IIa || c.kind == ChainCaseKind::Boundary;
  return c;
}

ChainCase chain_case_classify(const Lattice& lattice, const SpaceIndex& m, const SpaceIndex& n) {
  if (!lattice.is_chain()) throw Error(ErrorCode::NotAChain, "the lattice is not totally ordered");
  if (!lattice.contains(m) || !lattice.contains(n))
    throw Error(ErrorCode::InvalidArgument, "m and n must belong to the lattice");
  return chain_case_classify(m, n);
}

QuintetReport quintet_check(const SpaceIndex& m, const SpaceIndex& n) {
  require_regular(m, "m");
  require_regular(n, "n");
  const SpaceIndex om = dual_index(m), on = dual_index(n);
  QuintetReport q;
  q.spaces = {meet(m, on), meet(m, om), SpaceIndex::central(), join(m, om), join(om, n)};
  q.holds = true;
  for (std::size_t i = 0; i + 1 < q.spaces.size(); ++i) {
    q.embeddings.push_back(embedding(q.spaces[i], q.spaces[i + 1]));
    q.holds = q.holds && q.embeddings.back().exists;
  }
  return q;
}

bool is_symmetric(const PipOperator& X, std::size_t N, double tol) {
  if (structurally_equal(adjoint(X), X)) return true;
  Eigen::MatrixXcd B = dense_block(X, N, N);
  return max_abs(B - B.adjoint()) <= tol * std::max(1.0, max_abs(B));
}

KlmnRestriction klmn_restrict(const PipOperator& X, const SpaceIndex& m, const SpaceIndex& n, double lambda,
                              const KlmnOptions& options) {
  require_regular(m, "m");
  require_regular(n, "n");
  if (!is_symmetric(X)) throw Error(ErrorCode::NotSymmetric, X.describe());
  if (!leq(m, n)) throw Error(ErrorCode::InvalidArgument, "expected " + space_name(m) + " <= " + space_name(n));
  if (!representative_exists(X, m, n, options.spectral.cert).valid)
    throw Error(ErrorCode::NoRepresentative, X.describe() + " from " + space_name(m) + " to " + space_name(n));

  KlmnRestriction K;
  K.m = m;
  K.n = n;
  K.lambda = lambda;
  K.X = X;
  const PipOperator Xl = PipOperator::sum({X, PipOperator::identity(-lambda)});
  try {
    K.resolvent = invert(Xl, m, n, options.spectral.cert).op;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotClosedForm) throw Error(ErrorCode::NotInvertible, e.what());
    if (!in_resolvent_set(X, m, n, lambda, options.spectral))
      throw Error(ErrorCode::NotInvertible, "lambda is not a regular point of defect zero");
    K.resolvent_exact = false;
  }

  try {
    K.chain_case = chain_case_classify(m, n);
  } catch (const Error&) {
    K.chain_case.reset();
  }
  const SpaceIndex zero = SpaceIndex::central();
  if (leq(m, zero) && leq(zero, n)) {
    K.domain = "{f in " + space_name(m) + " : Xf in s_0}";
    K.predicate_domain = true;
  } else if (K.chain_case) {
    K.domain = "{f in s_0 : Xf in s_0}";
    K.predicate_domain = true;
  } else {
    K.domain = "R_00 s_0";
  }

  K.min_distance = kInf;
  K.hermitian = true;
  for (std::size_t N : options.truncations) {
    KlmnTruncation T;
    T.N = N;
    if (K.resolvent_exact) {
      T.R00 = dense_block(K.resolvent, N, N);
    } else {
      T.R00 = dense_block(Xl, N, N).inverse();
    }
    T.r_asymmetry = asymmetry(T.R00);
    Eigen::MatrixXcd H = 0.5 * (T.R00 + T.R00.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    const Eigen::VectorXd& mu = es.eigenvalues();
    const double top = mu.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      if (std::abs(mu(i)) > options.rank_tol * top) ++T.rank;
    if (T.rank < N) {
      std::ostringstream os;
      os << "R_00 truncation of size " << N << " has rank " << T.rank;
      throw Error(ErrorCode::DomainNotDense, os.str());
    }
    Eigen::VectorXd x = mu.cwiseInverse().array() + lambda;
    T.X0 = es.eigenvectors() * x.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    T.x_asymmetry = asymmetry(T.X0);
    T.spectrum = x;
    std::sort(T.spectrum.data(), T.spectrum.data() + T.spectrum.size());
    T.distance = (x.array() - lambda).abs().minCoeff();
    K.min_distance = std::min(K.min_distance, T.distance);
    K.hermitian = K.hermitian && T.r_asymmetry <= options.hermitian_tol && T.x_asymmetry <= options.hermitian_tol;
    K.truncations.push_back(std::move(T));
  }
  K.dense_domain = true;
  return K;
}

HilbertSchmidtReport hilbert_schmidt_check(const SpaceIndex& generator_space) {
  require_regular(generator_space, "the generator space");
  HilbertSchmidtReport r;
  try {
    auto s = sum_series(reciprocal(generator_space.weight()), 0);
    r.hilbert_schmidt = true;
    r.sum = s.value.real();
    r.certified = s.certified;
    r.detail = "sum of 1/w converges";
  } catch (const Error& e) {
    r.sum = kInf;
    r.certified = e.code() == ErrorCode::DivergentSeries;
    r.detail = e.what();
  }
  return r;
}

GeneralizedSpectralFamily::GeneralizedSpectralFamily(std::vector<SpectralAtom> atoms, std::size_t truncation)
    : atoms_(std::move(atoms)), truncation_(truncation) {
  std::stable_sort(atoms_.begin(), atoms_.end(),
                   [](const SpectralAtom& a, const SpectralAtom& b) { return a.lambda < b.lambda; });
  for (const auto& a : atoms_) truncation_ = std::max(truncation_, a.chi.head_end());
}

PipOperator GeneralizedSpectralFamily::B(double mu) const {
  std::vector<PipVector> chi;
  std::vector<double> w;
  for (const auto& a : atoms_) {
    if (a.lambda > mu) break;
    chi.push_back(a.chi);
    w.push_back(a.weight);
  }
  if (chi.empty()) return PipOperator();
  Eigen::VectorXd wv = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return PipOperator::finite_rank(std::move(chi), wv.cast<Complex>().asDiagonal());
}

Complex GeneralizedSpectralFamily::form(double mu, const PipVector& f, const PipVector& g) const {
  Complex s = 0.0;
  for (const auto& a : atoms_) {
    if (a.lambda > mu) break;
    s += a.weight * std::conj(pairing(a.chi, f)) * pairing(a.chi, g);
  }
  return s;
}

PipVector GeneralizedSpectralFamily::expand(const PipVector& f) const {
  PipVector out;
  for (const auto& a : atoms_) out = out + (a.weight * pairing(a.chi, f)) * a.chi;
  return out;
}

EigenExpansion eigen_expansion(const PipOperator& X, const SpaceIndex& r, const ExpansionOptions& options) {
  require_regular(r, "r");
  if (!leq(r, SpaceIndex::central()))
    throw Error(ErrorCode::InvalidArgument, "the range space " + space_name(r) + " must lie inside s_0");
  if (!is_symmetric(X)) throw Error(ErrorCode::NotSymmetric, X.describe());
  if (options.chain_case && !options.chain_case->expansion_applies && !options.force)
    throw Error(ErrorCode::NoCompleteFamily,
                "case (" + std::string(chain_case_name(options.chain_case->kind)) + ") " +
                    options.chain_case->ordering + " is reported only");

  EigenExpansion E;
  E.generator = hilbert_schmidt_check(options.scale);
  if (!E.generator.hilbert_schmidt && !options.force)
    throw Error(ErrorCode::NoCompleteFamily, "scale generator inverse is not Hilbert-Schmidt on " +
                                                 space_name(options.scale));
  E.eigenvector_space = dual_index(r);

  const std::size_t N = options.atoms;
  std::vector<SpectralAtom> atoms;
  if (purely_diagonal(X)) {
    const Sequence a = *diagonal_part(X);
    for (std::size_t k = 0; k < N; ++k) {
      Complex ak = a(k);
      if (std::abs(ak.imag()) > 1e-14 * std::max(1.0, std::abs(ak)))
        throw Error(ErrorCode::NotSymmetric, "complex diagonal entry");
      atoms.push_back({ak.real(), PipVector::basis(k), 1.0});
    }
  } else {
    E.exact = false;
    Eigen::MatrixXcd B = dense_block(X, N, N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (B + B.adjoint()));
    const Eigen::MatrixXcd& V = es.eigenvectors();
    const double defect = max_abs(V.adjoint() * V - Eigen::MatrixXcd::Identity(N, N));
    if (defect > options.unitarity_tol)
      throw Error(ErrorCode::NoCompleteFamily, "truncated eigenvectors leave residual mass");
    for (std::size_t k = 0; k < N; ++k) {
      PipVector chi = PipVector::from_dense(V.col(static_cast<Eigen::Index>(k)));
      Eigen::VectorXcd image = act(X, chi).dense(4 * N);
      E.edge_leak = std::max(E.edge_leak, image.tail(3 * N).norm());
      atoms.push_back({es.eigenvalues()(static_cast<Eigen::Index>(k)), std::move(chi), 1.0});
    }
  }
  E.eigenvectors_certified = true;
  for (const auto& a : atoms) E.eigenvectors_certified = E.eigenvectors_certified && membership(a.chi, E.eigenvector_space).in;
  E.family = GeneralizedSpectralFamily(std::move(atoms), N);
  return E;
}

ExpansionResiduals completeness_residuals(const GeneralizedSpectralFamily& F, const PipOperator& X,
                                          const std::vector<PipVector>& tests) {
  ExpansionResiduals r;
  r.vectors = tests.size();
  const auto& atoms = F.atoms();
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const PipVector& f = tests[i];
    const std::size_t L = std::max(F.truncation(), f.head_end());
    const double nf = f.dense(L).norm();
    double fin = 0.0;
    for (const auto& a : atoms) fin += a.weight * std::norm(pairing(a.chi, f));
    r.finiteness = std::max(r.finiteness, fin);
    if (nf > 0) r.reconstruction = std::max(r.reconstruction, (f - F.expand(f)).dense(L).norm() / nf);
    for (std::size_t j = i; j < tests.size(); ++j) {
      const PipVector& g = tests[j];
      const double ng = g.dense(std::max(L, g.head_end())).norm();
      Complex s = 0.0;
      for (const auto& a : atoms) s += a.weight * std::conj(pairing(a.chi, f)) * pairing(a.chi, g);
      const double scale = std::max(1e-300, nf * ng);
      r.parseval = std::max(r.parseval, std::abs(pairing(f, g) - s) / scale);
    }
  }
  for (std::size_t j = 0; j < F.truncation(); ++j) {
    PipVector e = PipVector::basis(j);
    PipVector Xe = act(X, e);
    for (const auto& a : atoms) {
      const double res = std::abs(pairing(a.chi, Xe) - a.lambda * pairing(a.chi, e));
      r.eigen_relation = std::max(r.eigen_relation, res / std::max(1.0, std::abs(a.lambda)));
    }
  }
  return r;
}

Reconstruction spectral_family_reconstruct(const GeneralizedSpectralFamily& F, const PipOperator& X,
                                           const PipVector& f, const PipVector& g) {
  Reconstruction out;
  out.lhs = pairing(act(X, f), g);
  double scale = 0.0;
  for (const auto& a : F.atoms()) {
    Complex term = a.lambda * a.weight * std::conj(pairing(a.chi, f)) * pairing(a.chi, g);
    out.rhs += term;
    scale += std::abs(term);
  }
  out.residual = std::abs(out.lhs - out.rhs) / std::max(1.0, scale);
  return out;
}

FamilyProfile family_profile(const GeneralizedSpectralFamily& F, const PipVector& f, const std::vector<double>& mu) {
  FamilyProfile p;
  p.mu = mu;
  std::sort(p.mu.begin(), p.mu.end());
  p.norm2 = pairing(f, f).real();
  const std::size_t T = F.truncation();
  Eigen::MatrixXcd prev = Eigen::MatrixXcd::Zero(T, T);
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    const double v = F.form(p.mu[i], f, f).real();
    if (i && v < p.values.back() - 1e-14 * std::max(1.0, p.norm2)) p.monotone = false;
    if (v > p.norm2 * (1 + 1e-12) + 1e-14) p.bounded = false;
    p.values.push_back(v);

    Eigen::MatrixXcd Bm = Eigen::MatrixXcd::Zero(T, T);
    for (const auto& a : F.atoms()) {
      if (a.lambda > p.mu[i]) break;
      Eigen::VectorXcd c = a.chi.dense(T);
      Bm += a.weight * c * c.adjoint();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Bm - prev, Eigen::EigenvaluesOnly);
    if (T && es.eigenvalues()(0) < -1e-12) p.operator_monotone = false;
    p.idempotence_defect = std::max(p.idempotence_defect, max_abs(Bm * Bm - Bm));
    prev = std::move(Bm);
  }
  return p;
}

Rigging make_rigging(const KlmnRestriction& X0, const SpaceIndex& m) {
  require_regular(m, "m");
  Rigging rg;
  rg.m = m;
  auto d = diagonal_part(X0.X);
  rg.approximate = !purely_diagonal(X0.X);
  Sequence graph = d ? Sequence::constant(1.0) + abs2(*d) : Sequence::constant(1.0);
  rg.k_space = SpaceIndex::weighted(m.weight() * graph, "K");
  rg.dense = babbitt_density(X0, rg, X0.lambda, 64).dense;
  return rg;
}

BabbittResult babbitt_density(const KlmnRestriction& X0, const Rigging& rigging, double lambda, std::size_t N,
                              std::size_t probes) {
  BabbittResult b;
  const PipOperator Xl = PipOperator::sum({X0.X, PipOperator::identity(-lambda)});
  const Sequence& w = rigging.m.weight();
  for (std::size_t size : {N, 2 * N}) {
    const std::size_t rows = size + std::max<std::size_t>(outreach(Xl), 1);
    Eigen::MatrixXcd M = dense_block(Xl, rows, size);
    for (std::size_t i = 0; i < rows; ++i) M.row(static_cast<Eigen::Index>(i)) *= std::sqrt(w(i).real());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(M);
    Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(rows, size);
    double worst = 0.0;
    for (std::size_t j = 0; j < std::min(probes, size); ++j) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Unit(rows, static_cast<Eigen::Index>(j));
      worst = std::max(worst, (e - Q * (Q.adjoint() * e)).norm());
    }
    b.sizes.push_back(size);
    b.residuals.push_back(worst);
  }
  const double r1 = b.residuals[0], r2 = b.residuals[1];
  b.dense = r2 <= 1e-13 || r2 <= 0.5 * r1;
  return b;
}

ExtendedSpectrum extended_spectrum(const KlmnRestriction& X0, const Rigging& rigging, const Grid& region,
                                   const ExtendedSpectrumOptions& options) {
  ExtendedSpectrum ex;
  ex.grid = region;
  ex.approximate = rigging.approximate || !X0.resolvent_exact;
  const SpaceIndex source = dual_index(rigging.m);
  const SpaceIndex target = dual_index(rigging.k_space);
  const std::size_t N = options.truncation;
  const std::size_t check = 4 * N;

  // Eigenpairs of the section, kept when the exact residual in K^x is small.
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(dense_block(X0.X, N, N));
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex l = es.eigenvalues()(i);
    PipVector psi = PipVector::from_dense(es.eigenvectors().col(i));
    const double nrm = truncated_norm(psi.dense(check), source);
    const PipVector res = act(X0.X, psi) - l * psi;
    if (truncated_norm(res.dense(check), target) <= options.residual_tol * nrm) ex.eigenvalues.push_back(l);
  }

  // Grid points where (X - lambda) Psi = 0 has a solution in the dual of V_m:
  // the smallest singular value keeps falling geometrically with the size.
  const std::size_t n = region.size();
  ex.grid_sigma.assign(n, 0.0);
  std::vector<char> member(n, 0);
  detail::parallel_for(n, options.jobs, [&](std::size_t k) {
    const Complex l = region.point(k % region.nx, k / region.nx);
    const PipOperator Xl = PipOperator::sum({X0.X, PipOperator::identity(-l)});
    const std::size_t out = outreach(Xl);
    const double s1 = smallest_singular_value(weighted_section(Xl, source, target, N + out, N));
    const double s2 = smallest_singular_value(weighted_section(Xl, source, target, 2 * N + out, 2 * N));
    ex.grid_sigma[k] = s2;
    member[k] = s2 <= options.decay_tol && s2 <= 0.5 * s1;
  });
  ex.grid_member.assign(member.begin(), member.end());

  const auto& T = X0.finest();
  ex.spectrum.assign(T.spectrum.data(), T.spectrum.data() + T.spectrum.size());
  const double dx = region.nx > 1 ? (region.re_max - region.re_min) / static_cast<double>(region.nx - 1) : 0.0;
  const double dy = region.ny > 1 ? (region.im_max - region.im_min) / static_cast<double>(region.ny - 1) : 0.0;
  ex.grid_tolerance = std::max({dx, dy, 1e-9});

  auto near_spectrum = [&](Complex z) {
    for (double s : ex.spectrum)
      if (std::abs(z - s) <= ex.grid_tolerance) return true;
    return false;
  };
  ex.tight = true;
  for (Complex l : ex.eigenvalues) ex.tight = ex.tight && near_spectrum(l);
  for (std::size_t k = 0; k < n; ++k)
    if (member[k]) ex.tight = ex.tight && near_spectrum(region.point(k % region.nx, k / region.nx));

  ex.babbitt = babbitt_density(X0, rigging, X0.lambda, N);
  return ex;
}

InclusionReport spectral_inclusions(const ExtendedSpectrum& ext, const PipOperator& X,
                                    const std::vector<std::pair<SpaceIndex, SpaceIndex>>& pairs,
                                    const SpectralOptions& options, unsigned jobs) {
  InclusionReport r;
  auto in_j = [&](Complex l) {
    for (const auto& [q, p] : pairs)
      if (in_resolvent_set(X, q, p, l, options)) return false;
    return true;
  };

  const std::size_t n = ext.grid.size();
  r.spectrum_in_ext = true;
  for (double s : ext.spectrum) {
    if (s < ext.grid.re_min - ext.grid_tolerance || s > ext.grid.re_max + ext.grid_tolerance) continue;
    ++r.spectrum_points;
    bool found = false;
    for (Complex l : ext.eigenvalues) found = found || std::abs(l - s) <= ext.grid_tolerance;
    for (std::size_t k = 0; k < n && !found; ++k)
      found = ext.grid_member[k] && std::abs(ext.grid.point(k % ext.grid.nx, k / ext.grid.nx) - s) <= ext.grid_tolerance;
    r.spectrum_in_ext = r.spectrum_in_ext && found;
  }

  std::vector<Complex> probes;
  for (Complex l : ext.eigenvalues)
    if (l.real() >= ext.grid.re_min && l.real() <= ext.grid.re_max) probes.push_back(l);
  for (std::size_t k = 0; k < n; ++k)
    if (ext.grid_member[k]) probes.push_back(ext.grid.point(k % ext.grid.nx, k / ext.grid.nx));
  r.ext_points = probes.size();
  std::vector<char> hit(probes.size(), 0);
  detail::parallel_for(probes.size(), jobs, [&](std::size_t i) { hit[i] = in_j(probes[i]); });
  r.j_points = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  r.ext_in_j = r.j_points == r.ext_points;
  return r;
}

}  // namespace pip
