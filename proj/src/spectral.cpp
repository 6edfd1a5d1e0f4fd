#include "pip/spectral.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pip {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kDenseCheck = 512;
constexpr double kSettleRatio = 0.75;
constexpr double kLocalized = 0.5;

PipOperator shifted_by(const PipOperator& A, Complex lambda) {
  return PipOperator::sum({A, PipOperator::identity(-lambda)});
}

// The symbol of a diagonal or scaled-identity operator.
std::optional<Sequence> diagonal_symbol(const PipOperator& A) {
  if (A.kind() == OpKind::Diagonal) return A.symbol();
  if (A.kind() == OpKind::ScaledIdentity) return Sequence::constant(A.lambda());
  return std::nullopt;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& M) {
  if (M.size() == 0) return Eigen::VectorXd();
  return Eigen::BDCSVD<Eigen::MatrixXcd>(M).singularValues();
}

double dense_norm(const PipVector& v, const SpaceIndex& r) { return truncated_norm(v.dense(kDenseCheck), r); }

}  // namespace

std::string_view point_status_name(PointStatus s) {
  switch (s) {
    case PointStatus::Regular: return "regular";
    case PointStatus::NotRegular: return "not_regular";
    case PointStatus::NotComparable: return "not_comparable";
    case PointStatus::NoRepresentative: return "no_representative";
  }
  return "?";
}

RegularPointResult regular_point(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda,
                                 const SpectralOptions& options) {
  RegularPointResult r;
  r.lambda = lambda;
  r.q = q;
  r.p = p;
  auto order = compare(q, p);
  if (order != Order::Less && order != Order::Equal) {
    r.status = PointStatus::NotComparable;
    return r;
  }
  if (!representative_exists(A, q, p, options.cert).valid) {
    r.status = PointStatus::NoRepresentative;
    r.d = kInf;
    return r;
  }
  if (auto a = diagonal_symbol(A)) {
    Sequence ratio = abs2(*a - Sequence::constant(lambda)) * p.weight() * weight_dual(q.weight());
    auto ex = abs_extrema(ratio, options.cert.samples);
    r.c = std::sqrt(ex.inf);
    r.d = std::sqrt(ex.sup);
    r.exact = ex.symbolic;
    r.status = r.c > 1e-14 ? PointStatus::Regular : PointStatus::NotRegular;
    return r;
  }
  // The smallest singular value of the N-column section is non-increasing in N.
  // It settles at c_lambda on regular points and keeps falling otherwise, so
  // regularity also requires the value at 2N to hold on to the one at N.
  const std::size_t N = options.truncation;
  auto Al = shifted_by(A, lambda);
  auto sv = singular_values(weighted_section(Al, q, p, N + outreach(Al), N));
  auto sv2 = singular_values(weighted_section(Al, q, p, 2 * N + outreach(Al), 2 * N));
  r.exact = false;
  r.truncation = 2 * N;
  r.d = sv2.size() ? sv2(0) : 0.0;
  r.c = sv2.size() ? sv2(sv2.size() - 1) : 0.0;
  const double c_half = sv.size() ? sv(sv.size() - 1) : 0.0;
  const bool settled = r.c >= kSettleRatio * c_half;
  r.status = settled && r.c > options.rank_tol * std::max(r.d, 1e-300) ? PointStatus::Regular : PointStatus::NotRegular;
  return r;
}

namespace {

struct DefectEstimate {
  std::size_t defect;
  Eigen::MatrixXcd cokernel;
};

DefectEstimate truncated_defect(const PipOperator& Al, const SpaceIndex& q, const SpaceIndex& p, std::size_t N,
                                double tol) {
  const std::size_t rows = N + outreach(Al), cols = N + inreach(Al);
  Eigen::MatrixXcd M = weighted_section(Al, q, p, rows, cols);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  const double cut = tol * (s.size() ? s(0) : 0.0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++rank;
  DefectEstimate e;
  Eigen::MatrixXcd Q = svd.matrixU().rightCols(static_cast<Eigen::Index>(rows - rank));
  // Keep only directions carrying most of their mass in the leading half.
  // Null vectors piled up at the truncation edge are artefacts of cutting
  // the matrix, not vectors of V_p.
  Eigen::MatrixXcd kept(rows, 0);
  if (Q.cols() > 0) {
    Eigen::BDCSVD<Eigen::MatrixXcd> lead(Q.topRows(static_cast<Eigen::Index>(N / 2)), Eigen::ComputeFullV);
    const auto& m = lead.singularValues();
    Eigen::Index k = 0;
    while (k < m.size() && m(k) > kLocalized) ++k;
    kept = Q * lead.matrixV().leftCols(k);
  }
  e.defect = static_cast<std::size_t>(kept.cols());
  e.cokernel = kept;
  // Back from orthonormal coordinates of V_p to sequence coordinates.
  for (Eigen::Index i = 0; i < e.cokernel.rows(); ++i)
    e.cokernel.row(i) /= std::sqrt(p.weight()(static_cast<std::size_t>(i)).real());
  return e;
}

}  // namespace

DefectRecord defect_number(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda,
                           const SpectralOptions& options) {
  auto rp = regular_point(A, q, p, lambda, options);
  if (!rp.is_regular())
    throw Error(ErrorCode::InvalidArgument, "defect numbers are defined at regular points only (status " +
                                                std::string(point_status_name(rp.status)) + ")");
  DefectRecord rec;
  rec.lambda = lambda;
  rec.q = q;
  rec.p = p;
  if (diagonal_symbol(A)) {
    // A diagonal bounded below has every e_n in its range, so the range is dense and closed.
    rec.defect = 0;
    rec.exact = true;
    return rec;
  }
  auto Al = shifted_by(A, lambda);
  const std::size_t N = options.truncation;
  auto first = truncated_defect(Al, q, p, N, options.rank_tol);
  auto second = truncated_defect(Al, q, p, 2 * N, options.rank_tol);
  if (first.defect != second.defect)
    throw Error(ErrorCode::Unstable, "defect estimate " + std::to_string(first.defect) + " at N = " +
                                         std::to_string(N) + " but " + std::to_string(second.defect) + " at 2N");
  rec.defect = second.defect;
  rec.cokernel = second.cokernel;
  rec.exact = false;
  rec.truncation = 2 * N;
  return rec;
}

bool in_resolvent_set(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda,
                      const SpectralOptions& options) {
  if (!regular_point(A, q, p, lambda, options).is_regular()) return false;
  try {
    auto d = defect_number(A, q, p, lambda, options);
    return d.defect && *d.defect == 0;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Unstable) return false;
    throw;
  }
}

Complex Grid::point(std::size_t ix, std::size_t iy) const {
  double x = nx > 1 ? re_min + (re_max - re_min) * static_cast<double>(ix) / static_cast<double>(nx - 1) : re_min;
  double y = ny > 1 ? im_min + (im_max - im_min) * static_cast<double>(iy) / static_cast<double>(ny - 1) : im_min;
  return {x, y};
}

std::vector<int> label_components(const std::vector<bool>& mask, std::size_t nx, std::size_t ny, int* count) {
  std::vector<int> label(mask.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    label[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      std::size_t k = stack.back();
      stack.pop_back();
      std::size_t ix = k % nx, iy = k / nx;
      auto visit = [&](std::size_t j) {
        if (mask[j] && label[j] < 0) {
          label[j] = next;
          stack.push_back(j);
        }
      };
      if (ix > 0) visit(k - 1);
      if (ix + 1 < nx) visit(k + 1);
      if (iy > 0) visit(k - nx);
      if (iy + 1 < ny) visit(k + nx);
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

using detail::parallel_for;

GridRegion resolvent_region(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, const Grid& grid,
                            const SpectralOptions& options, unsigned jobs) {
  GridRegion g;
  g.grid = grid;
  g.q = q;
  g.p = p;
  const std::size_t n = grid.size();
  g.status.assign(n, PointStatus::NotRegular);
  g.c.assign(n, 0.0);
  g.defect.assign(n, -1);
  std::vector<char> resolvent(n, 0);
  parallel_for(n, jobs, [&](std::size_t k) {
    Complex lambda = grid.point(k % grid.nx, k / grid.nx);
    auto rp = regular_point(A, q, p, lambda, options);
    g.status[k] = rp.status;
    g.c[k] = rp.c;
    if (!rp.is_regular()) return;
    try {
      auto d = defect_number(A, q, p, lambda, options);
      if (d.defect) g.defect[k] = static_cast<int>(*d.defect);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unstable) throw;
    }
    resolvent[k] = g.defect[k] == 0;
  });
  g.resolvent.assign(resolvent.begin(), resolvent.end());
  std::vector<bool> regular(n);
  for (std::size_t k = 0; k < n; ++k) regular[k] = g.status[k] == PointStatus::Regular;
  g.component = label_components(regular, grid.nx, grid.ny, &g.components);
  return g;
}

SpectralReport j_resolvent(const PipOperator& A, const std::vector<std::pair<SpaceIndex, SpaceIndex>>& pairs,
                           const Grid& grid, const SpectralOptions& options, unsigned jobs) {
  SpectralReport rep;
  rep.grid = grid;
  const std::size_t n = grid.size();
  rep.rho.assign(n, false);
  for (const auto& [q, p] : pairs) {
    rep.regions.push_back(resolvent_region(A, q, p, grid, options, jobs));
    for (std::size_t k = 0; k < n; ++k)
      if (rep.regions.back().resolvent[k]) rep.rho[k] = true;
  }
  rep.sigma.resize(n);
  for (std::size_t k = 0; k < n; ++k) rep.sigma[k] = !rep.rho[k];

  auto Ax = adjoint(A);
  std::vector<char> mismatch(n, 0);
  parallel_for(n, jobs, [&](std::size_t k) {
    Complex lambda = grid.point(k % grid.nx, k / grid.nx);
    bool in = false;
    for (const auto& [q, p] : pairs)
      if (in_resolvent_set(Ax, dual_index(p), dual_index(q), std::conj(lambda), options)) {
        in = true;
        break;
      }
    mismatch[k] = in != rep.rho[k];
  });
  rep.conjugate_mismatches = static_cast<std::size_t>(std::count(mismatch.begin(), mismatch.end(), 1));
  rep.conjugate_symmetric = rep.conjugate_mismatches == 0;
  return rep;
}

PipOperator resolvent(const PipOperator& A, Complex lambda, const SpaceIndex& q, const SpaceIndex& p,
                      const SpectralOptions& options) {
  if (!in_resolvent_set(A, q, p, lambda, options)) {
    std::ostringstream os;
    os << "lambda = " << lambda << " is not in the resolvent set for (" << q.label() << ", " << p.label() << ")";
    throw Error(ErrorCode::NotInResolventSet, os.str());
  }
  if (auto a = diagonal_symbol(A)) return PipOperator::diagonal(reciprocal(*a - Sequence::constant(lambda)));
  try {
    return invert(shifted_by(A, lambda), q, p, options.cert).op;
  } catch (const InversionError& e) {
    throw Error(ErrorCode::NotInResolventSet, std::string("inversion failed: ") + e.what());
  }
}

namespace {

template <class F>
IdentityResidual residual_over(const std::vector<PipVector>& tests, const SpaceIndex& q, const SpaceIndex& p, F&& diff) {
  IdentityResidual r;
  r.vectors = tests.size();
  for (const auto& f : tests) {
    double scale = dense_norm(f, p);
    if (scale == 0.0) continue;
    r.max_residual = std::max(r.max_residual, dense_norm(diff(f), q) / scale);
  }
  return r;
}

}  // namespace

IdentityResidual first_resolvent_identity(const PipOperator& A, const PipOperator& B, Complex lambda,
                                          const SpaceIndex& q, const SpaceIndex& p,
                                          const std::vector<PipVector>& tests, const SpectralOptions& options) {
  auto RA = resolvent(A, lambda, q, p, options);
  auto RB = resolvent(B, lambda, q, p, options);
  auto BA = B - A;
  return residual_over(tests, q, p, [&](const PipVector& f) {
    auto rb = act(RB, f);
    return (act(RA, f) - rb) - act(RA, act(BA, rb));
  });
}

IdentityResidual second_resolvent_identity(const PipOperator& A, Complex lambda, Complex mu, const SpaceIndex& q,
                                           const SpaceIndex& p, const std::vector<PipVector>& tests,
                                           const SpectralOptions& options) {
  auto Rl = resolvent(A, lambda, q, p, options);
  auto Rm = resolvent(A, mu, q, p, options);
  return residual_over(tests, q, p, [&](const PipVector& f) {
    return (act(Rl, f) - act(Rm, f)) - act(Rl, act(Rm, f)) * (lambda - mu);
  });
}

IdentityResidual resolvent_derivative_identity(const PipOperator& A, Complex lambda, const SpaceIndex& q,
                                               const SpaceIndex& p, const std::vector<PipVector>& tests, double h,
                                               const SpectralOptions& options) {
  auto R = resolvent(A, lambda, q, p, options);
  auto Rp = resolvent(A, lambda + h, q, p, options);
  auto Rm = resolvent(A, lambda - h, q, p, options);
  return residual_over(tests, q, p, [&](const PipVector& f) {
    return (act(Rp, f) - act(Rm, f)) * (1.0 / (2.0 * h)) - act(R, act(R, f));
  });
}

ResolventSeries resolvent_series(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda0,
                                 Complex lambda, std::size_t terms, const PipVector& f,
                                 const SpectralOptions& options) {
  auto R0 = resolvent(A, lambda0, q, p, options);
  double norm_qq;
  if (R0.kind() == OpKind::Diagonal) {
    norm_qq = abs_extrema(R0.symbol(), options.cert.samples).sup;
  } else {
    auto sv = singular_values(weighted_section(R0, q, q, options.truncation, options.truncation));
    norm_qq = sv.size() ? sv(0) : 0.0;
  }
  ResolventSeries out;
  out.radius = norm_qq > 0.0 ? 1.0 / norm_qq : kInf;
  const double step = std::abs(lambda - lambda0);
  if (step >= out.radius) {
    std::ostringstream os;
    os << "|lambda - lambda0| = " << step << " is outside the certified radius " << out.radius;
    throw Error(ErrorCode::OutsideRadius, os.str());
  }
  PipVector term = act(R0, f);
  const double first = dense_norm(term, q);
  out.value = term;
  out.increments.push_back(first);
  for (std::size_t k = 1; k < terms; ++k) {
    term = act(R0, term) * (lambda - lambda0);
    out.value = out.value + term;
    out.increments.push_back(dense_norm(term, q));
  }
  const double x = step * norm_qq;
  out.error_bound = first * std::pow(x, static_cast<double>(terms)) / (1.0 - x);
  return out;
}

namespace {

Eigenpair finish(const PipOperator& A, Complex lambda, const PipVector& x, const SpaceIndex& q, const SpaceIndex& p,
                 bool exact) {
  Eigenpair e;
  e.lambda = lambda;
  e.vector = x;
  e.exact = exact;
  double nx = dense_norm(x, q);
  e.residual = nx > 0.0 ? dense_norm(act(shifted_by(A, lambda), x), p) / nx : kInf;
  try {
    e.global = membership(x, SpaceIndex::intersection()).in;
  } catch (const Error&) {
    e.global = false;
  }
  return e;
}

bool in_space(const PipVector& x, const SpaceIndex& q) {
  try {
    return membership(x, q).in;
  } catch (const Error&) {
    return false;
  }
}

// Eigenvectors of D + U C V^* through (I + C <V|(D - lambda)^{-1} U>) y = 0.
std::optional<std::vector<PipVector>> finite_rank_eigenvectors(const PipOperator& A, Complex lambda,
                                                               std::size_t samples) {
  std::optional<Sequence> d;
  std::vector<PipVector> U, V;
  std::vector<Eigen::MatrixXcd> blocks;
  auto take = [&](const PipOperator& t) {
    switch (t.kind()) {
      case OpKind::Diagonal: d = d ? *d + t.symbol() : t.symbol(); return true;
      case OpKind::ScaledIdentity:
        d = d ? *d + Sequence::constant(t.lambda()) : Sequence::constant(t.lambda());
        return true;
      case OpKind::Dyadic:
        U.push_back(t.dyad_left());
        V.push_back(t.dyad_right());
        blocks.push_back(Eigen::MatrixXcd::Ones(1, 1));
        return true;
      case OpKind::LowRank:
        U.insert(U.end(), t.left_vectors().begin(), t.left_vectors().end());
        V.insert(V.end(), t.right_vectors().begin(), t.right_vectors().end());
        blocks.push_back(t.coupling());
        return true;
      default: return false;
    }
  };
  if (A.kind() == OpKind::Sum) {
    for (const auto& t : A.terms())
      if (!take(t)) return std::nullopt;
  } else if (!take(A)) {
    return std::nullopt;
  }
  if (U.empty()) return std::nullopt;
  Sequence shifted_d = (d ? *d : Sequence::constant(0.0)) - Sequence::constant(lambda);
  if (!(abs_extrema(shifted_d, samples).inf > 0.0)) return std::nullopt;
  const auto r = static_cast<Eigen::Index>(U.size()), s = static_cast<Eigen::Index>(V.size());
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(r, s);
  Eigen::Index ro = 0, co = 0;
  for (const auto& b : blocks) {
    C.block(ro, co, b.rows(), b.cols()) = b;
    ro += b.rows();
    co += b.cols();
  }
  Sequence inv = reciprocal(shifted_d);
  std::vector<PipVector> DU;
  for (const auto& u : U) DU.push_back(u.multiplied(inv));
  Eigen::MatrixXcd G(s, r);
  for (Eigen::Index j = 0; j < s; ++j)
    for (Eigen::Index k = 0; k < r; ++k) G(j, k) = pairing(V[static_cast<std::size_t>(j)], DU[static_cast<std::size_t>(k)]);
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Identity(r, r) + C * G;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(K);
  lu.setThreshold(1e-10);
  std::vector<PipVector> out;
  if (lu.isInvertible()) return out;
  Eigen::MatrixXcd ker = lu.kernel();
  for (Eigen::Index c = 0; c < ker.cols(); ++c) {
    PipVector x;
    for (Eigen::Index k = 0; k < r; ++k) x = x + DU[static_cast<std::size_t>(k)] * (-ker(k, c));
    out.push_back(x);
  }
  return out;
}

}  // namespace

std::vector<Eigenpair> generalized_eigenpairs(const PipOperator& A, Complex lambda, const SpaceIndex& q,
                                              const SpaceIndex& p, const SpectralOptions& options) {
  std::vector<Eigenpair> out;
  const double tol = 1e-12 * std::max(1.0, std::abs(lambda));
  if (auto a = diagonal_symbol(A)) {
    std::size_t horizon = A.kind() == OpKind::ScaledIdentity ? 1 : options.cert.samples;
    for (std::size_t n = 0; n < horizon; ++n)
      if (std::abs((*a)(n) - lambda) <= tol) out.push_back(finish(A, lambda, PipVector::basis(n), q, p, true));
    return out;
  }
  if (auto vecs = finite_rank_eigenvectors(A, lambda, options.cert.samples)) {
    for (const auto& x : *vecs)
      if (in_space(x, q)) out.push_back(finish(A, lambda, x, q, p, true));
    return out;
  }
  // Truncated kernel of W_p^{1/2}(A - lambda)W_q^{-1/2}.
  auto Al = shifted_by(A, lambda);
  const std::size_t N = options.truncation;
  Eigen::MatrixXcd M = weighted_section(Al, q, p, N + outreach(Al), N);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = options.rank_tol * (s.size() ? s(0) : 0.0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) continue;
    Eigen::VectorXcd v = svd.matrixV().col(i);
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) /= std::sqrt(q.weight()(static_cast<std::size_t>(k)).real());
    auto e = finish(A, lambda, PipVector::from_dense(v), q, p, false);
    if (e.residual < std::sqrt(options.rank_tol)) out.push_back(e);
  }
  return out;
}

double BoundaryExtensionSpectrum::eigenvalue(long n) const {
  return theta + 2.0 * std::numbers::pi * static_cast<double>(n);
}

std::vector<double> BoundaryExtensionSpectrum::window(long n_max) const {
  std::vector<double> v;
  for (long n = -n_max; n <= n_max; ++n) v.push_back(eigenvalue(n));
  return v;
}

BoundaryExtensionSpectrum boundary_extension_spectrum(Complex alpha) {
  if (std::abs(std::abs(alpha) - 1.0) > 1e-12)
    throw Error(ErrorCode::NotUnitModulus, "boundary parameter must satisfy |alpha| = 1");
  // f = C e^{i lambda x} with f(1) = alpha f(0) gives e^{i lambda} = alpha.
  return {alpha, std::arg(alpha)};
}

BoundaryExtensionReport boundary_extension_demo(const std::vector<Complex>& alphas, long n_max) {
  BoundaryExtensionReport rep;
  for (const auto& a : alphas) rep.spectra.push_back(boundary_extension_spectrum(a));
  rep.min_separation = kInf;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < rep.spectra.size(); ++i)
    for (std::size_t j = i + 1; j < rep.spectra.size(); ++j) {
      double d = std::fmod(std::abs(rep.spectra[i].theta - rep.spectra[j].theta), two_pi);
      d = std::min(d, two_pi - d);
      rep.min_separation = std::min(rep.min_separation, d);
    }
  rep.pairwise_disjoint = rep.spectra.size() < 2 || rep.min_separation > 1e-12;
  std::ostringstream os;
  os << "Each S_alpha = -i d/dx with f(1) = alpha f(0) is self-adjoint with spectrum arg(alpha) + 2 pi Z";
  os << " (shown for |n| <= " << n_max << "). ";
  if (rep.pairwise_disjoint)
    os << "Spectra for distinct alphas are pairwise disjoint (min separation " << rep.min_separation << "), so ";
  else
    os << "Two of the supplied alphas coincide mod 2 pi; for the distinct ones ";
  os << "the resolvents of S_alpha and S_beta are not analytic continuations of each other. "
        "This is consistent with uniqueness of inverses: the family J_0 of graph-norm scales H_{alpha,n} is not a "
        "lattice, because H_{alpha,n} intersected with H_{beta,m} is not a member of V_{J_0}. The meet that the "
        "uniqueness argument needs does not exist.";
  rep.diagnosis = os.str();
  return rep;
}

}  // namespace pip
