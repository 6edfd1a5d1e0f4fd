#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "pip/singular.hpp"

using namespace pip;

namespace {

SpaceIndex s(int k) { return SpaceIndex::power(Rational(k)); }

Sequence n_plus_one() { return Sequence::affine(1.0, 1.0); }

Eigen::MatrixXcd scalar(Complex c) {
  Eigen::MatrixXcd m(1, 1);
  m(0, 0) = c;
  return m;
}

std::vector<PipVector> basis_tests(std::size_t count) {
  std::vector<PipVector> v;
  for (std::size_t k = 0; k < count; ++k) v.push_back(PipVector::basis(k) + PipVector::basis(k + 3, Complex(0, 0.5)));
  return v;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

// Eigenvalues below the threshold of the dense N x N section of H.
std::vector<double> dense_bound_states(const KreinModel& m, std::size_t N) {
  Eigen::MatrixXcd H = dense_block(m.H(), N, N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < m.T.threshold()) out.push_back(es.eigenvalues()(i));
  return out;
}

}  // namespace

TEST(FreeResolvent, SymbolAndErrors) {
  auto T = FreeOperator::sequence(Sequence::affine(1.0, 0.0));
  auto R = free_resolvent(T, -1.0);
  for (std::size_t n = 0; n < 10; ++n) EXPECT_NEAR(std::abs(R.symbol()(n) - 1.0 / (n + 1.0)), 0.0, 1e-15);
  EXPECT_EQ(code_of([&] { free_resolvent(T, 3.0); }), ErrorCode::InSpectrum);
  EXPECT_NO_THROW(free_resolvent(T, 2.5));
  EXPECT_TRUE(T.in_spectrum(0.0));
  EXPECT_FALSE(T.in_spectrum(Complex(3.0, 1e-3)));
}

TEST(FreeResolvent, RaisesTheScaleByTwoAndHalfByOne) {
  auto T = FreeOperator::sequence(Sequence::affine(1.0, 0.0));
  for (int r : {-2, -1, 0, 1}) {
    auto c = free_resolvent_mapping(T, -1.0, Rational(r));
    EXPECT_TRUE(c.bijective) << r;
    EXPECT_NEAR(c.forward.bound, 1.0, 1e-12);
    auto h = free_resolvent_mapping(T, -1.0, Rational(r), 1);
    EXPECT_TRUE(h.bijective) << r;
  }
  auto c = free_resolvent_mapping(T, Complex(0.5, 0.5), Rational(0));
  EXPECT_TRUE(c.forward.valid);
  // Three steps up is too far.
  auto far = representative_exists(free_resolvent(T, -1.0), T.scale(0), T.scale(3));
  EXPECT_FALSE(far.valid);
}

TEST(FreeResolvent, ResolventIdentities) {
  auto T = FreeOperator::sequence(n_plus_one());
  auto tests = basis_tests(6);
  auto id = second_resolvent_identity(T.op(), -1.0, -2.0, s(2), s(0), tests);
  EXPECT_LE(id.max_residual, 1e-12);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> re(-5.0, 5.0), im(0.2, 3.0);
  for (int i = 0; i < 10; ++i) {
    Complex l(re(rng), im(rng)), m(re(rng), -im(rng));
    EXPECT_LE(second_resolvent_identity(T.op(), l, m, s(2), s(0), tests).max_residual, 1e-10);
    EXPECT_LE(resolvent_derivative_identity(T.op(), l, s(2), s(0), tests).max_residual, 1e-6);
  }
}

TEST(Gamma, DeltaClosedFormAndQuadrature) {
  for (double alpha : {0.5, 2.0, -0.3}) {
    auto m = delta1d(alpha);
    for (Complex l : {Complex(-1.0), Complex(-4.0), Complex(-1.0, 0.5)}) {
      auto g = gamma_matrix(m, l);
      EXPECT_TRUE(g.closed_form);
      EXPECT_LE(std::abs(g.matrix(0, 0) - (1.0 / (2.0 * kappa_of(l)) - alpha)), 1e-15);
      EXPECT_LE(std::abs(gamma_quadrature(m, l).matrix(0, 0) - g.matrix(0, 0)), 1e-8);
    }
  }
  Eigen::MatrixXcd B(2, 2);
  B << 1.0, 0.2, 0.2, 0.7;
  auto two = delta_model({-0.5, 0.75}, B);
  for (Complex l : {Complex(-1.0), Complex(-0.3), Complex(-2.0, 1.0)}) {
    auto diff = (gamma_quadrature(two, l).matrix - gamma_matrix(two, l).matrix).cwiseAbs().maxCoeff();
    EXPECT_LE(diff, 1e-8) << l;
  }
  EXPECT_EQ(code_of([&] { gamma_matrix(two, 0.5); }), ErrorCode::InSpectrum);
}

TEST(Gamma, SequenceModel) {
  const double c = 4.0;
  auto m = sequence_model(n_plus_one(), {PipVector::basis(0)}, scalar(c));
  EXPECT_NEAR(std::abs(gamma_matrix(m, -1.0).matrix(0, 0) - (0.5 - 1.0 / c)), 0.0, 1e-15);

  auto tail = sequence_model(n_plus_one(), {PipVector::power_tail(1.0, Rational(-1, 2))}, scalar(1.0));
  auto g = gamma_matrix(tail, -1.0);
  EXPECT_LE(std::abs(g.matrix(0, 0).imag()), 1e-15);
  // Conjugate symmetry for real data.
  Complex l(-0.5, 0.8);
  auto a = gamma_matrix(tail, l).matrix, b = gamma_matrix(tail, std::conj(l)).matrix;
  EXPECT_LE((b - a.adjoint()).cwiseAbs().maxCoeff(), 1e-12);

  auto strong = sequence_model(n_plus_one(), {PipVector::power_tail(1.0, Rational(1, 4))}, scalar(1.0));
  EXPECT_EQ(code_of([&] { gamma_matrix(strong, -1.0); }), ErrorCode::PairingDiverges);
  auto edge = sequence_model(n_plus_one(), {PipVector::power_tail(1.0, Rational(0))}, scalar(1.0));
  EXPECT_EQ(code_of([&] { gamma_matrix(edge, -1.0); }), ErrorCode::PairingDiverges);
}

TEST(Krein, SequenceResolventInvertsHMinusLambda) {
  auto m = sequence_model(n_plus_one(), {PipVector::power_tail(1.0, Rational(-3, 2))}, scalar(3.0));
  for (Complex l : {Complex(-4.0), Complex(0.5, 0.5), Complex(2.5)}) EXPECT_LE(krein_residual(m, l, 20), 1e-10) << l;
  EXPECT_EQ(code_of([&] { krein_resolvent(m, 2.0); }), ErrorCode::FreeSpectrum);
  auto bs = bound_states(m);
  ASSERT_EQ(bs.size(), 1u);
  EXPECT_EQ(code_of([&] { krein_resolvent(m, bs[0].lambda); }), ErrorCode::GammaSingular);
}

TEST(Krein, DecouplingLimit) {
  auto f = PipVector::power_tail(1.0, Rational(-1));
  auto weak = sequence_model(n_plus_one(), {f}, scalar(1e-12));
  auto R = krein_resolvent(weak, -1.0);
  auto R0 = free_resolvent(weak.T, -1.0);
  for (std::size_t k = 0; k < 5; ++k) {
    auto d = act(R, PipVector::basis(k)) - act(R0, PipVector::basis(k));
    EXPECT_LE(d.dense(256).norm(), 1e-11);
  }
}

TEST(Krein, ResolventIdentityForThePerturbedOperator) {
  auto m = sequence_model(n_plus_one(), {PipVector::power_tail(1.0, Rational(-3, 2))}, scalar(3.0));
  auto tests = basis_tests(5);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> re(-5.0, 5.0), im(0.3, 2.0);
  for (int i = 0; i < 10; ++i) {
    Complex l(re(rng), im(rng)), mu(re(rng), im(rng));
    EXPECT_LE(second_resolvent_identity(m.H(), l, mu, s(2), s(0), tests).max_residual, 1e-10);
    EXPECT_LE(resolvent_derivative_identity(m.H(), l, s(2), s(0), tests).max_residual, 1e-6);
  }
  // Closed-form Krein resolvent against the generic inverse.
  Complex l(-2.0, 0.5);
  auto K = krein_resolvent(m, l);
  auto W = resolvent(m.H(), l, s(2), s(0));
  for (const auto& f : tests) EXPECT_LE((act(K, f) - act(W, f)).dense(512).norm(), 1e-12);
}

TEST(Krein, TwoCentreKernelAgainstLattice) {
  Eigen::MatrixXcd B(2, 2);
  B << 1.5, 0.0, 0.0, 0.8;
  auto m = delta_model({-0.75, 1.5}, B);
  const double L = 12.0;
  const std::size_t N = 512;
  auto lat = delta_lattice_resolvent(m, -1.0, 513, L);  // h = 3/64 puts both centres on nodes
  auto ker = krein_kernel_1d(m, -1.0);
  double worst = 0.0;
  for (Eigen::Index a = 100; a < 400; a += 13)
    for (Eigen::Index b = 50; b < 460; b += 29)
      worst = std::max(worst, std::abs(lat.G(a, b) - ker(lat.nodes(a), lat.nodes(b))));
  EXPECT_LE(worst, 1e-6);
  (void)N;
  Complex lc(-0.7, 0.4);
  auto latc = delta_lattice_resolvent(m, lc, 513, L);
  auto kerc = krein_kernel_1d(m, lc);
  EXPECT_LE(std::abs(latc.G(200, 300) - kerc(latc.nodes(200), latc.nodes(300))), 1e-6);
  EXPECT_EQ(code_of([&] { delta_lattice_resolvent(m, -1.0, 500, L); }), ErrorCode::InvalidArgument);
}

TEST(BoundStates, DeltaPotential) {
  for (double alpha : {0.1, 0.5, 1.0, 2.0}) {
    auto start = std::chrono::steady_clock::now();
    auto bs = bound_states(delta1d(alpha));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ASSERT_EQ(bs.size(), 1u) << alpha;
    const double Eb = -1.0 / (4 * alpha * alpha);
    EXPECT_LE(std::abs(bs[0].lambda - Eb) / std::abs(Eb), 1e-8) << alpha;
    EXPECT_LT(secs, 1.0);
  }
  EXPECT_NEAR(bound_states(delta1d(0.5))[0].lambda, -1.0, 1e-12);
  EXPECT_NEAR(bound_states(delta1d(0.1))[0].lambda, -25.0, 1e-9);
  EXPECT_TRUE(bound_states(delta1d(-0.5)).empty());
  EXPECT_TRUE(bound_states(delta1d(-3.0)).empty());
}

TEST(BoundStates, TwoCentreDelta) {
  const double c = 4.0, dx = 1.0;
  Eigen::MatrixXcd B = c * Eigen::MatrixXcd::Identity(2, 2);
  auto bs = bound_states(delta_model({0.0, dx}, B));
  ASSERT_EQ(bs.size(), 2u);
  // Even and odd states: (1 +- e^{-kappa dx}) / (2 kappa) = 1 / c.
  for (const auto& b : bs) {
    const double k = std::sqrt(-b.lambda);
    const double even = (1 + std::exp(-k * dx)) / (2 * k) - 1 / c, odd = (1 - std::exp(-k * dx)) / (2 * k) - 1 / c;
    EXPECT_LE(std::min(std::abs(even), std::abs(odd)), 1e-12);
  }
}

TEST(BoundStates, SequenceModelAgainstDenseTruncation) {
  auto f = PipVector::power_tail(1.0, Rational(-3, 2));
  auto m = sequence_model(n_plus_one(), {f}, scalar(3.0));
  auto bs = bound_states(m);
  ASSERT_EQ(bs.size(), 1u);
  EXPECT_LE(bs[0].residual, 1e-8);
  auto dense = dense_bound_states(m, 512);
  ASSERT_EQ(dense.size(), 1u);
  EXPECT_LE(std::abs(dense[0] - bs[0].lambda), 1e-6);
}

TEST(BoundStates, CountNeverExceedsRank) {
  std::vector<PipVector> phi{PipVector::power_tail(1.0, Rational(-3, 2)),
                             PipVector::power_tail(1.0, Rational(-2), 1, {{0, -0.5}})};
  std::mt19937 rng(23);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int trial = 0; trial < 6; ++trial) {
    Eigen::MatrixXcd B(2, 2);
    const double off = nd(rng);
    B << nd(rng), off, off, nd(rng);
    auto m = sequence_model(n_plus_one(), phi, B);
    BoundStateOptions opts;
    opts.grid = 200;
    opts.jobs = 4;
    auto bs = bound_states(m, opts);
    EXPECT_LE(bs.size(), 2u);
    auto dense = dense_bound_states(m, 512);
    ASSERT_EQ(dense.size(), bs.size()) << trial;
    for (std::size_t i = 0; i < bs.size(); ++i) {
      EXPECT_LE(std::abs(dense[i] - bs[i].lambda), 1e-6);
      // Roots are real: det Gamma vanishes at the conjugate as well.
      EXPECT_LE(std::abs(gamma_determinant(m, std::conj(Complex(bs[i].lambda)))), 1e-8);
    }
  }
}

TEST(Resonance, OneDimensionalContinuation) {
  auto r = resonances_1d(-0.5);
  EXPECT_DOUBLE_EQ(r.kappa, -1.0);
  EXPECT_FALSE(r.bound_state);
  EXPECT_EQ(r.sheet, "second");
  EXPECT_LT(resonances_1d(-1e-6).kappa, -1e5);
  auto b = resonances_1d(delta1d(0.5));
  EXPECT_TRUE(b.bound_state);
  EXPECT_DOUBLE_EQ(b.kappa, 1.0);
  EXPECT_DOUBLE_EQ(b.lambda, -1.0);
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Identity(2, 2);
  EXPECT_EQ(code_of([&] { resonances_1d(delta_model({0.0, 1.0}, B)); }), ErrorCode::NotClosedForm);
  auto seq = sequence_model(n_plus_one(), {PipVector::basis(0)}, scalar(1.0));
  EXPECT_EQ(code_of([&] { resonances_1d(seq); }), ErrorCode::NotClosedForm);
}

TEST(ExponentialMembership, TheTable) {
  EXPECT_TRUE(exponential_membership(1, -1));
  EXPECT_FALSE(exponential_membership(2, -1));
  EXPECT_TRUE(exponential_membership(2, -2));
  EXPECT_FALSE(exponential_membership(3, -1));
  EXPECT_TRUE(exponential_membership(3, -2));
  EXPECT_FALSE(exponential_membership(4, -2));
  EXPECT_FALSE(exponential_membership(1, 0));
  EXPECT_NEAR(exponential_norm2(1, -1), 0.5, 1e-15);
  EXPECT_TRUE(std::isinf(exponential_norm2(4, -2)));
  EXPECT_GT(exponential_norm2(3, -2), 0.0);
}
