#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pip/errors.hpp"
#include "pip/operators.hpp"

using namespace pip;

namespace {

SpaceIndex s(int k) { return SpaceIndex::power(Rational(k)); }
SpaceIndex s(Rational k) { return SpaceIndex::power(k); }

// Weights that oscillate between (n+1) and (n+1)^{-1}, and the reverse.
Sequence zigzag(int sign) { return Sequence::power_profile({Rational(sign), Rational(-sign)}); }

PipOperator number_op() { return PipOperator::diagonal(Sequence::affine(1.0, 1.0), "n+1"); }

PipVector random_head(std::mt19937& rng, std::size_t len) {
  std::normal_distribution<double> d;
  Eigen::VectorXcd v(static_cast<Eigen::Index>(len));
  for (auto& x : v) x = Complex(d(rng), d(rng));
  return PipVector::from_dense(v);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidArgument;
}

double max_diff(const PipVector& a, const PipVector& b, std::size_t N = 64) {
  return (a.dense(N) - b.dense(N)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Representatives, SchwartzScaleOperatorsLowerTheIndexByK) {
  for (int k = 1; k <= 3; ++k) {
    auto A = PipOperator::diagonal(Sequence::power(1.0, Rational(k, 2)));
    for (int m = -3; m <= 3; ++m) {
      auto c = representative_exists(A, s(m), s(m - k));
      EXPECT_TRUE(c.valid) << "k=" << k << " m=" << m;
      EXPECT_NEAR(c.bound, 1.0, 1e-12);
      EXPECT_EQ(c.witness, WitnessKind::Symbolic);
      auto tighter = representative_exists(A, s(m), s(m - k + 1));
      EXPECT_FALSE(tighter.valid);
      EXPECT_TRUE(std::isinf(tighter.bound));
    }
  }
}

TEST(Representatives, IdentityValidExactlyOnIncreasingPairs) {
  auto I = PipOperator::identity();
  for (int q = -2; q <= 2; ++q)
    for (int p = -2; p <= 2; ++p) {
      auto c = representative_exists(I, s(q), s(p));
      EXPECT_EQ(c.valid, q >= p) << q << " " << p;
      if (c.valid) EXPECT_NEAR(c.bound, 1.0, 1e-12);
    }
}

TEST(Representatives, DyadicFollowsMembershipOfItsFactors) {
  auto f = PipVector::power_tail(1.0, Rational(1, 4));
  auto A = PipOperator::dyadic(PipVector::basis(0), f);
  // |e_0><f| needs f in the dual of the source space.
  EXPECT_TRUE(representative_exists(A, s(2), s(0)).valid);
  EXPECT_TRUE(representative_exists(A, s(Rational(7, 4)), s(5)).valid);
  EXPECT_FALSE(representative_exists(A, s(Rational(3, 2)), s(0)).valid);
  EXPECT_FALSE(representative_exists(A, s(1), s(-4)).valid);
  auto c = representative_exists(A, s(2), s(0));
  double expected = std::sqrt(std::riemann_zeta(1.5));
  EXPECT_NEAR(c.bound, expected, 1e-9);
  // |f><e_0| needs f in the target space.
  auto B = PipOperator::dyadic(f, PipVector::basis(0));
  EXPECT_TRUE(representative_exists(B, s(0), s(-2)).valid);
  EXPECT_FALSE(representative_exists(B, s(0), s(Rational(-3, 2))).valid);
}

TEST(Representatives, ShiftBoundsAndUndecidableSymbols) {
  auto S = PipOperator::shift(1);
  EXPECT_FALSE(representative_exists(S, s(0), s(1)).valid);
  auto c = representative_exists(S, s(0), s(-2));
  EXPECT_TRUE(c.valid);
  EXPECT_NEAR(c.bound, 0.5, 1e-12);
  EXPECT_TRUE(representative_exists(S, s(1), s(1)).valid);

  auto opaque = PipOperator::diagonal(Sequence::function([](std::size_t n) { return Complex(std::sin(double(n))); },
                                                         Asymptotics(), "sin n", true));
  EXPECT_EQ(code_of([&] { representative_exists(opaque, s(0), s(0)); }), ErrorCode::Undecidable);
  CertOptions o;
  o.budget = 2000;
  auto h = representative_exists(opaque, s(0), s(0), o);
  EXPECT_TRUE(h.valid);
  EXPECT_EQ(h.witness, WitnessKind::Heuristic);
  o.monotone_tail = true;
  EXPECT_EQ(representative_exists(opaque, s(0), s(0), o).witness, WitnessKind::Sampled);
}

TEST(Representatives, LowRankBoundUsesGramMatrices) {
  auto u = PipVector::from_dense(Eigen::Vector2cd(1.0, 0.0));
  auto v = PipVector::from_dense(Eigen::Vector2cd(0.0, 1.0));
  Eigen::MatrixXcd C(2, 2);
  C << 2.0, 0.0, 0.0, 3.0;
  auto A = PipOperator::finite_rank({u, v}, C);
  auto c = representative_exists(A, s(0), s(0));
  ASSERT_TRUE(c.valid);
  EXPECT_NEAR(c.bound, 3.0, 1e-12);
  // On s_2 -> s_0 the second vector has dual-norm 1/2.
  EXPECT_NEAR(representative_exists(A, s(2), s(0)).bound, 2.0, 1e-12);
}

TEST(Adjoint, StructuralRules) {
  auto D = PipOperator::diagonal(Sequence::power(1.0, Rational(1)));
  EXPECT_TRUE(structurally_equal(adjoint(D), D));
  auto d01 = PipOperator::dyadic(PipVector::basis(0), PipVector::basis(1));
  auto d10 = PipOperator::dyadic(PipVector::basis(1), PipVector::basis(0));
  EXPECT_TRUE(structurally_equal(adjoint(d01), d10));
  EXPECT_EQ(adjoint(PipOperator::shift(1)).offset(), -1);
  EXPECT_EQ(adjoint(PipOperator::identity(Complex(1, 2))).lambda(), Complex(1, -2));

  Eigen::MatrixXcd B(2, 2);
  B << 1.0, Complex(0, 1), 2.0, 3.0;
  auto F = PipOperator::finite_rank({PipVector::basis(0), PipVector::power_tail(1.0, Rational(-1))}, B);
  auto Fx = adjoint(F);
  EXPECT_TRUE(Fx.is_finite_rank_sum());
  EXPECT_TRUE(Fx.coupling().isApprox(B.adjoint()));

  auto complex_symbol = PipOperator::diagonal(Complex(0, 1) * Sequence::power(1.0, Rational(1, 2)));
  std::vector<PipOperator> ops = {
      F, complex_symbol, PipOperator::sum({complex_symbol, d01, PipOperator::shift(1)}),
      PipOperator::composition(d01, PipOperator::shift(-1), s(1))};
  for (const auto& A : ops) EXPECT_TRUE(structurally_equal(adjoint(adjoint(A)), A)) << A.describe();
}

TEST(Adjoint, PairingIdentityOnRandomVectors) {
  std::mt19937 rng(7);
  auto g = PipVector::power_tail(Complex(0.5, -1.0), Rational(-2));
  auto A = PipOperator::sum({PipOperator::diagonal(Complex(1, 1) * Sequence::affine(1.0, 2.0)),
                             PipOperator::dyadic(random_head(rng, 5), g), PipOperator::shift(1),
                             PipOperator::identity(Complex(0, 3))});
  auto B = PipOperator::composition(A, PipOperator::shift(-1), s(0));
  for (const auto& X : {A, B}) {
    auto Xx = adjoint(X);
    for (int t = 0; t < 20; ++t) {
      auto x = random_head(rng, 12);
      auto y = random_head(rng, 12);
      Complex lhs = pairing(act(Xx, y), x);
      Complex rhs = pairing(y, act(X, x));
      EXPECT_LT(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(Compose, DiagonalsMultiply) {
  Lattice L({s(1)});
  auto a = Sequence::affine(1.0, 1.0);
  auto b = Sequence::power(2.0, Rational(-1, 2));
  auto P = compose(PipOperator::diagonal(a), PipOperator::diagonal(b), L);
  ASSERT_EQ(P.kind(), OpKind::Diagonal);
  for (std::size_t n = 0; n < 50; ++n) EXPECT_NEAR(std::abs(P.symbol()(n) - a(n) * b(n)), 0.0, 1e-12);
}

TEST(Compose, TwoDyadicsCollapse) {
  Lattice L({s(1)});
  auto f = PipVector::from_dense(Eigen::Vector3cd(1.0, 2.0, Complex(0, 1)));
  auto g = PipVector::power_tail(1.0, Rational(-1));
  auto u = PipVector::power_tail(Complex(0, 1), Rational(-1));
  auto v = PipVector::from_dense(Eigen::Vector4cd(0.5, -1.0, 0.0, 2.0));
  auto BA = compose(PipOperator::dyadic(f, g), PipOperator::dyadic(u, v), L);
  ASSERT_EQ(BA.kind(), OpKind::Composition);
  EXPECT_TRUE(BA.through().is_central());
  auto collapsed = PipOperator::dyadic(f * pairing(g, u), v);
  EXPECT_NEAR(std::abs(pairing(g, u) - Complex(0, 1) * std::riemann_zeta(2.0)), 0.0, 1e-12);
  for (std::size_t k = 0; k <= 20; ++k) {
    auto e = PipVector::basis(k);
    EXPECT_LT(max_diff(act(BA, e), act(collapsed, e)), 1e-12);
  }
}

TEST(Compose, ResolventAfterDyadicFactorsThroughTheDyadicRange) {
  Lattice L({s(1)});
  auto R = PipOperator::diagonal(reciprocal(Sequence::affine(1.0, 0.5)));
  auto f = PipVector::power_tail(1.0, Rational(-1, 4));  // only in s_r for r < -1/2
  auto D = PipOperator::dyadic(f, PipVector::basis(0));
  auto RD = compose(R, D, L);
  ASSERT_EQ(RD.kind(), OpKind::Composition);
  ASSERT_TRUE(RD.through().power_exponent());
  EXPECT_EQ(*RD.through().power_exponent(), Rational(-1));
  EXPECT_TRUE(representative_exists(RD, s(0), s(1)).valid);
}

TEST(Compose, NoFactorizationForIncompatibleDyadics) {
  Lattice L({s(1), s(2)});
  auto g = PipVector::power_tail(1.0, Rational(1, 4));
  auto u = PipVector::power_tail(1.0, Rational(1, 4));
  EXPECT_EQ(code_of([&] {
              compose(PipOperator::dyadic(PipVector::basis(0), g), PipOperator::dyadic(u, PipVector::basis(0)), L);
            }),
            ErrorCode::NoFactorization);
}

TEST(Apply, ClosedFormActions) {
  auto a = Sequence::affine(2.0, 1.0);
  auto A = PipOperator::diagonal(a);
  for (std::size_t j = 0; j < 10; ++j) {
    auto y = apply(A, PipVector::basis(j), s(2), s(0));
    EXPECT_LT(max_diff(y, PipVector::basis(j, a(j))), 1e-15);
  }
  auto f = PipVector::power_tail(1.0, Rational(-2));
  auto g = PipVector::power_tail(1.0, Rational(-1));
  auto h = PipVector::from_dense(Eigen::Vector3cd(1.0, Complex(0, 1), 3.0));
  auto y = apply(PipOperator::dyadic(f, g), h, s(0), s(0));
  EXPECT_LT(max_diff(y, f * pairing(g, h)), 1e-15);
  auto z = apply(PipOperator::identity(Complex(0, 2)), f, s(0), s(0));
  EXPECT_LT(max_diff(z, f * Complex(0, 2)), 1e-15);

  // Diagonal symbols keep power tails closed.
  auto t = act(number_op(), f);
  ASSERT_TRUE(t.tail());
  auto pp = t.tail()->values.pure_power();
  ASSERT_TRUE(pp);
  EXPECT_EQ(pp->exponent, Rational(-1));
}

TEST(Apply, DomainAndRepresentativeErrors) {
  auto N = number_op();
  EXPECT_EQ(code_of([&] { apply(N, PipVector::basis(0), s(0), s(0)); }), ErrorCode::NoRepresentative);
  EXPECT_EQ(code_of([&] { apply(N, PipVector::power_tail(1.0, Rational(-1)), s(2), s(0)); }), ErrorCode::NotInDomain);
}

TEST(Apply, AgreesThroughDifferentRepresentatives) {
  auto N = number_op();
  auto f = PipVector::power_tail(1.0, Rational(-3));
  auto y1 = apply(N, f, s(2), s(0));
  auto y2 = apply(N, f, s(3), s(1));
  EXPECT_LT(max_diff(y1, y2, 256), 1e-15);
}

TEST(Invert, BoundedBelowDiagonal) {
  auto a = Sequence::constant(1.0) + reciprocal(Sequence::affine(1.0, 1.0));
  auto A = PipOperator::diagonal(a);
  auto inv = invert(A, s(0), s(0));
  ASSERT_EQ(inv.op.kind(), OpKind::Diagonal);
  EXPECT_TRUE(inv.certificate.valid);
  EXPECT_NEAR(inv.certificate.bound, 1.0, 1e-12);
  for (std::size_t n = 0; n < 40; ++n) EXPECT_NEAR(std::abs(inv.op.symbol()(n) - 1.0 / a(n)), 0.0, 1e-14);
  auto x = PipVector::power_tail(1.0, Rational(-1), 3, {{0, 1.0}, {2, Complex(0, 1)}});
  EXPECT_LT(max_diff(act(A, act(inv.op, x)), x, 200), 1e-14);
  EXPECT_LT(max_diff(act(inv.op, act(A, x)), x, 200), 1e-14);
}

TEST(Invert, CompactDiagonalIsNotSurjectiveOnTheCentralSpace) {
  auto A = PipOperator::diagonal(reciprocal(Sequence::affine(1.0, 1.0)));
  try {
    invert(A, s(0), s(0));
    FAIL() << "expected NotSurjective";
  } catch (const InversionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSurjective);
    ASSERT_TRUE(e.witness());
    auto w = *e.witness();
    EXPECT_EQ(w.tail()->values.pure_power()->exponent, Rational(-1));
    EXPECT_TRUE(membership(w, s(0)).in);
    EXPECT_FALSE(membership(w.multiplied(Sequence::affine(1.0, 1.0)), s(0)).in);
  }
  EXPECT_EQ(code_of([&] { invert(A, s(0), s(-2)); }), ErrorCode::NotSurjective);
  auto inv = invert(A, s(0), s(2));
  EXPECT_TRUE(inv.certificate.valid);
  EXPECT_NEAR(inv.certificate.bound, 1.0, 1e-12);
}

TEST(Invert, KernelAndUnboundedCases) {
  auto a = Sequence::explicit_values({1.0, 2.0, 3.0, 0.0}, Sequence::constant(1.0));
  try {
    invert(PipOperator::diagonal(a), s(0), s(0));
    FAIL();
  } catch (const InversionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInjective);
    ASSERT_TRUE(e.witness());
    EXPECT_TRUE(structurally_equal(*e.witness(), PipVector::basis(3)));
  }
  EXPECT_EQ(code_of([&] { invert(number_op(), s(0), s(0)); }), ErrorCode::NotBounded);
  try {
    invert(PipOperator::shift(1), s(0), s(0));
    FAIL();
  } catch (const InversionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSurjective);
    EXPECT_TRUE(structurally_equal(*e.witness(), PipVector::basis(0)));
  }
  EXPECT_EQ(code_of([&] { invert(PipOperator::shift(-1), s(0), s(0)); }), ErrorCode::NotInjective);
  auto I2 = invert(PipOperator::identity(2.0), s(1), s(1));
  EXPECT_EQ(I2.op.lambda(), Complex(0.5));
  EXPECT_EQ(code_of([&] { invert(PipOperator::identity(2.0), s(1), s(0)); }), ErrorCode::NotSurjective);

  auto v = PipVector::power_tail(1.0, Rational(-1));
  auto rank = PipOperator::dyadic(PipVector::basis(0), v);
  try {
    invert(rank, s(0), s(0));
    FAIL();
  } catch (const InversionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInjective);
    ASSERT_TRUE(e.witness());
    EXPECT_LT(std::abs(pairing(v, *e.witness())), 1e-14);
  }
}

TEST(Invert, WoodburyForDiagonalPlusRankOne) {
  auto u = PipVector::power_tail(1.0, Rational(-1));
  auto A = PipOperator::diagonal(Sequence::affine(1.0, 2.0)) + PipOperator::dyadic(u, u);
  auto inv = invert(A, s(0), s(-2));
  EXPECT_TRUE(inv.certificate.valid);
  for (std::size_t k = 0; k < 10; ++k) {
    auto e = PipVector::basis(k);
    EXPECT_LT(max_diff(act(A, act(inv.op, e)), e), 1e-12);
    EXPECT_LT(max_diff(act(inv.op, act(A, e)), e), 1e-12);
  }
  auto singular = PipOperator::identity(1.0) - PipOperator::dyadic(PipVector::basis(0), PipVector::basis(0));
  try {
    invert(singular, s(0), s(0));
    FAIL();
  } catch (const InversionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInjective);
    ASSERT_TRUE(e.witness());
    EXPECT_LT(max_diff(act(singular, *e.witness()), PipVector()), 1e-15);
    EXPECT_GT(std::abs(e.witness()->coefficient(0)), 0.5);
  }
  EXPECT_EQ(code_of([&] { invert(PipOperator::composition(A, A, s(0)), s(0), s(0)); }), ErrorCode::NotClosedForm);
}

TEST(Uniqueness, DiagonalOnIncomparablePairs) {
  auto N = number_op();
  auto sq = Sequence::power(1.0, Rational(2));
  auto q1 = SpaceIndex::weighted(zigzag(1) * sq, "z+2"), p1 = SpaceIndex::weighted(zigzag(1), "z+");
  auto q2 = SpaceIndex::weighted(zigzag(-1) * sq, "z-2"), p2 = SpaceIndex::weighted(zigzag(-1), "z-");
  EXPECT_EQ(compare(p1, p2), Order::Incomparable);
  auto c1 = representative_exists(N, q1, p1);
  auto c2 = representative_exists(N, q2, p2);
  ASSERT_TRUE(c1.valid && c2.valid);
  auto rep = inverse_uniqueness_check(N, c1, c2);
  EXPECT_TRUE(rep.agree) << rep.max_disagreement;
  EXPECT_EQ(rep.probes, 30u);
}

TEST(Uniqueness, IdentityAndWoodbury) {
  auto I = PipOperator::identity(1.0);
  auto rep = inverse_uniqueness_check(I, representative_exists(I, s(0), s(0)), representative_exists(I, s(1), s(1)));
  EXPECT_TRUE(rep.agree);
  EXPECT_EQ(rep.max_disagreement, 0.0);

  auto u = PipVector::power_tail(1.0, Rational(-1));
  auto A = PipOperator::diagonal(Sequence::affine(1.0, 2.0)) + PipOperator::dyadic(u, u);
  auto c1 = representative_exists(A, s(0), s(-2));
  auto c2 = representative_exists(A, s(1), s(-1));
  ASSERT_TRUE(c1.valid && c2.valid);
  auto w = inverse_uniqueness_check(A, c1, c2, 30, 1e-10);
  EXPECT_TRUE(w.agree) << w.max_disagreement;
}

TEST(RepresentativeSet, MonotoneInBothIndices) {
  auto N = number_op();
  auto c = representative_exists(N, s(2), s(0));
  for (int dq = 0; dq <= 2; ++dq)
    for (int dp = 0; dp <= 2; ++dp) {
      auto wider = representative_exists(N, s(2 + dq), s(-dp));
      ASSERT_TRUE(wider.valid);
      EXPECT_LE(wider.bound, c.bound * embedding(s(2 + dq), s(2)).norm * embedding(s(0), s(-dp)).norm + 1e-12);
    }
}

TEST(RepresentativeSet, ClosedUnderMeets) {
  auto A = PipOperator::diagonal(Sequence::power(1.0, Rational(1, 2)));
  auto lin = Sequence::power(1.0, Rational(1));
  auto q1 = SpaceIndex::weighted(zigzag(1) * lin, "q1"), p1 = SpaceIndex::weighted(zigzag(1), "p1");
  auto q2 = SpaceIndex::weighted(zigzag(-1) * lin, "q2"), p2 = SpaceIndex::weighted(zigzag(-1), "p2");
  ASSERT_TRUE(representative_exists(A, q1, p1).valid);
  ASSERT_TRUE(representative_exists(A, q2, p2).valid);
  auto m = representative_exists(A, meet(q1, q2), meet(p1, p2));
  EXPECT_TRUE(m.valid);
  EXPECT_TRUE(std::isfinite(m.bound));
}

TEST(RepresentativeSet, AdjointReflection) {
  std::vector<PipOperator> ops = {PipOperator::shift(1), PipOperator::shift(-1),
                                  PipOperator::diagonal(Complex(1, -1) * Sequence::power(1.0, Rational(1))),
                                  PipOperator::dyadic(PipVector::power_tail(1.0, Rational(-1)), PipVector::basis(2))};
  for (const auto& A : ops)
    for (int q = -2; q <= 2; ++q)
      for (int p = -2; p <= 2; ++p) {
        auto c = representative_exists(A, s(q), s(p));
        auto r = representative_exists(adjoint(A), dual_index(s(p)), dual_index(s(q)));
        EXPECT_EQ(c.valid, r.valid) << A.describe() << " " << q << " " << p;
        if (c.valid) EXPECT_NEAR(c.bound, r.bound, 1e-12);
      }
}

TEST(RepresentativeSet, SymmetricOperatorIsAntidiagonallySymmetric) {
  auto N = number_op();
  for (int q = -3; q <= 3; ++q)
    for (int p = -3; p <= 3; ++p)
      EXPECT_EQ(representative_exists(N, s(q), s(p)).valid, representative_exists(N, s(-p), s(-q)).valid);
}

TEST(Truncation, DenseBlocksAndWeightedSections) {
  auto S = dense_block(PipOperator::shift(1), 5, 4);
  EXPECT_EQ(S(1, 0), Complex(1.0));
  EXPECT_EQ(S(4, 3), Complex(1.0));
  EXPECT_EQ(S.sum(), Complex(4.0));
  EXPECT_EQ(outreach(PipOperator::shift(1)), 1u);
  EXPECT_EQ(outreach(PipOperator::composition(PipOperator::shift(1), PipOperator::shift(1), s(0))), 2u);
  auto W = weighted_section(number_op(), s(2), s(0), 6, 6);
  EXPECT_LT((W - Eigen::MatrixXcd::Identity(6, 6)).norm(), 1e-14);
  auto u = PipVector::from_dense(Eigen::Vector2cd(1.0, Complex(0, 1)));
  auto D = dense_block(PipOperator::dyadic(u, u), 3, 3);
  EXPECT_EQ(D(0, 1), Complex(0, -1));
  auto via_act = dense_block(PipOperator::composition(PipOperator::dyadic(u, u), PipOperator::identity(1.0), s(0)), 3, 3);
  EXPECT_LT((D - via_act).norm(), 1e-15);
}
