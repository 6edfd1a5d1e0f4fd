#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pip/errors.hpp"
#include "pip/sequence.hpp"

using namespace pip;

TEST(Rational, ParsesFractionsIntegersAndDecimals) {
  EXPECT_EQ(parse_rational("3/4"), Rational(3, 4));
  EXPECT_EQ(parse_rational("-2"), Rational(-2));
  EXPECT_EQ(parse_rational("-0.25"), Rational(-1, 4));
  EXPECT_EQ(parse_rational(" 1.5 "), Rational(3, 2));
  EXPECT_EQ(to_string(Rational(-3, 4)), "-3/4");
  EXPECT_THROW(parse_rational("1/0"), Error);
  EXPECT_THROW(parse_rational("abc"), Error);
}

TEST(Sequence, EvaluatesClosedForms) {
  auto p = Sequence::power(2.0, Rational(-1, 2), 0.5);
  EXPECT_NEAR(p(3).real(), 2.0 / 2.0 * 0.125, 1e-15);
  auto a = Sequence::affine(1.0, 1.0);
  EXPECT_EQ(a(4), Complex(5.0));
  ASSERT_TRUE(a.pure_power().has_value());
  auto prof = Sequence::power_profile({Rational(2), Rational(-2)});
  EXPECT_DOUBLE_EQ(prof(2).real(), 9.0);
  EXPECT_DOUBLE_EQ(prof(3).real(), 1.0 / 16.0);
  auto head = Sequence::explicit_values({7.0, 8.0}, Sequence::constant(1.0));
  EXPECT_EQ(head(1), Complex(8.0));
  EXPECT_EQ(head(5), Complex(1.0));
  EXPECT_EQ(Sequence()(17), Complex(0.0));
}

TEST(Sequence, AlgebraMatchesPointwiseEvaluation) {
  auto a = Sequence::power(Complex(1.0, 2.0), 1);
  auto b = Sequence::power_profile({Rational(1), Rational(-1), Rational(0)});
  auto c = Sequence::geometric(3.0, 0.75);
  auto expr = (a * b + c) * reciprocal(b + Sequence::constant(2.0)) - conj(a);
  for (std::size_t n = 0; n < 40; ++n) {
    Complex direct = (a(n) * b(n) + c(n)) / (b(n) + 2.0) - std::conj(a(n));
    EXPECT_NEAR(std::abs(expr(n) - direct), 0.0, 1e-12 * (1.0 + std::abs(direct)));
  }
  auto sh = shifted(c, 1);
  EXPECT_EQ(sh(0), Complex(0.0));
  EXPECT_NEAR(sh(3).real(), c(2).real(), 1e-15);
  auto back = shifted(c, -1);
  EXPECT_NEAR(back(3).real(), c(4).real(), 1e-15);
}

TEST(Sequence, SimplificationsAreStructural) {
  auto p = Sequence::power(1.0, 2);
  EXPECT_TRUE(structurally_equal(reciprocal(reciprocal(p)), p));
  auto z = Sequence::power(Complex(0.0, 1.0), 1);
  EXPECT_TRUE(structurally_equal(conj(conj(z)), z));
  auto lp = (p * Sequence::power(3.0, -1)).pure_power();
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->exponent, Rational(1));
  EXPECT_EQ(lp->coeff, Complex(3.0));
}

TEST(Asymptotics, TracksLeadingTermsPerResidue) {
  auto s = Sequence::power_profile({Rational(2), Rational(-2)}) * Sequence::power(1.0, -1);
  const auto& a = s.asymptotics();
  ASSERT_TRUE(a.known());
  EXPECT_EQ(a.period(), 2u);
  EXPECT_EQ(a.at(0).exponent, Rational(1));
  EXPECT_EQ(a.at(1).exponent, Rational(-3));
  EXPECT_EQ(a.trend(0), Trend::Unbounded);
  EXPECT_EQ(a.trend(1), Trend::Vanishing);
  EXPECT_TRUE(std::isinf(a.limsup_abs()));
  EXPECT_EQ(a.liminf_abs(), 0.0);

  auto sum = Sequence::power(1.0, 2) + Sequence::power(5.0, 1);
  EXPECT_EQ(sum.asymptotics().at(0).exponent, Rational(2));
  auto cancel = Sequence::power(1.0, 2) + Sequence::affine(1.0, 0.0) - Sequence::power(1.0, 2);
  EXPECT_FALSE(cancel.asymptotics().known());
  auto decay = Sequence::power(1.0, 3, 0.5);
  EXPECT_TRUE(decay.asymptotics().summable());
  EXPECT_DOUBLE_EQ(Sequence::constant(4.0).asymptotics().limsup_abs(), 4.0);
}

TEST(Series, ZetaValuesToMachinePrecision) {
  const double pi = std::numbers::pi;
  auto r2 = sum_series(Sequence::power(1.0, -2), 0);
  EXPECT_TRUE(r2.certified);
  EXPECT_NEAR(r2.value.real(), pi * pi / 6.0, 1e-14);
  EXPECT_LT(r2.error_bound, 1e-13);
  auto r4 = sum_series(Sequence::power(1.0, -4), 0);
  EXPECT_NEAR(r4.value.real(), std::pow(pi, 4) / 90.0, 1e-15);
  // Tail beyond a head: sum_{n>=5} (n+1)^-2
  double head = 1.0 + 0.25 + 1.0 / 9 + 1.0 / 16 + 1.0 / 25;
  auto tail = sum_series(Sequence::power(1.0, -2), 5);
  EXPECT_NEAR(tail.value.real(), pi * pi / 6.0 - head, 1e-14);
}

TEST(Series, EulerMaclaurinAgainstBruteForce) {
  for (double a : {-1.5, -2.25, -3.0, -6.5}) {
    for (double P : {1.0, 2.0, 3.0}) {
      for (double b : {1.0, 2.0}) {
        auto em = power_progression_sum(a, P, b, 0);
        // Brute force: 1e5 terms plus a two-term asymptotic tail.
        long double acc = 0;
        const long M = 100'000;
        for (long i = M - 1; i >= 0; --i) acc += std::pow(static_cast<long double>(P * i + b), a);
        long double x = P * M + b;
        long double tail = std::pow(x, a + 1) / (-(a + 1) * P) + 0.5L * std::pow(x, static_cast<long double>(a)) -
                           P * a * std::pow(x, a - 1) / 12.0L;
        double brute = static_cast<double>(acc + tail);
        EXPECT_NEAR(em.value.real(), brute, 1e-12 * std::abs(brute)) << a << " " << P << " " << b;
        EXPECT_TRUE(em.certified);
      }
    }
  }
  EXPECT_THROW(power_progression_sum(-1.0, 1.0, 1.0, 0), Error);
}

TEST(Series, GeometricAndMixedTails) {
  auto g = sum_series(Sequence::geometric(1.0, 0.5), 0);
  EXPECT_NEAR(g.value.real(), 2.0, 1e-15);
  EXPECT_TRUE(g.certified);
  auto poly_geo = sum_series(Sequence::power(1.0, 1, 0.5), 0);  // sum (n+1) 2^-n = 4
  EXPECT_NEAR(poly_geo.value.real(), 4.0, 1e-14);
  // meet-type weight times a power tail: (n+1)^{-3} ((n+1)^2 - 1 + 1) splits into powers.
  auto mixed = Sequence::power(1.0, -3) * (Sequence::power(1.0, 1) + Sequence::constant(2.0));
  const double pi = std::numbers::pi;
  double zeta3 = 1.2020569031595942;
  auto r = sum_series(mixed, 0);
  EXPECT_NEAR(r.value.real(), pi * pi / 6.0 + 2.0 * zeta3, 1e-13);
  // Residue profile: sum over n of (n+1)^{-2} on even n and (n+1)^{-4} on odd n.
  auto prof = Sequence::power_profile({Rational(-2), Rational(-4)});
  double brute = 0;
  for (int n = 0; n < 2'000'000; ++n) brute += n % 2 == 0 ? 1.0 / ((n + 1.0) * (n + 1.0)) : std::pow(n + 1.0, -4);
  brute += 1.0 / (2.0 * 2'000'000);  // leading tail of odd squares
  EXPECT_NEAR(sum_series(prof, 0).value.real(), brute, 1e-11);
}

TEST(Series, RefusesUnknownAndDivergentInputs) {
  auto opaque = Sequence::function([](std::size_t n) { return Complex(1.0 / ((n + 1.0) * (n + 1.0))); },
                                   Asymptotics::unknown(), "opaque", true);
  EXPECT_THROW(sum_series(opaque, 0), Error);
  SeriesOptions opt;
  opt.budget = 1000;
  auto r = sum_series(opaque, 0, opt);
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(r.certified);
  EXPECT_NEAR(r.value.real(), 1.6439345666815598, 1e-12);
  EXPECT_THROW(sum_series(Sequence::power(1.0, -1), 0), Error);
  EXPECT_THROW(sum_series(Sequence::constant(1.0), 0), Error);
}

TEST(Series, GenericPathUsesAsymptoticTail) {
  auto fn = Sequence::function(
      [](std::size_t n) { return Complex(1.0 / ((n + 1.0) * (n + 1.0)) + std::pow(0.5, n)); },
      Asymptotics(Leading{1.0, -2, 1.0}), "zeta2+geo", true);
  auto r = sum_series(fn, 0);
  const double pi = std::numbers::pi;
  EXPECT_FALSE(r.certified);
  EXPECT_NEAR(r.value.real(), pi * pi / 6.0 + 2.0, 1e-12);
}

TEST(WeightLattice, DualIsInvolutiveAndDeMorganExact) {
  auto w1 = Sequence::power(1.0, 2);
  auto w2 = Sequence::power(1.0, -1);
  auto custom = Sequence::affine(2.0, 3.0);
  for (const auto& w : {w1, w2, custom, weight_meet(w1, custom), weight_join(w2, custom)}) {
    EXPECT_TRUE(structurally_equal(weight_dual(weight_dual(w)), w)) << w.describe();
    auto d = weight_dual(w);
    for (std::size_t n = 0; n < 100; ++n) EXPECT_NEAR((d(n) * w(n)).real(), 1.0, 1e-15);
  }
  auto lhs = weight_dual(weight_meet(w1, w2));
  auto rhs = weight_join(weight_dual(w1), weight_dual(w2));
  EXPECT_TRUE(structurally_equal(lhs, rhs));
  for (std::size_t n = 0; n < 100; ++n) EXPECT_EQ(lhs(n), rhs(n));
  auto join = weight_join(w1, Sequence::power(1.0, -2));
  EXPECT_EQ(join.asymptotics().at(0).exponent, Rational(-2));
}

TEST(Extrema, CombinesSamplesWithLimits) {
  auto s = Sequence::affine(0.0, 1.0) + Sequence::power(1.0, -1);
  auto e = abs_extrema(s, 10000);
  EXPECT_DOUBLE_EQ(e.sup, 2.0);
  EXPECT_EQ(e.inf, 1.0);
  EXPECT_TRUE(e.symbolic);
  auto grow = abs_extrema(Sequence::power(1.0, Rational(1, 2)), 100);
  EXPECT_TRUE(std::isinf(grow.sup));
}
