// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pip/frames.hpp"
#include "pip/klmn.hpp"
#include "pip/singular.hpp"
#include "pip/spectral.hpp"

using namespace pip;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

SpaceIndex s(int k) { return SpaceIndex::power(Rational(k)); }
Sequence n_plus_one() { return Sequence::affine(1.0, 1.0); }

Eigen::MatrixXcd scalar(Complex c) { return Eigen::MatrixXcd::Constant(1, 1, c); }

std::vector<PipVector> random_heads(std::size_t count, std::size_t length, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<PipVector> out;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(length));
    for (auto& c : v) c = Complex(nd(rng), nd(rng));
    out.push_back(PipVector::from_dense(v / v.norm()));
  }
  return out;
}

void delta_bound_states(Outcome& o) {
  double worst = 0.0, slowest = 0.0;
  for (double alpha : {0.1, 0.5, 1.0, 2.0}) {
    const auto start = std::chrono::steady_clock::now();
    const auto bs = bound_states(delta1d(alpha));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    slowest = std::max(slowest, secs);
    o.require(bs.size() == 1, "one bound state for alpha = " + std::to_string(alpha));
    if (bs.empty()) continue;
    const double exact = -1.0 / (4.0 * alpha * alpha);
    worst = std::max(worst, std::abs(bs[0].lambda - exact) / std::abs(exact));
  }
  o.require(worst < 1e-8, "relative error below 1e-8");
  o.require(slowest < 1.0, "under one second per alpha");
  o.detail << "max relative error " << worst << ", slowest " << slowest << " s";
}

void membership_table(Outcome& o) {
  struct Row {
    int nu, r;
    bool in;
  };
  const Row rows[] = {{1, -1, true}, {2, -1, false}, {2, -2, true}, {3, -1, false}, {3, -2, true}, {4, -2, false}};
  int right = 0;
  for (const auto& r : rows) right += exponential_membership(r.nu, r.r) == r.in;
  o.require(right == 6, "all six decisions");
  o.detail << right << "/6 decisions";
}

void resolvent_identities(Outcome& o) {
  SpectralOptions opt;
  opt.truncation = 128;
  const auto A = PipOperator::diagonal(n_plus_one(), "n+1");
  const auto model = sequence_model(n_plus_one(), {PipVector::power_tail(1.0, Rational(-3, 2))}, scalar(3.0));
  const auto H = model.H();
  const auto tests = random_heads(5, 12, 17);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> re(-5.0, 5.0), im(0.3, 2.0);
  std::bernoulli_distribution sign(0.5);
  auto draw = [&] { return Complex(re(rng), sign(rng) ? im(rng) : -im(rng)); };

  double first = 0.0, second = 0.0, derivative = 0.0, krein = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Complex l = draw(), m = draw();
    first = std::max(first, first_resolvent_identity(A, H, l, s(2), s(0), tests, opt).max_residual);
    for (const auto& X : {A, H}) {
      second = std::max(second, second_resolvent_identity(X, l, m, s(2), s(0), tests, opt).max_residual);
      derivative =
          std::max(derivative, resolvent_derivative_identity(X, l, s(2), s(0), tests, 1e-5, opt).max_residual);
    }
    // The Krein formula against the generic inverse of H - lambda.
    const auto K = krein_resolvent(model, l);
    const auto W = resolvent(H, l, s(2), s(0), opt);
    for (const auto& f : tests) {
      const auto d = (act(K, f) - act(W, f)).dense(512);
      krein = std::max(krein, d.norm() / f.dense(512).norm());
    }
  }
  o.require(first < 1e-10, "first identity");
  o.require(second < 1e-10, "second identity");
  o.require(krein < 1e-10, "Krein formula");
  o.require(derivative < 1e-6, "derivative");
  o.detail << "first " << first << ", second " << second << ", Krein " << krein << ", dR/dlambda " << derivative;
}

void krein_against_dense(Outcome& o) {
  double worst = 0.0;
  std::size_t states = 0;
  for (double c : {3.0, 8.0}) {
    const auto m = sequence_model(n_plus_one(), {PipVector::power_tail(1.0, Rational(-3, 2))}, scalar(c));
    const auto bs = bound_states(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_block(m.H(), 512, 512), Eigen::EigenvaluesOnly);
    std::vector<double> dense;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) < m.T.threshold()) dense.push_back(es.eigenvalues()(i));
    o.require(dense.size() == bs.size(), "same number of discrete eigenvalues");
    for (std::size_t i = 0; i < std::min(dense.size(), bs.size()); ++i)
      worst = std::max(worst, std::abs(dense[i] - bs[i].lambda));
    states += bs.size();
  }
  o.require(states > 0, "bound states found");
  o.require(worst < 1e-6, "agreement to 1e-6");
  o.detail << states << " roots, max deviation " << worst;
}

void inverse_uniqueness(Outcome& o) {
  const auto N = PipOperator::diagonal(n_plus_one(), "n+1");
  auto zigzag = [](int sign) { return Sequence::power_profile({Rational(sign), Rational(-sign)}); };
  const auto sq = Sequence::power(1.0, Rational(2));
  const auto q1 = SpaceIndex::weighted(zigzag(1) * sq, "z+2"), p1 = SpaceIndex::weighted(zigzag(1), "z+");
  const auto q2 = SpaceIndex::weighted(zigzag(-1) * sq, "z-2"), p2 = SpaceIndex::weighted(zigzag(-1), "z-");
  const auto c1 = representative_exists(N, q1, p1), c2 = representative_exists(N, q2, p2);
  o.require(c1.valid && c2.valid, "both representatives exist");
  const auto rep = inverse_uniqueness_check(N, c1, c2, 30, 1e-12);
  o.require(rep.probes == 30, "30 probes");
  o.require(rep.agree && rep.max_disagreement <= 1e-12, "agreement on the meet");
  o.detail << rep.probes << " probes, max disagreement " << rep.max_disagreement;
}

void defect_numbers(Outcome& o) {
  const auto S = PipOperator::shift(1);
  std::size_t checked = 0, ones = 0;
  for (std::size_t N : {64u, 128u}) {
    SpectralOptions opt;
    opt.truncation = N;
    for (double r : {0.0, 0.3, 0.6, 0.9})
      for (int k = 0; k < (r == 0.0 ? 1 : 8); ++k) {
        const Complex l = std::polar(r, 2.0 * std::numbers::pi * k / 8.0);
        const auto d = defect_number(S, s(0), s(0), l, opt);
        ++checked;
        ones += d.defect && *d.defect == 1;
      }
  }
  o.require(ones == checked, "shift defect 1 inside the disk");

  std::size_t zeros = 0, regular = 0;
  const auto h = PipOperator::diagonal(reciprocal(n_plus_one()));
  const auto n = PipOperator::diagonal(n_plus_one());
  for (Complex l : {Complex(-1.0), Complex(0.5, 0.3), Complex(2.0), Complex(0.25, -0.01), Complex(1.5, 0.0)}) {
    for (const auto& [A, q, p] : {std::tuple{h, s(0), s(0)}, std::tuple{n, s(2), s(0)}}) {
      const auto rp = regular_point(A, q, p, l);
      if (!rp.is_regular()) continue;
      ++regular;
      const auto d = defect_number(A, q, p, l);
      zeros += d.defect && *d.defect == 0;
    }
  }
  o.require(regular > 0 && zeros == regular, "diagonal defect 0 at regular points");
  o.detail << "shift: " << ones << "/" << checked << " points with defect 1 (N = 64, 128); diagonals: " << zeros
           << "/" << regular << " regular points with defect 0";
}

void klmn_restriction(Outcome& o) {
  double asym = 0.0, dist = INFINITY;
  std::size_t blocks = 0;
  for (int m : {1, 2, 3}) {
    KlmnOptions opt;
    opt.truncations = {32, 64, 128};
    const auto K = klmn_restrict(PipOperator::diagonal(Sequence::power(1.0, Rational(m))), s(m), s(-m), -1.0, opt);
    o.require(K.hermitian, "Hermitian verdict for m = " + std::to_string(m));
    for (const auto& T : K.truncations) {
      asym = std::max({asym, T.x_asymmetry, T.r_asymmetry});
      dist = std::min(dist, T.distance);
      ++blocks;
    }
  }
  o.require(asym <= 1e-13, "Hermitian to 1e-13");
  o.require(dist >= 1.0, "distance at least 1");
  o.detail << blocks << " truncations, max asymmetry " << asym << ", min dist(-1, spec) " << dist;
}

void spectral_family(Outcome& o) {
  const auto X = PipOperator::diagonal(Sequence::power(1.0, Rational(2)));
  const auto F = eigen_expansion(X, s(2)).family;
  const auto heads = random_heads(21, 40, 31);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < heads.size(); ++i)
    worst = std::max(worst, spectral_family_reconstruct(F, X, heads[i], heads[i + 1]).residual);
  o.require(worst < 1e-10, "reconstruction to 1e-10");

  std::vector<double> mu;
  for (int i = 0; i < 50; ++i) mu.push_back(-5.0 + 90.0 * i / 49.0);
  bool monotone = true, bounded = true;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto p = family_profile(F, heads[i] * Complex(2.0), mu);
    monotone = monotone && p.monotone && p.operator_monotone;
    bounded = bounded && p.bounded;
  }
  o.require(monotone, "B(mu) monotone");
  o.require(bounded, "<B(mu) f|f> bounded by ||f||^2");
  o.detail << "20 reconstructions, max residual " << worst << "; 50-point mu grid monotone and bounded";
}

void tight_rigging(Outcome& o) {
  ExtendedSpectrumOptions opts;
  opts.truncation = 32;
  struct Case {
    std::string name;
    Multiplier M;
    Grid grid;
  };
  std::vector<Case> cases{
      {"1/(n+1)", multiplier(reciprocal(n_plus_one()), 0), Grid{-0.5, 1.5, -0.5, 0.5, 21, 11}},
      {"n+1", multiplier(n_plus_one(), 2), Grid{-4.0, 40.0, -1.0, 1.0, 45, 3}},
      {"(n+1)^2", multiplier(Sequence::power(1.0, Rational(2)), 4), Grid{-5.0, 60.0, -1.0, 1.0, 66, 3}},
  };
  int tight = 0;
  for (const auto& c : cases) {
    const auto sp = multiplier_spectrum(c.M, c.grid, opts);
    const int r = std::max(c.M.degree, 0) / 2;
    const auto inc = spectral_inclusions(sp.extended, c.M.op, {{c.M.space(r), c.M.space(-r)}});
    const bool ok = sp.tight && sp.matches_closure && inc.spectrum_in_ext && inc.ext_in_j;
    o.require(ok, "tight with inclusions for " + c.name);
    tight += ok;
  }
  // Bounded symbol: rho^J is the complement of the closure of the symbol values.
  const auto h = PipOperator::diagonal(reciprocal(n_plus_one()));
  const Grid g{-0.5, 1.5, -0.5, 0.5, 21, 11};
  const auto rep = j_resolvent(h, {{s(0), s(0)}}, g);
  std::size_t mismatches = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Complex z = g.point(k % g.nx, k / g.nx);
    const bool on_closure = z.imag() == 0.0 && z.real() >= 0.0 && z.real() <= 1.0;
    if (!on_closure && !rep.rho[k]) ++mismatches;
    if (rep.rho[k] && on_closure) {
      double d = std::abs(z.real());
      for (int n = 0; n < 4096; ++n) d = std::min(d, std::abs(z.real() - 1.0 / (n + 1)));
      if (d < 1e-12) ++mismatches;
    }
  }
  o.require(mismatches == 0, "rho^J is the complement of the closure");
  o.detail << tight << "/" << cases.size() << " tight verdicts with sigma(X0) in sigma_ext in sigma^J; " << mismatches
           << " rho^J grid mismatches";
}

void frame_suite(Outcome& o) {
  bool exact = true, witnessed = true;
  for (Rational e : {Rational(1, 2), Rational(1), Rational(2)}) {
    for (double c : {1.0, 2.0}) {
      const SemiFrameScale sc(Sequence::power(c, e));
      const auto b = semi_frame_bounds(sc, 2000);
      double sup = 0.0;
      for (std::size_t n = 0; n < 2000; ++n) sup = std::max(sup, 1.0 / std::norm(sc.m()(n)));
      exact = exact && b.upper == sup;
      witnessed = witnessed && !b.frame && b.witness.size() >= 3 && b.witness_values.back() < 0.01 * b.upper;
    }
  }
  o.require(exact, "upper bound equals sup m_n^-2");
  o.require(witnessed, "lower-bound failure witness");

  double delta_defect = 0.0, delta_quad = INFINITY, unitarity = 0.0;
  bool within = true;
  for (int n : {1, 2, 3}) {
    const auto A = affine_frame_build(affine_profile("gaussian"), n, RadialGrid{});
    const auto d = delta_projection(A);
    within = within && d.defect <= d.quadrature_error;
    delta_defect = std::max(delta_defect, d.defect);
    delta_quad = std::min(delta_quad, d.quadrature_error);
    unitarity = std::max(unitarity, unitarity_defect(A.frame));
  }
  o.require(within, "delta multiplier within the quadrature error");
  o.require(unitarity < 1e-10, "unitarity surrogate to 1e-10");
  o.detail << "semi-frame bounds exact on 6 power weights; delta defect " << delta_defect << " (quadrature error >= "
           << delta_quad << "); unitarity defect " << unitarity;
}

void boundary_extension(Outcome& o) {
  std::vector<Complex> alphas;
  for (int k = 0; k < 8; ++k) alphas.push_back(std::polar(1.0, -3.0 + 0.8 * k));
  const auto rep = boundary_extension_demo(alphas, 20);
  double worst = 0.0;
  for (const auto& sp : rep.spectra) {
    const auto w = sp.window(20);
    for (long n = -20; n <= 20; ++n)
      worst = std::max(worst, std::abs(w[static_cast<std::size_t>(n + 20)] -
                                       (std::arg(sp.alpha) + 2.0 * std::numbers::pi * static_cast<double>(n))));
  }
  o.require(rep.spectra.size() == 8, "eight spectra");
  o.require(worst < 1e-12, "arg(alpha) + 2 pi Z");
  o.require(rep.pairwise_disjoint && rep.min_separation > 0.0, "pairwise disjoint");
  o.detail << "8 alphas, max deviation " << worst << ", min separation " << rep.min_separation;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"delta-potential bound state", delta_bound_states},
      {"membership table", membership_table},
      {"resolvent identities", resolvent_identities},
      {"Krein roots against dense truncation", krein_against_dense},
      {"inverse uniqueness", inverse_uniqueness},
      {"defect numbers", defect_numbers},
      {"KLMN restriction", klmn_restriction},
      {"spectral family", spectral_family},
      {"tight rigging", tight_rigging},
      {"frame suite", frame_suite},
      {"boundary-extension demo", boundary_extension},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
