#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace pip {

using Complex = std::complex<double>;
using Rational = boost::rational<std::int64_t>;

double to_double(const Rational& r);
std::string to_string(const Rational& r);
// Accepts "p/q", "p" and finite decimals such as "-0.25".
Rational parse_rational(std::string_view text);

// Leading term along one residue class: coeff * (n+1)^exponent * rate^n.
struct Leading {
  Complex coeff{0.0, 0.0};
  Rational exponent{0};
  double rate = 1.0;

  bool is_zero() const { return coeff == Complex(0.0, 0.0); }
};

enum class Trend { Vanishing, Convergent, Unbounded };

// Per-residue asymptotic profile of a sequence.  An empty profile means the
// behaviour at infinity is not known in closed form.
class Asymptotics {
 public:
  Asymptotics() = default;
  explicit Asymptotics(Leading uniform);
  explicit Asymptotics(std::vector<Leading> by_residue);

  static Asymptotics unknown() { return {}; }

  bool known() const { return !terms_.empty(); }
  std::size_t period() const { return terms_.size(); }
  const Leading& at(std::size_t residue) const { return terms_[residue % terms_.size()]; }
  const std::vector<Leading>& terms() const { return terms_; }
  bool all_zero() const;

  // Expand to a multiple of the current period.
  Asymptotics expanded(std::size_t period) const;

  // |a_n| behaviour per residue.
  Trend trend(std::size_t residue) const;
  bool summable() const;
  // lim sup / lim inf of |a_n|; +inf when unbounded along some residue.
  double limsup_abs() const;
  double liminf_abs() const;

 private:
  std::vector<Leading> terms_;
};

Asymptotics operator*(const Asymptotics& a, const Asymptotics& b);
Asymptotics operator+(const Asymptotics& a, const Asymptotics& b);
Asymptotics scaled(const Asymptotics& a, Complex c);
Asymptotics reciprocal(const Asymptotics& a);
Asymptotics conj(const Asymptotics& a);
Asymptotics pow(const Asymptotics& a, const Rational& e);
Asymptotics shifted(const Asymptotics& a, int offset);

namespace detail {
struct SeqNode;
}

// Immutable complex sequence (a_n)_{n>=0} described symbolically.  Copies
// share the underlying expression tree.
class Sequence {
 public:
  Sequence();  // the zero sequence

  Complex operator()(std::size_t n) const;
  const Asymptotics& asymptotics() const;
  bool is_real() const;
  std::string describe() const;

  // Exact form c (n+1)^k rate^n valid for every n, when the tree collapses to it.
  std::optional<Leading> pure_power() const;

  static Sequence constant(Complex c);
  // coeff * (n+1)^exponent * rate^n
  static Sequence power(Complex coeff, Rational exponent, double rate = 1.0);
  static Sequence geometric(Complex coeff, double rate) { return power(coeff, 0, rate); }
  // slope * n + intercept
  static Sequence affine(Complex slope, Complex intercept);
  // (n+1)^{e[n mod P]}
  static Sequence power_profile(std::vector<Rational> exponents);
  // head values for n < head.size(), then tail(n)
  static Sequence explicit_values(std::vector<Complex> head, Sequence tail = Sequence());
  static Sequence function(std::function<Complex(std::size_t)> fn, Asymptotics asymptotics,
                           std::string label, bool real = false);

  friend Sequence operator+(const Sequence& a, const Sequence& b);
  friend Sequence operator-(const Sequence& a, const Sequence& b);
  friend Sequence operator*(const Sequence& a, const Sequence& b);
  friend Sequence operator*(Complex c, const Sequence& a);
  friend Sequence reciprocal(const Sequence& a);
  friend Sequence conj(const Sequence& a);
  friend Sequence abs2(const Sequence& a);
  // Positive sequences only.
  friend Sequence pow(const Sequence& a, const Rational& e);
  // b_n = a_{n - offset}; zero where n - offset < 0.
  friend Sequence shifted(const Sequence& a, int offset);
  friend bool structurally_equal(const Sequence& a, const Sequence& b);

  // Lattice operations on positive weights.  dual() is an exact structural
  // involution and pushes through meet/join (De Morgan).
  friend Sequence weight_dual(const Sequence& w);
  friend Sequence weight_meet(const Sequence& a, const Sequence& b);
  friend Sequence weight_join(const Sequence& a, const Sequence& b);

 private:
  explicit Sequence(std::shared_ptr<const detail::SeqNode> node);
  std::shared_ptr<const detail::SeqNode> node_;

  friend struct detail::SeqNode;
};

Sequence operator-(const Sequence& a);
Sequence reciprocal(const Sequence& a);
Sequence conj(const Sequence& a);
Sequence abs2(const Sequence& a);
Sequence pow(const Sequence& a, const Rational& e);
Sequence shifted(const Sequence& a, int offset);
bool structurally_equal(const Sequence& a, const Sequence& b);
Sequence weight_dual(const Sequence& w);
Sequence weight_meet(const Sequence& a, const Sequence& b);
Sequence weight_join(const Sequence& a, const Sequence& b);
inline Sequence operator+(const Sequence& a, Complex c) { return a + Sequence::constant(c); }
inline Sequence operator-(const Sequence& a, Complex c) { return a - Sequence::constant(c); }

struct SeriesOptions {
  // Explicit partial-sum length used when asymptotics are unknown (0 = refuse).
  std::size_t budget = 0;
  // Explicit terms summed before switching to the asymptotic remainder.
  std::size_t explicit_terms = 1u << 14;
};

struct SeriesResult {
  Complex value;
  double error_bound = 0.0;
  // true when error_bound is rigorous (closed-form remainder)
  bool certified = false;
  // true when the value is a plain partial sum of `budget` terms
  bool truncated = false;
};

// sum_{n >= start} s(n).  Throws DivergentSeries / Undecidable.
SeriesResult sum_series(const Sequence& s, std::size_t start, const SeriesOptions& options = {});

// sum_{i >= i0} (P i + b)^a for a < -1 via Euler-Maclaurin with a rigorous remainder.
SeriesResult power_progression_sum(double a, double P, double b, std::int64_t i0);

// sup/inf of |s(n)| over 0 <= n < samples and the asymptotic limits.
struct Extrema {
  double sup = 0.0;
  double inf = 0.0;
  std::size_t argsup = 0;
  std::size_t arginf = 0;
  bool symbolic = false;  // asymptotics known
};
Extrema abs_extrema(const Sequence& s, std::size_t samples, std::size_t from = 0);

}  // namespace pip
