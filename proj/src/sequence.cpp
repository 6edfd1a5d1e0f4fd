#include "pip/sequence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pip/errors.hpp"

namespace pip {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Undecidable: return "Undecidable";
    case ErrorCode::DivergentSeries: return "DivergentSeries";
    case ErrorCode::Incompatible: return "Incompatible";
    case ErrorCode::NotInDomain: return "NotInDomain";
    case ErrorCode::NoRepresentative: return "NoRepresentative";
    case ErrorCode::NoFactorization: return "NoFactorization";
    case ErrorCode::NotInjective: return "NotInjective";
    case ErrorCode::NotSurjective: return "NotSurjective";
    case ErrorCode::NotBounded: return "NotBounded";
    case ErrorCode::NotInResolventSet: return "NotInResolventSet";
    case ErrorCode::OutsideRadius: return "OutsideRadius";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::NotUnitModulus: return "NotUnitModulus";
    case ErrorCode::NotAChain: return "NotAChain";
    case ErrorCode::NotComparable: return "NotComparable";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::DomainNotDense: return "DomainNotDense";
    case ErrorCode::NoCompleteFamily: return "NoCompleteFamily";
    case ErrorCode::InSpectrum: return "InSpectrum";
    case ErrorCode::PairingDiverges: return "PairingDiverges";
    case ErrorCode::GammaSingular: return "GammaSingular";
    case ErrorCode::FreeSpectrum: return "FreeSpectrum";
    case ErrorCode::NotClosedForm: return "NotClosedForm";
    case ErrorCode::GrowthViolated: return "GrowthViolated";
    case ErrorCode::SymbolUnbounded: return "SymbolUnbounded";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::GeneratorTooRegular: return "GeneratorTooRegular";
  }
  return "Error";
}

// ---------------------------------------------------------------- rationals

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t value = 0;
  auto first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::InvalidArgument, "malformed rational '" + std::string(s) + "'");
  return value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty rational");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto den = parse_int(text.substr(slash + 1));
    if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
    return Rational(parse_int(text.substr(0, slash)), den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string digits(text.substr(0, dot));
    std::string frac(text.substr(dot + 1));
    if (frac.size() > 15) throw Error(ErrorCode::InvalidArgument, "too many decimals");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    bool negative = !digits.empty() && digits.front() == '-';
    std::int64_t whole = (digits.empty() || digits == "-" || digits == "+") ? 0 : parse_int(digits);
    std::int64_t part = frac.empty() ? 0 : parse_int(frac);
    std::int64_t num = std::abs(whole) * den + part;
    return Rational(negative ? -num : num, den);
  }
  return Rational(parse_int(text));
}

// -------------------------------------------------------------- asymptotics

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(a, b); }

// Growth comparison of two nonzero leading terms: -1 if a decays faster.
int growth_compare(const Leading& a, const Leading& b) {
  if (!same_rate(a.rate, b.rate)) return a.rate < b.rate ? -1 : 1;
  if (a.exponent != b.exponent) return a.exponent < b.exponent ? -1 : 1;
  return 0;
}

std::size_t lcm_size(std::size_t a, std::size_t b) { return std::lcm(a, b); }

}  // namespace

Asymptotics::Asymptotics(Leading uniform) : terms_{uniform} {}

Asymptotics::Asymptotics(std::vector<Leading> by_residue) : terms_(std::move(by_residue)) {
  // Collapse a constant profile to period one.
  if (terms_.size() > 1) {
    bool uniform = std::all_of(terms_.begin(), terms_.end(), [&](const Leading& t) {
      return t.coeff == terms_[0].coeff && t.exponent == terms_[0].exponent &&
             t.rate == terms_[0].rate;
    });
    if (uniform) terms_.resize(1);
  }
}

bool Asymptotics::all_zero() const {
  return known() && std::all_of(terms_.begin(), terms_.end(), [](const Leading& t) { return t.is_zero(); });
}

Asymptotics Asymptotics::expanded(std::size_t period) const {
  if (!known()) return {};
  std::vector<Leading> out(period);
  for (std::size_t r = 0; r < period; ++r) out[r] = at(r);
  Asymptotics a;
  a.terms_ = std::move(out);
  return a;
}

Trend Asymptotics::trend(std::size_t residue) const {
  const Leading& t = at(residue);
  if (t.is_zero() || t.rate < 1.0 - 1e-15) return Trend::Vanishing;
  if (t.rate > 1.0 + 1e-15) return Trend::Unbounded;
  if (t.exponent < Rational(0)) return Trend::Vanishing;
  if (t.exponent == Rational(0)) return Trend::Convergent;
  return Trend::Unbounded;
}

bool Asymptotics::summable() const {
  if (!known()) return false;
  return std::all_of(terms_.begin(), terms_.end(), [](const Leading& t) {
    if (t.is_zero() || t.rate < 1.0 - 1e-15) return true;
    if (t.rate > 1.0 + 1e-15) return false;
    return t.exponent < Rational(-1);
  });
}

double Asymptotics::limsup_abs() const {
  if (!known()) return std::numeric_limits<double>::quiet_NaN();
  double best = 0.0;
  for (std::size_t r = 0; r < period(); ++r) {
    switch (trend(r)) {
      case Trend::Vanishing: break;
      case Trend::Convergent: best = std::max(best, std::abs(at(r).coeff)); break;
      case Trend::Unbounded: return kInf;
    }
  }
  return best;
}

double Asymptotics::liminf_abs() const {
  if (!known()) return std::numeric_limits<double>::quiet_NaN();
  double best = kInf;
  for (std::size_t r = 0; r < period(); ++r) {
    switch (trend(r)) {
      case Trend::Vanishing: best = 0.0; break;
      case Trend::Convergent: best = std::min(best, std::abs(at(r).coeff)); break;
      case Trend::Unbounded: break;
    }
  }
  return best;
}

Asymptotics operator*(const Asymptotics& a, const Asymptotics& b) {
  if (!a.known() || !b.known()) return {};
  std::size_t P = lcm_size(a.period(), b.period());
  std::vector<Leading> out(P);
  for (std::size_t r = 0; r < P; ++r) {
    const Leading &x = a.at(r), &y = b.at(r);
    if (x.is_zero() || y.is_zero()) {
      out[r] = Leading{};
    } else {
      out[r] = Leading{x.coeff * y.coeff, x.exponent + y.exponent, x.rate * y.rate};
    }
  }
  return Asymptotics(std::move(out));
}

Asymptotics operator+(const Asymptotics& a, const Asymptotics& b) {
  if (!a.known() || !b.known()) return {};
  std::size_t P = lcm_size(a.period(), b.period());
  std::vector<Leading> out(P);
  for (std::size_t r = 0; r < P; ++r) {
    const Leading &x = a.at(r), &y = b.at(r);
    if (x.is_zero()) {
      out[r] = y;
    } else if (y.is_zero()) {
      out[r] = x;
    } else {
      int c = growth_compare(x, y);
      if (c > 0) {
        out[r] = x;
      } else if (c < 0) {
        out[r] = y;
      } else {
        Complex sum = x.coeff + y.coeff;
        // Cancellation of leading terms: the subleading behaviour is not tracked.
        if (std::abs(sum) <= 1e-14 * std::max(std::abs(x.coeff), std::abs(y.coeff))) return {};
        out[r] = Leading{sum, x.exponent, x.rate};
      }
    }
  }
  return Asymptotics(std::move(out));
}

Asymptotics scaled(const Asymptotics& a, Complex c) {
  if (!a.known()) return {};
  std::vector<Leading> out = a.terms();
  for (auto& t : out) {
    t.coeff *= c;
    if (c == Complex(0.0)) t = Leading{};
  }
  return Asymptotics(std::move(out));
}

Asymptotics reciprocal(const Asymptotics& a) {
  if (!a.known()) return {};
  std::vector<Leading> out = a.terms();
  for (auto& t : out) {
    if (t.is_zero()) return {};
    t = Leading{1.0 / t.coeff, -t.exponent, 1.0 / t.rate};
  }
  return Asymptotics(std::move(out));
}

Asymptotics conj(const Asymptotics& a) {
  if (!a.known()) return {};
  std::vector<Leading> out = a.terms();
  for (auto& t : out) t.coeff = std::conj(t.coeff);
  return Asymptotics(std::move(out));
}

Asymptotics pow(const Asymptotics& a, const Rational& e) {
  if (!a.known()) return {};
  std::vector<Leading> out = a.terms();
  double de = to_double(e);
  for (auto& t : out) {
    if (t.is_zero()) {
      if (e <= Rational(0)) return {};
      continue;
    }
    t = Leading{std::pow(t.coeff, de), t.exponent * e, std::pow(t.rate, de)};
  }
  return Asymptotics(std::move(out));
}

Asymptotics shifted(const Asymptotics& a, int offset) {
  if (!a.known()) return {};
  std::size_t P = a.period();
  std::vector<Leading> out(P);
  for (std::size_t r = 0; r < P; ++r) {
    // b_n = a_{n-offset}: residue r of b reads residue r-offset of a.
    long src = (static_cast<long>(r) - offset) % static_cast<long>(P);
    if (src < 0) src += static_cast<long>(P);
    Leading t = a.at(static_cast<std::size_t>(src));
    if (!t.is_zero()) t.coeff *= std::pow(t.rate, -static_cast<double>(offset));
    out[r] = t;
  }
  return Asymptotics(std::move(out));
}

// ------------------------------------------------------------ node storage

namespace detail {

enum class Kind {
  Power,
  Affine,
  Profile,
  Explicit,
  Function,
  Sum,
  Product,
  Reciprocal,
  Conj,
  Pow,
  Shifted,
  Meet,
  Join,
};

struct SeqNode {
  Kind kind = Kind::Power;
  Complex c{0.0, 0.0};      // Power coefficient / Affine slope
  Complex c2{0.0, 0.0};     // Affine intercept
  Rational k{0};            // Power exponent / Pow exponent
  double rate = 1.0;        // Power rate
  int offset = 0;           // Shifted
  std::vector<Rational> exponents;           // Profile
  std::vector<Complex> head;                 // Explicit
  std::vector<Sequence> children;            // composite kinds
  std::vector<Complex> weights;              // Sum coefficients
  std::function<Complex(std::size_t)> fn;    // Function
  std::string label;
  Asymptotics asym;
  bool real = false;

  static const std::shared_ptr<const SeqNode>& node(const Sequence& s) { return s.node_; }
  static Sequence wrap(std::shared_ptr<SeqNode> n) { return Sequence(std::move(n)); }
};

}  // namespace detail

using detail::Kind;
using detail::SeqNode;

namespace {

Sequence make(std::shared_ptr<SeqNode> n) { return SeqNode::wrap(std::move(n)); }
const SeqNode& N(const Sequence& s) { return *SeqNode::node(s); }

bool is_real_number(Complex c) { return c.imag() == 0.0; }

double power_of(std::size_t n, const Rational& k) {
  double x = static_cast<double>(n) + 1.0;
  if (k.denominator() == 1) {
    auto e = k.numerator();
    if (e == 0) return 1.0;
    if (std::llabs(e) <= 8) {
      double r = 1.0;
      for (std::int64_t i = 0; i < std::llabs(e); ++i) r *= x;
      return e > 0 ? r : 1.0 / r;
    }
  }
  if (k.denominator() == 2 && k.numerator() == 1) return std::sqrt(x);
  if (k.denominator() == 2 && k.numerator() == -1) return 1.0 / std::sqrt(x);
  return std::pow(x, to_double(k));
}

Sequence power_node(Complex c, Rational k, double rate) {
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Power;
  n->c = c;
  n->k = k;
  n->rate = rate;
  n->real = is_real_number(c);
  if (c == Complex(0.0)) {
    n->k = 0;
    n->rate = 1.0;
    n->asym = Asymptotics(Leading{});
  } else {
    n->asym = Asymptotics(Leading{c, k, rate});
  }
  return make(n);
}

}  // namespace


namespace {

std::shared_ptr<const SeqNode> zero_node() {
  static const std::shared_ptr<const SeqNode> z = [] {
    auto n = std::make_shared<SeqNode>();
    n->kind = Kind::Power;
    n->asym = Asymptotics(Leading{});
    n->real = true;
    return std::shared_ptr<const SeqNode>(n);
  }();
  return z;
}

bool is_zero_seq(const Sequence& s) {
  const auto& n = N(s);
  return n.kind == Kind::Power && n.c == Complex(0.0);
}

bool is_one_power(const SeqNode& n) {
  return n.kind == Kind::Power && n.c == Complex(1.0) && n.rate == 1.0;
}

}  // namespace

Sequence::Sequence() : node_(zero_node()) {}
Sequence::Sequence(std::shared_ptr<const detail::SeqNode> node) : node_(std::move(node)) {}

Complex Sequence::operator()(std::size_t n) const {
  const SeqNode& s = *node_;
  switch (s.kind) {
    case Kind::Power: {
      if (s.c == Complex(0.0)) return 0.0;
      double v = power_of(n, s.k);
      if (s.rate != 1.0) v *= std::pow(s.rate, static_cast<double>(n));
      return s.c * v;
    }
    case Kind::Affine: return s.c * static_cast<double>(n) + s.c2;
    case Kind::Profile: return power_of(n, s.exponents[n % s.exponents.size()]);
    case Kind::Explicit: return n < s.head.size() ? s.head[n] : s.children[0](n);
    case Kind::Function: return s.fn(n);
    case Kind::Sum: {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < s.children.size(); ++i) acc += s.weights[i] * s.children[i](n);
      return acc;
    }
    case Kind::Product: {
      Complex acc = 1.0;
      for (const auto& c : s.children) acc *= c(n);
      return acc;
    }
    case Kind::Reciprocal: return 1.0 / s.children[0](n);
    case Kind::Conj: return std::conj(s.children[0](n));
    case Kind::Pow: {
      Complex v = s.children[0](n);
      if (v.imag() == 0.0 && v.real() > 0.0) return std::pow(v.real(), to_double(s.k));
      return std::pow(v, to_double(s.k));
    }
    case Kind::Shifted: {
      long m = static_cast<long>(n) - s.offset;
      return m < 0 ? Complex(0.0) : s.children[0](static_cast<std::size_t>(m));
    }
    case Kind::Meet: return s.children[0](n) + s.children[1](n);
    case Kind::Join: {
      Complex a = s.children[0](n), b = s.children[1](n);
      return a * b / (a + b);
    }
  }
  return 0.0;
}

const Asymptotics& Sequence::asymptotics() const { return node_->asym; }
bool Sequence::is_real() const { return node_->real; }

std::optional<Leading> Sequence::pure_power() const {
  const SeqNode& s = *node_;
  switch (s.kind) {
    case Kind::Power: return Leading{s.c, s.k, s.rate};
    case Kind::Affine:
      if (s.c == Complex(0.0)) return Leading{s.c2, 0, 1.0};
      if (s.c == s.c2) return Leading{s.c, 1, 1.0};
      return std::nullopt;
    case Kind::Profile:
      if (std::all_of(s.exponents.begin(), s.exponents.end(),
                      [&](const Rational& e) { return e == s.exponents[0]; }))
        return Leading{1.0, s.exponents[0], 1.0};
      return std::nullopt;
    case Kind::Explicit:
      if (s.head.empty()) return s.children[0].pure_power();
      return std::nullopt;
    case Kind::Conj: {
      auto p = s.children[0].pure_power();
      if (p) p->coeff = std::conj(p->coeff);
      return p;
    }
    case Kind::Sum:
      if (s.children.size() == 1) {
        auto p = s.children[0].pure_power();
        if (p) p->coeff *= s.weights[0];
        return p;
      }
      return std::nullopt;
    case Kind::Product: {
      Leading acc{1.0, 0, 1.0};
      for (const auto& c : s.children) {
        auto p = c.pure_power();
        if (!p) return std::nullopt;
        acc = Leading{acc.coeff * p->coeff, acc.exponent + p->exponent, acc.rate * p->rate};
      }
      return acc;
    }
    case Kind::Reciprocal: {
      auto p = s.children[0].pure_power();
      if (!p || p->is_zero()) return std::nullopt;
      return Leading{1.0 / p->coeff, -p->exponent, 1.0 / p->rate};
    }
    case Kind::Pow: {
      auto p = s.children[0].pure_power();
      if (!p || p->coeff.imag() != 0.0 || p->coeff.real() <= 0.0) return std::nullopt;
      double e = to_double(s.k);
      return Leading{std::pow(p->coeff.real(), e), p->exponent * s.k, std::pow(p->rate, e)};
    }
    default: return std::nullopt;
  }
}

std::string Sequence::describe() const {
  const SeqNode& s = *node_;
  auto cstr = [](Complex c) {
    std::ostringstream os;
    os.precision(12);
    if (c.imag() == 0.0) os << c.real();
    else os << "(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
    return os.str();
  };
  auto rstr = [](double r) {
    std::ostringstream os;
    os.precision(12);
    os << r;
    return os.str();
  };
  switch (s.kind) {
    case Kind::Power: {
      if (s.c == Complex(0.0)) return "0";
      std::string out = cstr(s.c);
      if (s.k != Rational(0)) out += "*(n+1)^" + to_string(s.k);
      if (s.rate != 1.0) out += "*" + rstr(s.rate) + "^n";
      return out;
    }
    case Kind::Affine: return cstr(s.c) + "*n+" + cstr(s.c2);
    case Kind::Profile: {
      std::string out = "(n+1)^{";
      for (std::size_t i = 0; i < s.exponents.size(); ++i)
        out += (i ? "," : "") + to_string(s.exponents[i]);
      return out + "}[n mod " + std::to_string(s.exponents.size()) + "]";
    }
    case Kind::Explicit: return "head[" + std::to_string(s.head.size()) + "]+" + s.children[0].describe();
    case Kind::Function: return s.label;
    case Kind::Sum: {
      std::string out = "(";
      for (std::size_t i = 0; i < s.children.size(); ++i) {
        if (i) out += " + ";
        if (s.weights[i] != Complex(1.0)) out += cstr(s.weights[i]) + "*";
        out += s.children[i].describe();
      }
      return out + ")";
    }
    case Kind::Product: {
      std::string out;
      for (std::size_t i = 0; i < s.children.size(); ++i)
        out += (i ? "*" : "") + std::string("[") + s.children[i].describe() + "]";
      return out;
    }
    case Kind::Reciprocal: return "1/[" + s.children[0].describe() + "]";
    case Kind::Conj: return "conj[" + s.children[0].describe() + "]";
    case Kind::Pow: return "[" + s.children[0].describe() + "]^" + to_string(s.k);
    case Kind::Shifted: return "shift" + std::to_string(s.offset) + "[" + s.children[0].describe() + "]";
    case Kind::Meet: return "meet(" + s.children[0].describe() + ", " + s.children[1].describe() + ")";
    case Kind::Join: return "join(" + s.children[0].describe() + ", " + s.children[1].describe() + ")";
  }
  return "?";
}

// ----------------------------------------------------------------- builders

Sequence Sequence::constant(Complex c) { return power_node(c, 0, 1.0); }

Sequence Sequence::power(Complex coeff, Rational exponent, double rate) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "power sequence rate must be positive");
  return power_node(coeff, exponent, rate);
}

Sequence Sequence::affine(Complex slope, Complex intercept) {
  if (slope == Complex(0.0)) return constant(intercept);
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Affine;
  n->c = slope;
  n->c2 = intercept;
  n->real = is_real_number(slope) && is_real_number(intercept);
  n->asym = Asymptotics(Leading{slope, 1, 1.0});
  return make(n);
}

Sequence Sequence::power_profile(std::vector<Rational> exponents) {
  if (exponents.empty()) throw Error(ErrorCode::InvalidArgument, "empty exponent profile");
  if (std::all_of(exponents.begin(), exponents.end(), [&](const Rational& e) { return e == exponents[0]; }))
    return power_node(1.0, exponents[0], 1.0);
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Profile;
  std::vector<Leading> terms;
  for (const auto& e : exponents) terms.push_back(Leading{1.0, e, 1.0});
  n->exponents = std::move(exponents);
  n->asym = Asymptotics(std::move(terms));
  n->real = true;
  return make(n);
}

Sequence Sequence::explicit_values(std::vector<Complex> head, Sequence tail) {
  if (head.empty()) return tail;
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Explicit;
  n->real = tail.is_real() &&
            std::all_of(head.begin(), head.end(), [](Complex c) { return c.imag() == 0.0; });
  n->asym = tail.asymptotics();
  n->head = std::move(head);
  n->children = {std::move(tail)};
  return make(n);
}

Sequence Sequence::function(std::function<Complex(std::size_t)> fn, Asymptotics asymptotics,
                            std::string label, bool real) {
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Function;
  n->fn = std::move(fn);
  n->asym = std::move(asymptotics);
  n->label = std::move(label);
  n->real = real;
  return make(n);
}

Sequence operator+(const Sequence& a, const Sequence& b) {
  if (is_zero_seq(a)) return b;
  if (is_zero_seq(b)) return a;
  auto pa = a.pure_power(), pb = b.pure_power();
  if (pa && pb && pa->exponent == pb->exponent && pa->rate == pb->rate)
    return power_node(pa->coeff + pb->coeff, pa->exponent, pa->rate);
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Sum;
  auto absorb = [&](const Sequence& s) {
    const SeqNode& x = N(s);
    if (x.kind == Kind::Sum) {
      n->children.insert(n->children.end(), x.children.begin(), x.children.end());
      n->weights.insert(n->weights.end(), x.weights.begin(), x.weights.end());
    } else {
      n->children.push_back(s);
      n->weights.push_back(1.0);
    }
  };
  absorb(a);
  absorb(b);
  n->real = a.is_real() && b.is_real();
  n->asym = a.asymptotics() + b.asymptotics();
  return make(n);
}

Sequence operator*(Complex c, const Sequence& a) {
  if (c == Complex(1.0)) return a;
  if (c == Complex(0.0) || is_zero_seq(a)) return Sequence();
  if (auto p = a.pure_power()) return power_node(c * p->coeff, p->exponent, p->rate);
  const SeqNode& x = N(a);
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Sum;
  if (x.kind == Kind::Sum) {
    n->children = x.children;
    n->weights = x.weights;
    for (auto& w : n->weights) w *= c;
  } else {
    n->children = {a};
    n->weights = {c};
  }
  n->real = a.is_real() && is_real_number(c);
  n->asym = scaled(a.asymptotics(), c);
  return make(n);
}

Sequence operator-(const Sequence& a) { return Complex(-1.0) * a; }
Sequence operator-(const Sequence& a, const Sequence& b) { return a + (-b); }

Sequence operator*(const Sequence& a, const Sequence& b) {
  if (is_zero_seq(a) || is_zero_seq(b)) return Sequence();
  auto pa = a.pure_power(), pb = b.pure_power();
  if (pa && pb)
    return power_node(pa->coeff * pb->coeff, pa->exponent + pb->exponent, pa->rate * pb->rate);
  if (pa && pa->exponent == Rational(0) && pa->rate == 1.0) return pa->coeff * b;
  if (pb && pb->exponent == Rational(0) && pb->rate == 1.0) return pb->coeff * a;
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Product;
  for (const Sequence* s : {&a, &b}) {
    const SeqNode& x = N(*s);
    if (x.kind == Kind::Product) n->children.insert(n->children.end(), x.children.begin(), x.children.end());
    else n->children.push_back(*s);
  }
  n->real = a.is_real() && b.is_real();
  n->asym = a.asymptotics() * b.asymptotics();
  return make(n);
}

Sequence reciprocal(const Sequence& a) {
  const SeqNode& x = N(a);
  if (x.kind == Kind::Reciprocal) return x.children[0];
  if (auto p = a.pure_power()) {
    if (p->is_zero()) throw Error(ErrorCode::InvalidArgument, "reciprocal of the zero sequence");
    if (x.kind == Kind::Power && is_one_power(x)) return power_node(1.0, -p->exponent, 1.0);
  }
  if (x.kind == Kind::Profile) {
    std::vector<Rational> neg;
    for (const auto& e : x.exponents) neg.push_back(-e);
    return Sequence::power_profile(std::move(neg));
  }
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Reciprocal;
  n->children = {a};
  n->real = a.is_real();
  n->asym = reciprocal(a.asymptotics());
  return make(n);
}

Sequence conj(const Sequence& a) {
  if (a.is_real()) return a;
  const SeqNode& x = N(a);
  if (x.kind == Kind::Conj) return x.children[0];
  if (x.kind == Kind::Power) return power_node(std::conj(x.c), x.k, x.rate);
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Conj;
  n->children = {a};
  n->real = false;
  n->asym = conj(a.asymptotics());
  return make(n);
}

Sequence abs2(const Sequence& a) {
  if (auto p = a.pure_power()) return power_node(std::norm(p->coeff), p->exponent * 2, p->rate * p->rate);
  if (a.is_real()) return a * a;
  auto asym = conj(a.asymptotics()) * a.asymptotics();
  return Sequence::function([a](std::size_t k) { return Complex(std::norm(a(k)), 0.0); }, asym,
                            "|" + a.describe() + "|^2", true);
}

Sequence pow(const Sequence& a, const Rational& e) {
  if (e == Rational(1)) return a;
  if (e == Rational(0)) return Sequence::constant(1.0);
  if (e == Rational(-1)) return reciprocal(a);
  if (auto p = a.pure_power(); p && p->coeff.imag() == 0.0 && p->coeff.real() > 0.0) {
    double de = to_double(e);
    return power_node(std::pow(p->coeff.real(), de), p->exponent * e, std::pow(p->rate, de));
  }
  const SeqNode& x = N(a);
  if (x.kind == Kind::Profile) {
    std::vector<Rational> ex;
    for (const auto& v : x.exponents) ex.push_back(v * e);
    return Sequence::power_profile(std::move(ex));
  }
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Pow;
  n->children = {a};
  n->k = e;
  n->real = a.is_real();
  n->asym = pow(a.asymptotics(), e);
  return make(n);
}

Sequence shifted(const Sequence& a, int offset) {
  if (offset == 0 || is_zero_seq(a)) return a;
  const SeqNode& x = N(a);
  if (x.kind == Kind::Shifted && (x.offset > 0) == (offset > 0))
    return shifted(x.children[0], x.offset + offset);
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Shifted;
  n->children = {a};
  n->offset = offset;
  n->real = a.is_real();
  n->asym = shifted(a.asymptotics(), offset);
  return make(n);
}

bool structurally_equal(const Sequence& a, const Sequence& b) {
  if (a.node_ == b.node_) return true;
  const SeqNode &x = *a.node_, &y = *b.node_;
  if (x.kind != y.kind) return false;
  if (x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i)
    if (!structurally_equal(x.children[i], y.children[i])) return false;
  switch (x.kind) {
    case Kind::Power: return x.c == y.c && x.k == y.k && x.rate == y.rate;
    case Kind::Affine: return x.c == y.c && x.c2 == y.c2;
    case Kind::Profile: return x.exponents == y.exponents;
    case Kind::Explicit: return x.head == y.head;
    case Kind::Function: return !x.label.empty() && x.label == y.label;
    case Kind::Sum: return x.weights == y.weights;
    case Kind::Pow: return x.k == y.k;
    case Kind::Shifted: return x.offset == y.offset;
    default: return true;
  }
}

// ----------------------------------------------------------- lattice weights

Sequence weight_dual(const Sequence& w) {
  const SeqNode& x = N(w);
  switch (x.kind) {
    case Kind::Reciprocal: return x.children[0];
    case Kind::Meet: return weight_join(weight_dual(x.children[0]), weight_dual(x.children[1]));
    case Kind::Join: return weight_meet(weight_dual(x.children[0]), weight_dual(x.children[1]));
    case Kind::Power:
      if (is_one_power(x)) return power_node(1.0, -x.k, 1.0);
      break;
    case Kind::Profile: return reciprocal(w);
    default: break;
  }
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Reciprocal;
  n->children = {w};
  n->real = w.is_real();
  n->asym = reciprocal(w.asymptotics());
  return make(n);
}

Sequence weight_meet(const Sequence& a, const Sequence& b) {
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Meet;
  n->children = {a, b};
  n->real = true;
  n->asym = a.asymptotics() + b.asymptotics();
  return make(n);
}

Sequence weight_join(const Sequence& a, const Sequence& b) {
  auto n = std::make_shared<SeqNode>();
  n->kind = Kind::Join;
  n->children = {a, b};
  n->real = true;
  n->asym = (a.asymptotics() * b.asymptotics()) * reciprocal(a.asymptotics() + b.asymptotics());
  return make(n);
}

// ------------------------------------------------------------------- series

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// c (n+1)^k rate^n restricted to n = period*i + residue.
struct PowerTerm {
  Complex c;
  Rational k;
  double rate;
  std::size_t period = 1;
  std::size_t residue = 0;
};

struct Expansion {
  std::vector<PowerTerm> terms;
  std::size_t valid_from = 0;
};

std::optional<Expansion> expand(const Sequence& s);

std::optional<Expansion> expand_product(const Expansion& a, const Expansion& b) {
  Expansion out;
  out.valid_from = std::max(a.valid_from, b.valid_from);
  for (const auto& x : a.terms) {
    for (const auto& y : b.terms) {
      std::size_t P = std::lcm(x.period, y.period);
      if (P > 64) return std::nullopt;
      for (std::size_t r = 0; r < P; ++r) {
        if (r % x.period != x.residue || r % y.period != y.residue) continue;
        out.terms.push_back(PowerTerm{x.c * y.c, x.k + y.k, x.rate * y.rate, P, r});
      }
    }
  }
  return out;
}

std::optional<Expansion> expand(const Sequence& s) {
  const SeqNode& x = N(s);
  if (auto p = s.pure_power()) {
    Expansion e;
    if (!p->is_zero()) e.terms.push_back(PowerTerm{p->coeff, p->exponent, p->rate});
    return e;
  }
  switch (x.kind) {
    case Kind::Affine: {
      Expansion e;
      e.terms.push_back(PowerTerm{x.c, 1, 1.0});
      if (x.c2 != x.c) e.terms.push_back(PowerTerm{x.c2 - x.c, 0, 1.0});
      return e;
    }
    case Kind::Profile: {
      Expansion e;
      for (std::size_t r = 0; r < x.exponents.size(); ++r)
        e.terms.push_back(PowerTerm{1.0, x.exponents[r], 1.0, x.exponents.size(), r});
      return e;
    }
    case Kind::Explicit: {
      auto e = expand(x.children[0]);
      if (e) e->valid_from = std::max(e->valid_from, x.head.size());
      return e;
    }
    case Kind::Sum:
    case Kind::Meet: {
      Expansion out;
      for (std::size_t i = 0; i < x.children.size(); ++i) {
        auto e = expand(x.children[i]);
        if (!e) return std::nullopt;
        Complex w = x.kind == Kind::Sum ? x.weights[i] : Complex(1.0);
        for (auto t : e->terms) {
          t.c *= w;
          out.terms.push_back(t);
        }
        out.valid_from = std::max(out.valid_from, e->valid_from);
      }
      return out;
    }
    case Kind::Product: {
      auto acc = expand(x.children[0]);
      for (std::size_t i = 1; acc && i < x.children.size(); ++i) {
        auto e = expand(x.children[i]);
        if (!e) return std::nullopt;
        acc = expand_product(*acc, *e);
      }
      return acc;
    }
    case Kind::Conj: {
      auto e = expand(x.children[0]);
      if (e)
        for (auto& t : e->terms) t.c = std::conj(t.c);
      return e;
    }
    default: return std::nullopt;
  }
}

bool term_summable(const PowerTerm& t) {
  if (t.c == Complex(0.0) || t.rate < 1.0) return true;
  if (t.rate > 1.0) return false;
  return t.k < Rational(-1);
}

// sum_{i >= i0} c (P i + r + 1)^k rate^{P i + r}, rate < 1, with a ratio-test remainder.
SeriesResult geometric_progression_sum(const PowerTerm& t, std::int64_t i0) {
  double k = to_double(t.k);
  double P = static_cast<double>(t.period);
  double acc = 0.0;
  double bound = 0.0;
  std::int64_t terms = 0;
  for (std::int64_t i = i0;; ++i) {
    double x = P * static_cast<double>(i) + static_cast<double>(t.residue) + 1.0;
    double v = std::pow(x, k) * std::pow(t.rate, x - 1.0);
    acc += v;
    ++terms;
    double q = std::pow((x + P) / x, std::max(k, 0.0)) * std::pow(t.rate, P);
    if (q < 1.0) {
      double next = std::pow(x + P, k) * std::pow(t.rate, x + P - 1.0);
      double tail = next / (1.0 - q);
      if (tail <= 1e-18 * std::abs(acc) || tail < 1e-300 || terms > 50'000'000) {
        bound = tail + static_cast<double>(terms) * kEps * std::abs(acc);
        break;
      }
    }
  }
  return SeriesResult{t.c * acc, std::abs(t.c) * bound, true, false};
}

SeriesResult term_sum(const PowerTerm& t, std::size_t start) {
  long s = static_cast<long>(start) - static_cast<long>(t.residue);
  long P = static_cast<long>(t.period);
  std::int64_t i0 = s <= 0 ? 0 : (s + P - 1) / P;
  if (t.c == Complex(0.0)) return SeriesResult{0.0, 0.0, true, false};
  if (t.rate < 1.0) return geometric_progression_sum(t, i0);
  auto r = power_progression_sum(to_double(t.k), static_cast<double>(t.period),
                                 static_cast<double>(t.residue) + 1.0, i0);
  r.value *= t.c;
  r.error_bound *= std::abs(t.c);
  return r;
}

}  // namespace

SeriesResult power_progression_sum(double a, double P, double b, std::int64_t i0) {
  if (a >= -1.0) throw Error(ErrorCode::DivergentSeries, "sum of (Pi+b)^a diverges for a >= -1");
  if (!(P > 0.0) || P * static_cast<double>(i0) + b <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "progression must stay positive");
  // Direct summation until the Euler-Maclaurin remainder is negligible.
  const double threshold = 32.0 * P * std::max(2.0, std::abs(a) + 1.0);
  double direct = 0.0;
  std::int64_t i = i0;
  std::int64_t count = 0;
  while (P * static_cast<double>(i) + b < threshold) {
    direct += std::pow(P * static_cast<double>(i) + b, a);
    ++i;
    ++count;
  }
  const double x = P * static_cast<double>(i) + b;
  auto deriv = [&](int m) {
    double coeff = 1.0;
    for (int j = 0; j < m; ++j) coeff *= (a - j);
    return std::pow(P, m) * coeff * std::pow(x, a - m);
  };
  const double g = std::pow(x, a);
  const double integral = std::pow(x, a + 1.0) / (-(a + 1.0) * P);
  const double B2 = 1.0 / 6.0, B4 = -1.0 / 30.0, B6 = 1.0 / 42.0;
  double tail = integral + 0.5 * g - (B2 / 2.0) * deriv(1) - (B4 / 24.0) * deriv(3) -
                (B6 / 720.0) * deriv(5);
  // |R| <= 2 zeta(6) / (2 pi)^6 * |g^(5)(x)|, with zeta(6) = pi^6 / 945.
  const double pi = 3.14159265358979323846;
  const double zeta6 = std::pow(pi, 6) / 945.0;
  double remainder = 2.0 * zeta6 / std::pow(2.0 * pi, 6) * std::abs(deriv(5));
  double value = direct + tail;
  double rounding = static_cast<double>(count + 8) * kEps * std::abs(value);
  return SeriesResult{value, remainder + rounding, true, false};
}

SeriesResult sum_series(const Sequence& s, std::size_t start, const SeriesOptions& options) {
  const Asymptotics& asym = s.asymptotics();
  if (!asym.known()) {
    if (options.budget == 0)
      throw Error(ErrorCode::Undecidable,
                  "series over '" + s.describe() + "' has no closed-form tail and no truncation budget");
    Complex acc = 0.0;
    for (std::size_t n = start; n < start + options.budget; ++n) acc += s(n);
    return SeriesResult{acc, std::numeric_limits<double>::infinity(), false, true};
  }
  if (!asym.summable())
    throw Error(ErrorCode::DivergentSeries, "series over '" + s.describe() + "' diverges");

  if (auto e = expand(s)) {
    bool ok = std::all_of(e->terms.begin(), e->terms.end(), term_summable);
    if (ok) {
      SeriesResult out{0.0, 0.0, true, false};
      std::size_t from = std::max(start, e->valid_from);
      for (std::size_t n = start; n < from; ++n) out.value += s(n);
      for (const auto& t : e->terms) {
        auto r = term_sum(t, from);
        out.value += r.value;
        out.error_bound += r.error_bound;
      }
      return out;
    }
  }

  // Generic path: explicit head plus the leading-term tail on each residue.
  auto partial = [&](std::size_t M) {
    Complex acc = 0.0;
    for (std::size_t n = start; n < start + M; ++n) acc += s(n);
    std::size_t from = start + M;
    std::size_t P = asym.period();
    for (std::size_t r = 0; r < P; ++r) {
      const Leading& L = asym.at(r);
      if (L.is_zero()) continue;
      acc += term_sum(PowerTerm{L.coeff, L.exponent, L.rate, P, r}, from).value;
    }
    return acc;
  };
  std::size_t M = std::max<std::size_t>(options.explicit_terms, 64);
  Complex full = partial(M);
  Complex half = partial(M / 2);
  return SeriesResult{full, std::abs(full - half), false, false};
}

Extrema abs_extrema(const Sequence& s, std::size_t samples, std::size_t from) {
  Extrema e;
  e.sup = 0.0;
  e.inf = kInf;
  for (std::size_t n = from; n < from + samples; ++n) {
    double v = std::abs(s(n));
    if (!(v <= e.sup)) {
      e.sup = v;
      e.argsup = n;
    }
    if (v < e.inf) {
      e.inf = v;
      e.arginf = n;
    }
  }
  const auto& asym = s.asymptotics();
  if (asym.known()) {
    e.symbolic = true;
    e.sup = std::max(e.sup, asym.limsup_abs());
    e.inf = std::min(e.inf, asym.liminf_abs());
  }
  return e;
}

}  // namespace pip
