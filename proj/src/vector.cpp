#include "pip/vector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pip/errors.hpp"

namespace pip {

PipVector::PipVector(std::vector<Entry> head, std::optional<Tail> tail) : tail_(std::move(tail)) {
  std::map<std::size_t, Complex> merged;
  for (const auto& e : head) merged[e.index] += e.value;
  for (const auto& [n, v] : merged) {
    if (v == Complex(0.0)) continue;
    if (tail_ && n >= tail_->start)
      throw Error(ErrorCode::InvalidArgument, "head index " + std::to_string(n) + " overlaps the tail");
    head_.push_back(Entry{n, v});
  }
}

PipVector PipVector::basis(std::size_t n, Complex c) { return PipVector({Entry{n, c}}); }

PipVector PipVector::from_dense(const Eigen::VectorXcd& dense) {
  std::vector<Entry> head;
  for (Eigen::Index i = 0; i < dense.size(); ++i) head.push_back(Entry{static_cast<std::size_t>(i), dense(i)});
  return PipVector(std::move(head));
}

PipVector PipVector::power_tail(Complex c, Rational s, std::size_t start, std::vector<Entry> head) {
  return PipVector(std::move(head), Tail{start, Sequence::power(c, s)});
}

PipVector PipVector::geometric_tail(Complex c, double rho, std::size_t start, std::vector<Entry> head) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidArgument, "geometric tail needs 0 < rho < 1");
  return PipVector(std::move(head), Tail{start, Sequence::geometric(c, rho)});
}

PipVector PipVector::with_tail(Sequence values, std::size_t start, std::vector<Entry> head) {
  return PipVector(std::move(head), Tail{start, std::move(values)});
}

Complex PipVector::coefficient(std::size_t n) const {
  if (tail_ && n >= tail_->start) return tail_->values(n);
  auto it = std::lower_bound(head_.begin(), head_.end(), n,
                             [](const Entry& e, std::size_t k) { return e.index < k; });
  if (it != head_.end() && it->index == n) return it->value;
  return 0.0;
}

std::size_t PipVector::head_end() const {
  if (tail_) return tail_->start;
  return head_.empty() ? 0 : head_.back().index + 1;
}

Eigen::VectorXcd PipVector::dense(std::size_t N) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(N));
  if (tail_) {
    for (std::size_t n = tail_->start; n < N; ++n) v(static_cast<Eigen::Index>(n)) = tail_->values(n);
  }
  for (const auto& e : head_)
    if (e.index < N) v(static_cast<Eigen::Index>(e.index)) = e.value;
  return v;
}

PipVector PipVector::operator+(const PipVector& other) const {
  if (!tail_ && !other.tail_) {
    std::vector<Entry> head = head_;
    head.insert(head.end(), other.head_.begin(), other.head_.end());
    return PipVector(std::move(head));
  }
  // The new tail starts after every head entry and after both tail starts.
  std::size_t T = 0;
  for (const PipVector* v : {this, &other}) {
    if (v->tail_) T = std::max(T, v->tail_->start);
    if (!v->head_.empty()) T = std::max(T, v->head_.back().index + 1);
  }
  Sequence values;
  for (const PipVector* v : {this, &other})
    if (v->tail_) values = values + v->tail_->values;
  std::vector<Entry> head;
  std::size_t lo = T;
  for (const PipVector* v : {this, &other})
    if (v->tail_) lo = std::min(lo, v->tail_->start);
  for (std::size_t n = lo; n < T; ++n) head.push_back(Entry{n, coefficient(n) + other.coefficient(n)});
  for (const PipVector* v : {this, &other})
    for (const auto& e : v->head_)
      if (e.index < lo) head.push_back(e);
  return PipVector(std::move(head), Tail{T, values});
}

PipVector PipVector::operator-(const PipVector& other) const { return *this + (-other); }

PipVector PipVector::operator*(Complex c) const {
  if (c == Complex(0.0)) return PipVector();
  std::vector<Entry> head = head_;
  for (auto& e : head) e.value *= c;
  std::optional<Tail> tail;
  if (tail_) tail = Tail{tail_->start, c * tail_->values};
  return PipVector(std::move(head), std::move(tail));
}

PipVector PipVector::multiplied(const Sequence& symbol) const {
  std::vector<Entry> head = head_;
  for (auto& e : head) e.value *= symbol(e.index);
  std::optional<Tail> tail;
  if (tail_) tail = Tail{tail_->start, symbol * tail_->values};
  return PipVector(std::move(head), std::move(tail));
}

PipVector PipVector::shifted(int offset) const {
  if (offset == 0) return *this;
  std::vector<Entry> head;
  for (const auto& e : head_) {
    long m = static_cast<long>(e.index) + offset;
    if (m >= 0) head.push_back(Entry{static_cast<std::size_t>(m), e.value});
  }
  std::optional<Tail> tail;
  if (tail_) {
    long start = static_cast<long>(tail_->start) + offset;
    tail = Tail{static_cast<std::size_t>(std::max(start, 0L)), pip::shifted(tail_->values, offset)};
  }
  return PipVector(std::move(head), std::move(tail));
}

// ---------------------------------------------------------------- membership

MembershipResult membership(const PipVector& f, const SpaceIndex& r, const SeriesOptions& options) {
  MembershipResult out;
  const double inf = std::numeric_limits<double>::infinity();
  if (!r.is_regular()) {
    out.norm = std::numeric_limits<double>::quiet_NaN();
    out.certified = true;
    if (f.finitely_supported()) {
      out.in = true;
      return out;
    }
    const auto& asym = f.tail()->values.asymptotics();
    if (!asym.known())
      throw Error(ErrorCode::Undecidable, "membership in " + r.label() + " needs a tail with known asymptotics");
    bool all_geometric = true, all_polynomial = true;
    for (const auto& t : asym.terms()) {
      if (t.is_zero()) continue;
      all_geometric &= t.rate < 1.0;
      all_polynomial &= t.rate <= 1.0;
    }
    out.in = r.kind() == SpaceKind::Intersection ? all_geometric : all_polynomial;
    return out;
  }
  const Sequence& w = r.weight();
  double head_sum = 0.0;
  for (const auto& e : f.head()) head_sum += std::norm(e.value) * w(e.index).real();
  out.certified = true;
  out.error_bound = 0.0;
  double total = head_sum;
  if (f.tail()) {
    Sequence terms = abs2(f.tail()->values) * w;
    try {
      auto s = sum_series(terms, f.tail()->start, options);
      total += s.value.real();
      out.certified = s.certified;
      out.error_bound = s.error_bound;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DivergentSeries) throw;
      out.in = false;
      out.norm = inf;
      return out;
    }
  }
  out.in = true;
  out.norm = std::sqrt(std::max(total, 0.0));
  // Convert the squared-norm error into a norm error.
  if (out.norm > 0.0) out.error_bound = out.error_bound / (2.0 * out.norm);
  return out;
}

double norm(const PipVector& f, const SpaceIndex& r, const SeriesOptions& options) {
  return membership(f, r, options).norm;
}

PairingResult partial_inner_product(const PipVector& f, const PipVector& g, const SeriesOptions& options) {
  PairingResult out{0.0, 0.0, true};
  if (f.finitely_supported() || g.finitely_supported()) {
    const PipVector& finite = f.finitely_supported() ? f : g;
    for (const auto& e : finite.head()) {
      Complex fv = f.coefficient(e.index), gv = g.coefficient(e.index);
      out.value += std::conj(fv) * gv;
    }
    return out;
  }
  std::size_t T = std::max(f.head_end(), g.head_end());
  for (std::size_t n = 0; n < T; ++n) out.value += std::conj(f.coefficient(n)) * g.coefficient(n);
  Sequence product = conj(f.tail()->values) * g.tail()->values;
  const auto& asym = product.asymptotics();
  if (asym.known() && !asym.summable())
    throw Error(ErrorCode::Incompatible,
                "sum |f_n g_n| diverges: no assaying pair holds both vectors (tail " + product.describe() + ")");
  auto s = sum_series(product, T, options);
  out.value += s.value;
  out.error_bound = s.error_bound;
  out.certified = s.certified;
  return out;
}

Complex pairing(const PipVector& f, const PipVector& g) { return partial_inner_product(f, g).value; }

Complex inner_product(const PipVector& f, const PipVector& g, const SpaceIndex& r) {
  return partial_inner_product(f, g.multiplied(r.weight())).value;
}

}  // namespace pip
