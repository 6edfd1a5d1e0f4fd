#include "pip/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pip {

namespace detail {

struct OpNode {
  OpKind kind = OpKind::ScaledIdentity;
  Sequence symbol;
  std::string label;
  PipVector f, g;
  std::vector<PipVector> U, V;
  Eigen::MatrixXcd C;
  bool finite_rank_sum = false;
  std::vector<PipOperator> terms;  // Sum terms, or {outer, inner} for Composition
  SpaceIndex through;
  Complex lambda{0.0, 0.0};
  int offset = 0;

  static PipOperator wrap(std::shared_ptr<OpNode> n) { return PipOperator(std::move(n)); }
  static const OpNode& of(const PipOperator& A) { return *A.node_; }
};

}  // namespace detail

using detail::OpNode;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PipOperator make(std::shared_ptr<OpNode> n) { return OpNode::wrap(std::move(n)); }
const OpNode& N(const PipOperator& A) { return OpNode::of(A); }

[[noreturn]] void kind_error(const char* what) {
  throw Error(ErrorCode::InvalidArgument, std::string("operator form has no ") + what);
}

}  // namespace

PipOperator::PipOperator() : PipOperator(std::make_shared<OpNode>()) {}
PipOperator::PipOperator(std::shared_ptr<const detail::OpNode> node) : node_(std::move(node)) {}

PipOperator PipOperator::diagonal(Sequence symbol, std::string label) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpKind::Diagonal;
  n->symbol = std::move(symbol);
  n->label = std::move(label);
  return make(n);
}

PipOperator PipOperator::dyadic(PipVector f, PipVector g) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpKind::Dyadic;
  n->f = std::move(f);
  n->g = std::move(g);
  return make(n);
}

PipOperator PipOperator::finite_rank(std::vector<PipVector> phi, Eigen::MatrixXcd B) {
  auto op = low_rank(phi, phi, std::move(B));
  auto n = std::make_shared<OpNode>(N(op));
  n->finite_rank_sum = true;
  return make(n);
}

PipOperator PipOperator::low_rank(std::vector<PipVector> U, std::vector<PipVector> V, Eigen::MatrixXcd C) {
  if (C.rows() != static_cast<Eigen::Index>(U.size()) || C.cols() != static_cast<Eigen::Index>(V.size()))
    throw Error(ErrorCode::InvalidArgument, "coupling matrix shape does not match the vector families");
  auto n = std::make_shared<OpNode>();
  n->kind = OpKind::LowRank;
  n->U = std::move(U);
  n->V = std::move(V);
  n->C = std::move(C);
  return make(n);
}

PipOperator PipOperator::identity(Complex lambda) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpKind::ScaledIdentity;
  n->lambda = lambda;
  return make(n);
}

PipOperator PipOperator::shift(int offset) {
  if (offset != 1 && offset != -1) throw Error(ErrorCode::InvalidArgument, "shift offset must be +1 or -1");
  auto n = std::make_shared<OpNode>();
  n->kind = OpKind::Shift;
  n->offset = offset;
  return make(n);
}

PipOperator PipOperator::sum(std::vector<PipOperator> terms) {
  // Flatten, then merge every diagonal and scaled-identity term into one symbol.
  std::vector<PipOperator> flat;
  for (const auto& t : terms) {
    if (t.kind() == OpKind::Sum) flat.insert(flat.end(), N(t).terms.begin(), N(t).terms.end());
    else flat.push_back(t);
  }
  std::optional<Sequence> diag;
  std::vector<std::string> labels;
  Complex lambda = 0.0;
  std::vector<PipOperator> rest;
  for (const auto& t : flat) {
    if (t.kind() == OpKind::Diagonal) {
      diag = diag ? *diag + t.symbol() : t.symbol();
      if (!N(t).label.empty()) labels.push_back(N(t).label);
    } else if (t.kind() == OpKind::ScaledIdentity) {
      lambda += t.lambda();
    } else {
      rest.push_back(t);
    }
  }
  std::vector<PipOperator> out;
  if (diag) {
    Sequence s = lambda == Complex(0.0) ? *diag : *diag + Sequence::constant(lambda);
    std::string label;
    for (const auto& l : labels) label += (label.empty() ? "" : "+") + l;
    out.push_back(diagonal(s, label));
  } else if (lambda != Complex(0.0) || rest.empty()) {
    out.push_back(identity(lambda));
  }
  out.insert(out.end(), rest.begin(), rest.end());
  if (out.size() == 1) return out.front();
  auto n = std::make_shared<OpNode>();
  n->kind = OpKind::Sum;
  n->terms = std::move(out);
  return make(n);
}

PipOperator PipOperator::composition(PipOperator outer, PipOperator inner, SpaceIndex through) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpKind::Composition;
  n->terms = {std::move(outer), std::move(inner)};
  n->through = std::move(through);
  return make(n);
}

OpKind PipOperator::kind() const { return node_->kind; }

const Sequence& PipOperator::symbol() const {
  if (kind() != OpKind::Diagonal) kind_error("symbol");
  return node_->symbol;
}
const PipVector& PipOperator::dyad_left() const {
  if (kind() != OpKind::Dyadic) kind_error("dyadic factors");
  return node_->f;
}
const PipVector& PipOperator::dyad_right() const {
  if (kind() != OpKind::Dyadic) kind_error("dyadic factors");
  return node_->g;
}
const std::vector<PipVector>& PipOperator::left_vectors() const {
  if (kind() != OpKind::LowRank) kind_error("low-rank factors");
  return node_->U;
}
const std::vector<PipVector>& PipOperator::right_vectors() const {
  if (kind() != OpKind::LowRank) kind_error("low-rank factors");
  return node_->V;
}
const Eigen::MatrixXcd& PipOperator::coupling() const {
  if (kind() != OpKind::LowRank) kind_error("coupling matrix");
  return node_->C;
}
bool PipOperator::is_finite_rank_sum() const { return kind() == OpKind::LowRank && node_->finite_rank_sum; }
const std::vector<PipOperator>& PipOperator::terms() const {
  if (kind() != OpKind::Sum) kind_error("terms");
  return node_->terms;
}
const PipOperator& PipOperator::outer() const {
  if (kind() != OpKind::Composition) kind_error("outer factor");
  return node_->terms[0];
}
const PipOperator& PipOperator::inner() const {
  if (kind() != OpKind::Composition) kind_error("inner factor");
  return node_->terms[1];
}
const SpaceIndex& PipOperator::through() const {
  if (kind() != OpKind::Composition) kind_error("factorization space");
  return node_->through;
}
Complex PipOperator::lambda() const {
  if (kind() != OpKind::ScaledIdentity) kind_error("scalar");
  return node_->lambda;
}
int PipOperator::offset() const {
  if (kind() != OpKind::Shift) kind_error("offset");
  return node_->offset;
}

PipOperator PipOperator::operator+(const PipOperator& other) const { return sum({*this, other}); }
PipOperator PipOperator::operator-(const PipOperator& other) const { return sum({*this, other.scaled(-1.0)}); }

PipOperator PipOperator::scaled(Complex c) const {
  const OpNode& x = *node_;
  switch (x.kind) {
    case OpKind::Diagonal: return diagonal(c * x.symbol, x.label);
    case OpKind::ScaledIdentity: return identity(c * x.lambda);
    case OpKind::Dyadic: return dyadic(x.f * c, x.g);
    case OpKind::LowRank: {
      auto n = std::make_shared<OpNode>(x);
      n->C = c * x.C;
      return make(n);
    }
    case OpKind::Sum: {
      std::vector<PipOperator> t;
      for (const auto& term : x.terms) t.push_back(term.scaled(c));
      return sum(std::move(t));
    }
    case OpKind::Composition: return composition(x.terms[0].scaled(c), x.terms[1], x.through);
    case OpKind::Shift: return composition(identity(c), *this, SpaceIndex::central());
  }
  return *this;
}

std::string PipOperator::describe() const {
  const OpNode& x = *node_;
  std::ostringstream os;
  switch (x.kind) {
    case OpKind::Diagonal:
      os << "Diagonal(" << (x.label.empty() ? x.symbol.describe() : x.label) << ")";
      break;
    case OpKind::Dyadic: os << "Dyadic(f, g)"; break;
    case OpKind::LowRank:
      os << (x.finite_rank_sum ? "FiniteRankSum(rank " : "LowRank(") << x.U.size() << "x" << x.V.size() << ")";
      break;
    case OpKind::Sum:
      os << "Sum[";
      for (std::size_t i = 0; i < x.terms.size(); ++i) os << (i ? " + " : "") << x.terms[i].describe();
      os << "]";
      break;
    case OpKind::Composition:
      os << x.terms[0].describe() << " o(" << x.through.label() << ") " << x.terms[1].describe();
      break;
    case OpKind::ScaledIdentity: os << "ScaledIdentity(" << x.lambda.real() << (x.lambda.imag() < 0 ? "" : "+") << x.lambda.imag() << "i)"; break;
    case OpKind::Shift: os << "Shift(" << (x.offset > 0 ? "+1" : "-1") << ")"; break;
  }
  return os.str();
}

// ----------------------------------------------------------- structural eq

bool structurally_equal(const PipVector& a, const PipVector& b) {
  if (a.head().size() != b.head().size()) return false;
  for (std::size_t i = 0; i < a.head().size(); ++i)
    if (a.head()[i].index != b.head()[i].index || a.head()[i].value != b.head()[i].value) return false;
  if (a.tail().has_value() != b.tail().has_value()) return false;
  if (!a.tail()) return true;
  return a.tail()->start == b.tail()->start && structurally_equal(a.tail()->values, b.tail()->values);
}

bool structurally_equal(const PipOperator& a, const PipOperator& b) {
  const OpNode &x = N(a), &y = N(b);
  if (&x == &y) return true;
  if (x.kind != y.kind) return false;
  auto same_list = [](const std::vector<PipVector>& l, const std::vector<PipVector>& r) {
    if (l.size() != r.size()) return false;
    for (std::size_t i = 0; i < l.size(); ++i)
      if (!structurally_equal(l[i], r[i])) return false;
    return true;
  };
  switch (x.kind) {
    case OpKind::Diagonal: return structurally_equal(x.symbol, y.symbol);
    case OpKind::Dyadic: return structurally_equal(x.f, y.f) && structurally_equal(x.g, y.g);
    case OpKind::LowRank:
      return same_list(x.U, y.U) && same_list(x.V, y.V) && x.C.rows() == y.C.rows() && x.C.cols() == y.C.cols() &&
             x.C == y.C;
    case OpKind::Sum:
    case OpKind::Composition:
      if (x.terms.size() != y.terms.size()) return false;
      for (std::size_t i = 0; i < x.terms.size(); ++i)
        if (!structurally_equal(x.terms[i], y.terms[i])) return false;
      return x.kind == OpKind::Sum || same_index(x.through, y.through);
    case OpKind::ScaledIdentity: return x.lambda == y.lambda;
    case OpKind::Shift: return x.offset == y.offset;
  }
  return false;
}

std::string_view witness_name(WitnessKind w) {
  switch (w) {
    case WitnessKind::Symbolic: return "symbolic";
    case WitnessKind::Sampled: return "sampled";
    case WitnessKind::Heuristic: return "heuristic";
    case WitnessKind::Truncated: return "truncated";
  }
  return "?";
}

// -------------------------------------------------------------- certificates

namespace {

struct Sup {
  double value;
  WitnessKind witness;
};

Sup sup_of(const Sequence& s, const CertOptions& o, std::size_t from = 0) {
  if (s.asymptotics().known()) return {abs_extrema(s, o.samples, from).sup, WitnessKind::Symbolic};
  if (o.budget == 0)
    throw Error(ErrorCode::Undecidable,
                "sup of '" + s.describe() + "' has no closed-form asymptotics and no sample budget");
  return {abs_extrema(s, o.budget, from).sup, o.monotone_tail ? WitnessKind::Sampled : WitnessKind::Heuristic};
}

WitnessKind weaker(WitnessKind a, WitnessKind b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

Certificate invalid(const SpaceIndex& q, const SpaceIndex& p, std::string why) {
  Certificate c;
  c.q = q;
  c.p = p;
  c.valid = false;
  c.bound = kInf;
  c.formula = std::move(why);
  return c;
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (G + G.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd weighted_gram(const std::vector<PipVector>& vs, const SpaceIndex& r, const SeriesOptions& so) {
  const auto n = static_cast<Eigen::Index>(vs.size());
  Eigen::MatrixXcd G(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i; k < n; ++k) {
      G(i, k) = partial_inner_product(vs[i], vs[k].multiplied(r.weight()), so).value;
      G(k, i) = std::conj(G(i, k));
    }
  return G;
}

}  // namespace

Certificate representative_exists(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p,
                                  const CertOptions& options) {
  if (!q.is_regular() || !p.is_regular())
    throw Error(ErrorCode::InvalidArgument, "representatives are certified between concrete spaces only");
  const OpNode& x = N(A);
  Certificate c;
  c.q = q;
  c.p = p;
  SeriesOptions so;
  so.budget = options.budget;
  switch (x.kind) {
    case OpKind::Diagonal: {
      Sequence ratio = abs2(x.symbol) * p.weight() * weight_dual(q.weight());
      auto s = sup_of(ratio, options);
      c.valid = std::isfinite(s.value);
      c.bound = c.valid ? std::sqrt(s.value) : kInf;
      c.witness = s.witness;
      c.formula = "sup_n |a_n|^2 w_p(n)/w_q(n)";
      break;
    }
    case OpKind::ScaledIdentity: {
      if (x.lambda == Complex(0.0)) {
        c.valid = true;
        c.bound = 0.0;
        c.formula = "zero operator";
        break;
      }
      auto e = embedding(q, p, options.samples);
      c.valid = e.exists;
      c.bound = e.exists ? std::abs(x.lambda) * e.norm : kInf;
      c.witness = e.symbolic ? WitnessKind::Symbolic : WitnessKind::Heuristic;
      c.formula = "|lambda| sqrt(sup w_p/w_q), needs q <= p";
      break;
    }
    case OpKind::Shift: {
      Sequence ratio = x.offset > 0 ? shifted(p.weight(), -1) * weight_dual(q.weight())
                                    : shifted(p.weight(), 1) * weight_dual(q.weight());
      auto s = sup_of(ratio, options, x.offset > 0 ? 0 : 1);
      c.valid = std::isfinite(s.value);
      c.bound = c.valid ? std::sqrt(s.value) : kInf;
      c.witness = s.witness;
      c.formula = x.offset > 0 ? "sup_n w_p(n+1)/w_q(n)" : "sup_{n>=1} w_p(n-1)/w_q(n)";
      break;
    }
    case OpKind::Dyadic: {
      auto mg = membership(x.g, dual_index(q), so);
      auto mf = membership(x.f, p, so);
      c.valid = mg.in && mf.in;
      c.bound = c.valid ? mg.norm * mf.norm : kInf;
      c.witness = (mg.certified && mf.certified) ? WitnessKind::Symbolic : WitnessKind::Heuristic;
      c.formula = "||g||_{ov q} ||f||_p";
      break;
    }
    case OpKind::LowRank: {
      bool ok = true;
      bool certified = true;
      for (const auto& u : x.U) {
        auto m = membership(u, p, so);
        ok &= m.in;
        certified &= m.certified;
      }
      auto dq = dual_index(q);
      for (const auto& v : x.V) {
        auto m = membership(v, dq, so);
        ok &= m.in;
        certified &= m.certified;
      }
      c.valid = ok;
      c.witness = certified ? WitnessKind::Symbolic : WitnessKind::Heuristic;
      c.formula = "|| G_p^{1/2} C G_{ov q}^{1/2} ||_2";
      if (ok) {
        Eigen::MatrixXcd M = psd_sqrt(weighted_gram(x.U, p, so)) * x.C * psd_sqrt(weighted_gram(x.V, dq, so));
        c.bound = M.size() == 0 ? 0.0 : Eigen::JacobiSVD<Eigen::MatrixXcd>(M).singularValues()(0);
      } else {
        c.bound = kInf;
      }
      break;
    }
    case OpKind::Sum: {
      c.valid = true;
      c.bound = 0.0;
      c.witness = WitnessKind::Symbolic;
      c.formula = "sum of term bounds";
      for (const auto& t : x.terms) {
        auto ct = representative_exists(t, q, p, options);
        if (!ct.valid) return invalid(q, p, "term " + t.describe() + " has no representative");
        c.bound += ct.bound;
        c.witness = weaker(c.witness, ct.witness);
      }
      break;
    }
    case OpKind::Composition: {
      auto ci = representative_exists(x.terms[1], q, x.through, options);
      if (!ci.valid) return invalid(q, p, "inner factor not defined from " + q.label() + " into " + x.through.label());
      auto co = representative_exists(x.terms[0], x.through, p, options);
      if (!co.valid) return invalid(q, p, "outer factor not defined from " + x.through.label() + " into " + p.label());
      c.valid = true;
      c.bound = ci.bound * co.bound;
      c.witness = weaker(ci.witness, co.witness);
      c.formula = "product through " + x.through.label();
      break;
    }
  }
  if (!c.valid) c.bound = kInf;
  return c;
}

// ------------------------------------------------------------------ adjoint

PipOperator adjoint(const PipOperator& A) {
  const OpNode& x = N(A);
  switch (x.kind) {
    case OpKind::Diagonal: return PipOperator::diagonal(conj(x.symbol), x.label);
    case OpKind::Dyadic: return PipOperator::dyadic(x.g, x.f);
    case OpKind::LowRank: {
      auto out = PipOperator::low_rank(x.V, x.U, x.C.adjoint());
      if (x.finite_rank_sum) return PipOperator::finite_rank(x.U, x.C.adjoint());
      return out;
    }
    case OpKind::Sum: {
      std::vector<PipOperator> t;
      for (const auto& term : x.terms) t.push_back(adjoint(term));
      return PipOperator::sum(std::move(t));
    }
    case OpKind::Composition:
      return PipOperator::composition(adjoint(x.terms[1]), adjoint(x.terms[0]), dual_index(x.through));
    case OpKind::ScaledIdentity: return PipOperator::identity(std::conj(x.lambda));
    case OpKind::Shift: return PipOperator::shift(-x.offset);
  }
  return A;
}

// ------------------------------------------------------------------- action

PipVector act(const PipOperator& A, const PipVector& f) {
  const OpNode& x = N(A);
  switch (x.kind) {
    case OpKind::Diagonal: return f.multiplied(x.symbol);
    case OpKind::ScaledIdentity: return f * x.lambda;
    case OpKind::Shift: return f.shifted(x.offset);
    case OpKind::Dyadic: return x.f * pairing(x.g, f);
    case OpKind::LowRank: {
      Eigen::VectorXcd y(static_cast<Eigen::Index>(x.V.size()));
      for (std::size_t j = 0; j < x.V.size(); ++j) y(static_cast<Eigen::Index>(j)) = pairing(x.V[j], f);
      Eigen::VectorXcd c = x.C * y;
      PipVector out;
      for (std::size_t i = 0; i < x.U.size(); ++i)
        if (c(static_cast<Eigen::Index>(i)) != Complex(0.0)) out = out + x.U[i] * c(static_cast<Eigen::Index>(i));
      return out;
    }
    case OpKind::Sum: {
      PipVector out;
      for (const auto& t : x.terms) out = out + act(t, f);
      return out;
    }
    case OpKind::Composition: return act(x.terms[0], act(x.terms[1], f));
  }
  return f;
}

PipVector apply(const PipOperator& A, const PipVector& f, const SpaceIndex& q, const SpaceIndex& p,
                const CertOptions& options) {
  auto c = representative_exists(A, q, p, options);
  if (!c.valid)
    throw Error(ErrorCode::NoRepresentative, A.describe() + " has no representative " + q.label() + " -> " + p.label() +
                                                 " (" + c.formula + ")");
  SeriesOptions so;
  so.budget = options.budget;
  if (!membership(f, q, so).in) throw Error(ErrorCode::NotInDomain, "vector is not in " + q.label());
  return act(A, f);
}

// ---------------------------------------------------------------- compose

PipOperator compose(const PipOperator& B, const PipOperator& A, const Lattice& lattice, const CertOptions& options) {
  if (A.kind() == OpKind::Diagonal && B.kind() == OpKind::Diagonal)
    return PipOperator::diagonal(B.symbol() * A.symbol());
  if (B.kind() == OpKind::ScaledIdentity) return A.scaled(B.lambda());
  if (A.kind() == OpKind::ScaledIdentity) return B.scaled(A.lambda());

  auto spaces = lattice.closure(1);
  auto valid_cert = [&](const PipOperator& X, const SpaceIndex& from, const SpaceIndex& to) -> std::optional<double> {
    try {
      auto c = representative_exists(X, from, to, options);
      if (c.valid) return c.bound;
    } catch (const Error&) {
    }
    return std::nullopt;
  };
  struct Candidate {
    std::size_t index;
    double cost;
  };
  std::vector<Candidate> found;
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    const auto& r = spaces[i];
    double best_a = kInf, best_b = kInf;
    for (const auto& q : spaces)
      if (auto b = valid_cert(A, q, r)) best_a = std::min(best_a, *b);
    if (!std::isfinite(best_a)) continue;
    for (const auto& p : spaces)
      if (auto b = valid_cert(B, r, p)) best_b = std::min(best_b, *b);
    if (!std::isfinite(best_b)) continue;
    found.push_back({i, best_a * best_b});
  }
  if (found.empty())
    throw Error(ErrorCode::NoFactorization,
                "no space of the lattice closure is both in i(" + A.describe() + ") and d(" + B.describe() + ")");
  // Prefer a minimal r in the inclusion order; ties by the smallest bound product.
  auto below = [&](const Candidate& c) {
    std::size_t k = 0;
    for (const auto& o : found)
      if (o.index != c.index && compare(spaces[o.index], spaces[c.index]) == Order::Less) ++k;
    return k;
  };
  auto best = std::min_element(found.begin(), found.end(), [&](const Candidate& l, const Candidate& r) {
    auto bl = below(l), br = below(r);
    if (bl != br) return bl < br;
    return l.cost < r.cost;
  });
  return PipOperator::composition(B, A, spaces[best->index]);
}

// ------------------------------------------------------------- truncations

std::size_t outreach(const PipOperator& A) {
  const OpNode& x = N(A);
  switch (x.kind) {
    case OpKind::Shift: return x.offset > 0 ? 1 : 0;
    case OpKind::Sum: {
      std::size_t r = 0;
      for (const auto& t : x.terms) r = std::max(r, outreach(t));
      return r;
    }
    case OpKind::Composition: return outreach(x.terms[0]) + outreach(x.terms[1]);
    default: return 0;
  }
}

std::size_t inreach(const PipOperator& A) {
  const OpNode& x = N(A);
  switch (x.kind) {
    case OpKind::Shift: return x.offset < 0 ? 1 : 0;
    case OpKind::Sum: {
      std::size_t r = 0;
      for (const auto& t : x.terms) r = std::max(r, inreach(t));
      return r;
    }
    case OpKind::Composition: return inreach(x.terms[0]) + inreach(x.terms[1]);
    default: return 0;
  }
}

Eigen::MatrixXcd dense_block(const PipOperator& A, std::size_t rows, std::size_t cols) {
  const auto R = static_cast<Eigen::Index>(rows), Cc = static_cast<Eigen::Index>(cols);
  const OpNode& x = N(A);
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(R, Cc);
  switch (x.kind) {
    case OpKind::Diagonal:
      for (Eigen::Index j = 0; j < std::min(R, Cc); ++j) M(j, j) = x.symbol(static_cast<std::size_t>(j));
      return M;
    case OpKind::ScaledIdentity:
      for (Eigen::Index j = 0; j < std::min(R, Cc); ++j) M(j, j) = x.lambda;
      return M;
    case OpKind::Shift:
      for (Eigen::Index j = 0; j < Cc; ++j) {
        Eigen::Index i = j + x.offset;
        if (i >= 0 && i < R) M(i, j) = 1.0;
      }
      return M;
    case OpKind::Dyadic: return x.f.dense(rows) * x.g.dense(cols).adjoint();
    case OpKind::LowRank: {
      Eigen::MatrixXcd Ud(R, static_cast<Eigen::Index>(x.U.size()));
      Eigen::MatrixXcd Vd(Cc, static_cast<Eigen::Index>(x.V.size()));
      for (std::size_t i = 0; i < x.U.size(); ++i) Ud.col(static_cast<Eigen::Index>(i)) = x.U[i].dense(rows);
      for (std::size_t j = 0; j < x.V.size(); ++j) Vd.col(static_cast<Eigen::Index>(j)) = x.V[j].dense(cols);
      return Ud * x.C * Vd.adjoint();
    }
    case OpKind::Sum:
      for (const auto& t : x.terms) M += dense_block(t, rows, cols);
      return M;
    case OpKind::Composition:
      for (Eigen::Index j = 0; j < Cc; ++j) M.col(j) = act(A, PipVector::basis(static_cast<std::size_t>(j))).dense(rows);
      return M;
  }
  return M;
}

Eigen::MatrixXcd weighted_section(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, std::size_t rows,
                                  std::size_t cols) {
  Eigen::MatrixXcd M = dense_block(A, rows, cols);
  for (Eigen::Index i = 0; i < M.rows(); ++i) M.row(i) *= std::sqrt(p.weight()(static_cast<std::size_t>(i)).real());
  for (Eigen::Index j = 0; j < M.cols(); ++j) M.col(j) /= std::sqrt(q.weight()(static_cast<std::size_t>(j)).real());
  return M;
}

double truncated_norm(const Eigen::VectorXcd& v, const SpaceIndex& r) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::norm(v(i)) * r.weight()(static_cast<std::size_t>(i)).real();
  return std::sqrt(acc);
}

// ---------------------------------------------------------------- inversion

namespace {

// y = (n+1)^s with y in V_p and A^{-1} y outside V_q, for pure-power data:
// need 2s + kp < -1 <= 2s + kx where kx is the exponent of |a|^{-2} w_q.
std::optional<PipVector> power_witness(const SpaceIndex& p, const Sequence& target_weight) {
  auto wp = p.weight().asymptotics();
  auto wx = target_weight.asymptotics();
  if (!wp.known() || !wx.known() || wp.period() != 1 || wx.period() != 1) return std::nullopt;
  if (wp.at(0).rate != 1.0 || wx.at(0).rate != 1.0) return std::nullopt;
  Rational kp = wp.at(0).exponent, kx = wx.at(0).exponent;
  if (!(kx > kp)) return std::nullopt;
  Rational upper = (Rational(-1) - kp) / Rational(2);  // s < upper
  Rational lower = (Rational(-1) - kx) / Rational(2);  // s >= lower
  // Largest half-integer strictly below upper, then quarters, else the boundary exponent.
  Rational s = lower;
  for (std::int64_t den : {2, 4, 8}) {
    Rational scaled = upper * Rational(den);
    std::int64_t k = scaled.numerator() / scaled.denominator();
    while (Rational(k) >= scaled) k -= 1;
    if (Rational(k, den) >= lower) {
      s = Rational(k, den);
      break;
    }
  }
  return PipVector::power_tail(1.0, s);
}

// A finite combination of e_0..e_r orthogonal to every v in V.
PipVector orthogonal_witness(const std::vector<PipVector>& V) {
  const auto r = static_cast<Eigen::Index>(V.size());
  Eigen::MatrixXcd M(r, r + 1);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index k = 0; k <= r; ++k) M(j, k) = std::conj(V[static_cast<std::size_t>(j)].coefficient(static_cast<std::size_t>(k)));
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  Eigen::MatrixXcd ker = lu.kernel();
  Eigen::VectorXcd h = ker.col(0);
  h /= h.norm();
  return PipVector::from_dense(h);
}

Inverse invert_diagonal(const Sequence& a, const SpaceIndex& q, const SpaceIndex& p, const CertOptions& options) {
  std::size_t horizon = a.asymptotics().known() ? options.samples : std::max(options.budget, std::size_t{1});
  for (std::size_t n = 0; n < horizon; ++n) {
    if (std::abs(a(n)) == 0.0)
      throw InversionError(ErrorCode::NotInjective, "symbol vanishes at n = " + std::to_string(n), PipVector::basis(n));
  }
  Sequence ratio = abs2(a) * p.weight() * weight_dual(q.weight());
  auto sup = sup_of(ratio, options);
  if (!std::isfinite(sup.value))
    throw InversionError(ErrorCode::NotBounded, "sup |a_n|^2 w_p/w_q is infinite: no representative " + q.label() +
                                                    " -> " + p.label());
  auto ex = abs_extrema(ratio, horizon);
  if (!(ex.inf > 0.0)) {
    Sequence target = weight_dual(abs2(a)) * q.weight();
    throw InversionError(ErrorCode::NotSurjective,
                         "inf |a_n|^2 w_p/w_q = 0: range is not closed in " + p.label(), power_witness(p, target));
  }
  Inverse inv{PipOperator::diagonal(reciprocal(a)), {}};
  inv.certificate = representative_exists(inv.op, p, q, options);
  return inv;
}

}  // namespace

Inverse invert(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, const CertOptions& options) {
  const OpNode& x = N(A);
  switch (x.kind) {
    case OpKind::Diagonal: return invert_diagonal(x.symbol, q, p, options);
    case OpKind::ScaledIdentity: {
      if (x.lambda == Complex(0.0))
        throw InversionError(ErrorCode::NotInjective, "zero operator", PipVector::basis(0));
      switch (compare(q, p)) {
        case Order::Equal: {
          Inverse inv{PipOperator::identity(1.0 / x.lambda), {}};
          inv.certificate = representative_exists(inv.op, p, q, options);
          return inv;
        }
        case Order::Less:
          throw InversionError(ErrorCode::NotSurjective, q.label() + " is a proper subspace of " + p.label(),
                               power_witness(p, q.weight()));
        default:
          throw InversionError(ErrorCode::NotBounded, "no embedding " + q.label() + " -> " + p.label());
      }
    }
    case OpKind::Shift: {
      auto c = representative_exists(A, q, p, options);
      if (!c.valid) throw InversionError(ErrorCode::NotBounded, "shift has no representative " + q.label() + " -> " + p.label());
      if (x.offset > 0)
        throw InversionError(ErrorCode::NotSurjective, "e_0 is not in the range of the forward shift", PipVector::basis(0));
      throw InversionError(ErrorCode::NotInjective, "the backward shift annihilates e_0", PipVector::basis(0));
    }
    case OpKind::Dyadic: throw InversionError(ErrorCode::NotInjective, "finite rank operator", orthogonal_witness({x.g}));
    case OpKind::LowRank: throw InversionError(ErrorCode::NotInjective, "finite rank operator", orthogonal_witness(x.V));
    case OpKind::Composition:
      throw Error(ErrorCode::NotClosedForm, "inversion of compositions is not supported");
    case OpKind::Sum: break;
  }

  // Sum: diagonal part plus finite-rank corrections, inverted by Woodbury.
  std::optional<Sequence> d;
  std::vector<PipVector> U, V;
  std::vector<Eigen::MatrixXcd> blocks;
  for (const auto& t : x.terms) {
    const OpNode& y = N(t);
    switch (y.kind) {
      case OpKind::Diagonal: d = d ? *d + y.symbol : y.symbol; break;
      case OpKind::ScaledIdentity:
        d = d ? *d + Sequence::constant(y.lambda) : Sequence::constant(y.lambda);
        break;
      case OpKind::Dyadic:
        U.push_back(y.f);
        V.push_back(y.g);
        blocks.push_back(Eigen::MatrixXcd::Ones(1, 1));
        break;
      case OpKind::LowRank:
        U.insert(U.end(), y.U.begin(), y.U.end());
        V.insert(V.end(), y.V.begin(), y.V.end());
        blocks.push_back(y.C);
        break;
      default: throw Error(ErrorCode::NotClosedForm, "no inversion rule for a sum containing " + t.describe());
    }
  }
  if (!d) throw InversionError(ErrorCode::NotInjective, "finite rank operator", orthogonal_witness(V));
  Inverse dinv;
  try {
    dinv = invert_diagonal(*d, q, p, options);
  } catch (const InversionError& e) {
    throw Error(ErrorCode::NotClosedForm,
                std::string("diagonal part is not invertible, finite-rank repair unsupported: ") + e.what());
  }
  const auto r = static_cast<Eigen::Index>(U.size());
  Eigen::Index cr = 0, cc = 0;
  for (const auto& b : blocks) {
    cr += b.rows();
    cc += b.cols();
  }
  if (cr != r || cc != static_cast<Eigen::Index>(V.size()))
    throw Error(ErrorCode::InvalidArgument, "inconsistent low-rank blocks");
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(r, static_cast<Eigen::Index>(V.size()));
  Eigen::Index ro = 0, co = 0;
  for (const auto& b : blocks) {
    C.block(ro, co, b.rows(), b.cols()) = b;
    ro += b.rows();
    co += b.cols();
  }
  const Sequence dinv_symbol = dinv.op.symbol();
  std::vector<PipVector> DU, DV;
  for (const auto& u : U) DU.push_back(u.multiplied(dinv_symbol));
  for (const auto& v : V) DV.push_back(v.multiplied(conj(dinv_symbol)));
  Eigen::MatrixXcd G(static_cast<Eigen::Index>(V.size()), r);
  for (std::size_t j = 0; j < V.size(); ++j)
    for (std::size_t k = 0; k < U.size(); ++k)
      G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = pairing(V[j], DU[k]);
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Identity(r, r) + C * G;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(K);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    Eigen::VectorXcd c = lu.kernel().col(0);
    PipVector w;
    for (Eigen::Index k = 0; k < r; ++k) w = w + DU[static_cast<std::size_t>(k)] * c(k);
    throw InversionError(ErrorCode::NotInjective, "I + C <V|D^-1 U> is singular", w);
  }
  Eigen::MatrixXcd Cn = -lu.solve(C);
  Inverse inv;
  inv.op = PipOperator::sum({dinv.op, PipOperator::low_rank(DU, DV, Cn)});
  inv.certificate = representative_exists(inv.op, p, q, options);
  if (!inv.certificate.valid)
    throw InversionError(ErrorCode::NotBounded, "inverse correction is not bounded " + p.label() + " -> " + q.label());
  return inv;
}

UniquenessReport inverse_uniqueness_check(const PipOperator& A, const Certificate& first, const Certificate& second,
                                          std::size_t probes, double tol) {
  auto i1 = invert(A, first.q, first.p);
  auto i2 = invert(A, second.q, second.p);
  UniquenessReport rep;
  rep.domain = meet(first.p, second.p);
  rep.range = meet(first.q, second.q);
  rep.probes = probes;
  const std::size_t N = std::max<std::size_t>(512, 4 * probes);
  for (std::size_t k = 0; k < probes; ++k) {
    auto e = PipVector::basis(k);
    Eigen::VectorXcd diff = act(i1.op, e).dense(N) - act(i2.op, e).dense(N);
    double scale = std::sqrt(rep.domain.weight()(k).real());
    rep.max_disagreement = std::max(rep.max_disagreement, truncated_norm(diff, rep.range) / scale);
  }
  rep.agree = rep.max_disagreement <= tol;
  return rep;
}

}  // namespace pip
