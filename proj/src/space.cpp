#include "pip/space.hpp"

#include <cmath>
#include <limits>

#include "pip/errors.hpp"

namespace pip {

namespace {

std::string power_label(const Rational& k) { return "s_" + to_string(k); }

}  // namespace

SpaceIndex::SpaceIndex() : weight_(Sequence::constant(1.0)), label_("s_0") {}

SpaceIndex SpaceIndex::central() { return SpaceIndex(); }

SpaceIndex SpaceIndex::power(Rational exponent, std::string label) {
  SpaceIndex r;
  r.weight_ = Sequence::power(1.0, exponent);
  r.label_ = label.empty() ? power_label(exponent) : std::move(label);
  return r;
}

SpaceIndex SpaceIndex::weighted(Sequence weight, std::string label) {
  if (!weight.is_real())
    throw Error(ErrorCode::InvalidArgument, "weight '" + label + "' must be a real sequence");
  for (std::size_t n = 0; n < 64; ++n) {
    if (!(weight(n).real() > 0.0))
      throw Error(ErrorCode::InvalidArgument,
                  "weight '" + label + "' is not positive at n = " + std::to_string(n));
  }
  SpaceIndex r;
  r.weight_ = std::move(weight);
  r.label_ = std::move(label);
  return r;
}

SpaceIndex SpaceIndex::intersection() {
  SpaceIndex r;
  r.kind_ = SpaceKind::Intersection;
  r.label_ = "V#";
  return r;
}

SpaceIndex SpaceIndex::union_all() {
  SpaceIndex r;
  r.kind_ = SpaceKind::Union;
  r.label_ = "V";
  return r;
}

const Sequence& SpaceIndex::weight() const {
  if (!is_regular())
    throw Error(ErrorCode::InvalidArgument, label_ + " is a lattice marker, not a concrete space");
  return weight_;
}

std::optional<Rational> SpaceIndex::power_exponent() const {
  if (!is_regular()) return std::nullopt;
  auto p = weight_.pure_power();
  if (p && p->coeff == Complex(1.0) && p->rate == 1.0) return p->exponent;
  return std::nullopt;
}

bool SpaceIndex::is_central() const {
  auto k = power_exponent();
  return k && *k == Rational(0);
}

SpaceIndex dual_index(const SpaceIndex& r) {
  switch (r.kind()) {
    case SpaceKind::Intersection: return SpaceIndex::union_all();
    case SpaceKind::Union: return SpaceIndex::intersection();
    case SpaceKind::Regular: break;
  }
  if (auto k = r.power_exponent()) return SpaceIndex::power(-*k);
  std::string label = r.label();
  if (label.size() > 3 && label.rfind("ov(", 0) == 0 && label.back() == ')')
    label = label.substr(3, label.size() - 4);
  else
    label = "ov(" + label + ")";
  return SpaceIndex::weighted(weight_dual(r.weight()), label);
}

SpaceIndex meet(const SpaceIndex& p, const SpaceIndex& q) {
  if (p.kind() == SpaceKind::Intersection || q.kind() == SpaceKind::Intersection)
    return SpaceIndex::intersection();
  if (p.kind() == SpaceKind::Union) return q;
  if (q.kind() == SpaceKind::Union) return p;
  return SpaceIndex::weighted(weight_meet(p.weight(), q.weight()), "(" + p.label() + "^" + q.label() + ")");
}

SpaceIndex join(const SpaceIndex& p, const SpaceIndex& q) {
  if (p.kind() == SpaceKind::Union || q.kind() == SpaceKind::Union) return SpaceIndex::union_all();
  if (p.kind() == SpaceKind::Intersection) return q;
  if (q.kind() == SpaceKind::Intersection) return p;
  return SpaceIndex::weighted(weight_join(p.weight(), q.weight()), "(" + p.label() + "v" + q.label() + ")");
}

bool same_index(const SpaceIndex& p, const SpaceIndex& q) {
  if (p.kind() != q.kind()) return false;
  if (!p.is_regular()) return true;
  return structurally_equal(p.weight(), q.weight());
}

std::string_view order_name(Order o) {
  switch (o) {
    case Order::Less: return "less";
    case Order::Greater: return "greater";
    case Order::Equal: return "equal";
    case Order::Incomparable: return "incomparable";
  }
  return "?";
}

Embedding embedding(const SpaceIndex& p, const SpaceIndex& q, std::size_t samples) {
  Embedding e;
  e.symbolic = true;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (p.kind() == SpaceKind::Intersection || q.kind() == SpaceKind::Union) {
    e.exists = true;
    e.ratio_sup = e.norm = nan;
    return e;
  }
  if (p.kind() == SpaceKind::Union || q.kind() == SpaceKind::Intersection) {
    e.exists = false;
    e.ratio_sup = e.norm = std::numeric_limits<double>::infinity();
    return e;
  }
  Sequence ratio = q.weight() * weight_dual(p.weight());
  auto ex = abs_extrema(ratio, samples);
  if (ex.symbolic) {
    e.exists = std::isfinite(ex.sup);
  } else {
    // Bounded if the sampled sup is already reached in the first half.
    auto half = abs_extrema(ratio, samples / 2);
    e.exists = half.sup >= ex.sup;
    e.symbolic = false;
  }
  e.ratio_sup = e.exists ? ex.sup : std::numeric_limits<double>::infinity();
  e.norm = std::sqrt(e.ratio_sup);
  return e;
}

namespace {

// Boundedness of w_q / w_p from asymptotics alone.
std::optional<bool> bounded_ratio(const SpaceIndex& p, const SpaceIndex& q) {
  Sequence ratio = q.weight() * weight_dual(p.weight());
  if (!ratio.asymptotics().known()) return std::nullopt;
  return std::isfinite(ratio.asymptotics().limsup_abs());
}

}  // namespace

Order compare(const SpaceIndex& p, const SpaceIndex& q) {
  auto contained = [](const SpaceIndex& a, const SpaceIndex& b) -> bool {
    if (a.kind() == SpaceKind::Intersection || b.kind() == SpaceKind::Union) return true;
    if (a.kind() == SpaceKind::Union || b.kind() == SpaceKind::Intersection) return false;
    if (auto s = bounded_ratio(a, b)) return *s;
    return embedding(a, b).exists;
  };
  bool pq = contained(p, q);
  bool qp = contained(q, p);
  if (pq && qp) return Order::Equal;
  if (pq) return Order::Less;
  if (qp) return Order::Greater;
  return Order::Incomparable;
}

Lattice::Lattice(std::vector<SpaceIndex> generators) : generators_(std::move(generators)) {}

std::vector<SpaceIndex> Lattice::closure(int depth) const {
  std::vector<SpaceIndex> out;
  auto add = [&](const SpaceIndex& r) {
    for (const auto& s : out)
      if (compare(s, r) == Order::Equal) return false;
    out.push_back(r);
    return true;
  };
  add(SpaceIndex::central());
  for (const auto& g : generators_) {
    add(g);
    add(dual_index(g));
  }
  for (int round = 0; round < depth; ++round) {
    std::vector<SpaceIndex> snapshot = out;
    bool grew = false;
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
      for (std::size_t j = i + 1; j < snapshot.size(); ++j) {
        grew |= add(meet(snapshot[i], snapshot[j]));
        grew |= add(join(snapshot[i], snapshot[j]));
      }
    }
    if (!grew) break;
  }
  return out;
}

bool Lattice::is_chain() const {
  std::vector<SpaceIndex> members;
  for (const auto& g : generators_) {
    members.push_back(g);
    members.push_back(dual_index(g));
  }
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      if (compare(members[i], members[j]) == Order::Incomparable) return false;
  return true;
}

bool Lattice::contains(const SpaceIndex& r) const {
  if (!r.is_regular()) return true;
  for (const auto& s : closure(2))
    if (compare(s, r) == Order::Equal) return true;
  return false;
}

}  // namespace pip
