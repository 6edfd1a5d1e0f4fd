#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pip/sequence.hpp"

namespace pip {

enum class SpaceKind {
  Regular,       // a weighted l2 space V_r
  Intersection,  // the marker for V#, the intersection of the whole lattice
  Union,         // the marker for V, the union of the whole lattice
};

// Index r of an assaying space V_r = l2(w_r): sum |f_n|^2 w_r(n) < inf.
class SpaceIndex {
 public:
  SpaceIndex();  // the central space, weight 1

  static SpaceIndex central();
  // (n+1)^exponent, i.e. the space s_exponent
  static SpaceIndex power(Rational exponent, std::string label = {});
  static SpaceIndex weighted(Sequence weight, std::string label);
  static SpaceIndex intersection();
  static SpaceIndex union_all();

  SpaceKind kind() const { return kind_; }
  bool is_regular() const { return kind_ == SpaceKind::Regular; }
  // Throws InvalidArgument for the V#/V markers.
  const Sequence& weight() const;
  const std::string& label() const { return label_; }
  // Set when the weight is exactly (n+1)^k.
  std::optional<Rational> power_exponent() const;
  bool is_central() const;

 private:
  SpaceKind kind_ = SpaceKind::Regular;
  Sequence weight_;
  std::string label_;
};

SpaceIndex dual_index(const SpaceIndex& r);
SpaceIndex meet(const SpaceIndex& p, const SpaceIndex& q);
SpaceIndex join(const SpaceIndex& p, const SpaceIndex& q);

// Structural identity of index expressions (same weight tree).
bool same_index(const SpaceIndex& p, const SpaceIndex& q);

enum class Order { Less, Greater, Equal, Incomparable };
std::string_view order_name(Order o);

struct Embedding {
  bool exists = false;    // V_p is contained in V_q
  double ratio_sup = 0;   // sup_n w_q(n) / w_p(n)
  double norm = 0;        // sqrt(ratio_sup), the operator norm of V_p -> V_q
  bool symbolic = false;  // decided from asymptotics rather than samples only
};

// Default sample count for sampled suprema.
inline constexpr std::size_t kSampleHorizon = 10000;

Embedding embedding(const SpaceIndex& p, const SpaceIndex& q, std::size_t samples = kSampleHorizon);
// Inclusion order: Less means V_p is a proper subspace of V_q.
Order compare(const SpaceIndex& p, const SpaceIndex& q);
inline bool leq(const SpaceIndex& p, const SpaceIndex& q) {
  auto o = compare(p, q);
  return o == Order::Less || o == Order::Equal;
}

// Index family closed under meet, join and duality.
class Lattice {
 public:
  Lattice() = default;
  explicit Lattice(std::vector<SpaceIndex> generators);

  const std::vector<SpaceIndex>& generators() const { return generators_; }
  // Generators, their duals, then `depth` rounds of pairwise meets and joins,
  // with spaces that coincide (Order::Equal) listed once.
  std::vector<SpaceIndex> closure(int depth = 1) const;
  bool is_chain() const;
  bool contains(const SpaceIndex& r) const;
  static SpaceIndex central() { return SpaceIndex::central(); }

 private:
  std::vector<SpaceIndex> generators_;
};

}  // namespace pip
