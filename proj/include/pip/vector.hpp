#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pip/sequence.hpp"
#include "pip/space.hpp"

namespace pip {

// A vector with a finitely supported exact head and an optional symbolic tail.
class PipVector {
 public:
  struct Entry {
    std::size_t index;
    Complex value;
  };
  // Coefficients tail.values(n) for every n >= start (absolute indexing).
  struct Tail {
    std::size_t start;
    Sequence values;
  };

  PipVector() = default;
  PipVector(std::vector<Entry> head, std::optional<Tail> tail = std::nullopt);

  static PipVector basis(std::size_t n, Complex c = 1.0);
  // dense[i] becomes the coefficient of e_i
  static PipVector from_dense(const Eigen::VectorXcd& dense);
  // Head entries optional; the tail c (n+1)^s runs from `start`.
  static PipVector power_tail(Complex c, Rational s, std::size_t start = 0, std::vector<Entry> head = {});
  static PipVector geometric_tail(Complex c, double rho, std::size_t start = 0, std::vector<Entry> head = {});
  static PipVector with_tail(Sequence values, std::size_t start = 0, std::vector<Entry> head = {});

  Complex coefficient(std::size_t n) const;
  Complex operator[](std::size_t n) const { return coefficient(n); }
  const std::vector<Entry>& head() const { return head_; }
  const std::optional<Tail>& tail() const { return tail_; }
  bool finitely_supported() const { return !tail_.has_value(); }
  // One past the largest index that is not governed by the tail.
  std::size_t head_end() const;
  Eigen::VectorXcd dense(std::size_t N) const;

  PipVector operator+(const PipVector& other) const;
  PipVector operator-(const PipVector& other) const;
  PipVector operator-() const { return (*this) * Complex(-1.0); }
  PipVector operator*(Complex c) const;
  friend PipVector operator*(Complex c, const PipVector& v) { return v * c; }
  // Coefficientwise a_n f_n.
  PipVector multiplied(const Sequence& symbol) const;
  // (S f)_n = f_{n - offset}
  PipVector shifted(int offset) const;

 private:
  std::vector<Entry> head_;
  std::optional<Tail> tail_;
};

struct MembershipResult {
  bool in = false;
  double norm = 0.0;  // +inf when not a member
  double error_bound = 0.0;
  bool certified = false;
};

// ||f||_r^2 = sum |f_n|^2 w_r(n); convergence decided from the tail asymptotics.
MembershipResult membership(const PipVector& f, const SpaceIndex& r, const SeriesOptions& options = {});
double norm(const PipVector& f, const SpaceIndex& r, const SeriesOptions& options = {});

struct PairingResult {
  Complex value;
  double error_bound = 0.0;
  bool certified = false;
};

// <f|g> = sum conj(f_n) g_n, linear in the second argument.  Throws
// Incompatible when sum |f_n g_n| diverges.
PairingResult partial_inner_product(const PipVector& f, const PipVector& g, const SeriesOptions& options = {});
Complex pairing(const PipVector& f, const PipVector& g);

// Weighted inner product <f|g>_r of two members of V_r.
Complex inner_product(const PipVector& f, const PipVector& g, const SpaceIndex& r);

}  // namespace pip
