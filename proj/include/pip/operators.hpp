#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pip/errors.hpp"
#include "pip/sequence.hpp"
#include "pip/space.hpp"
#include "pip/vector.hpp"

namespace pip {

enum class OpKind {
  Diagonal,        // (A f)_n = a_n f_n
  Dyadic,          // |f><g|
  LowRank,         // sum_ij C_ij |u_i><v_j|   (finite rank sum |Phi>B<Phi| when U = V)
  Sum,             // sum of terms
  Composition,     // outer * inner, factorized through a witnessing space
  ScaledIdentity,  // lambda I
  Shift,           // (S f)_n = f_{n-1} for offset +1, f_{n+1} for offset -1
};

namespace detail {
struct OpNode;
}

class PipOperator {
 public:
  PipOperator();  // the zero operator

  static PipOperator diagonal(Sequence symbol, std::string label = {});
  static PipOperator dyadic(PipVector f, PipVector g);
  // |Phi> B <Phi| = sum B_ij |phi_i><phi_j|
  static PipOperator finite_rank(std::vector<PipVector> phi, Eigen::MatrixXcd B);
  static PipOperator low_rank(std::vector<PipVector> U, std::vector<PipVector> V, Eigen::MatrixXcd C);
  static PipOperator identity(Complex lambda = 1.0);
  static PipOperator shift(int offset);
  static PipOperator sum(std::vector<PipOperator> terms);
  static PipOperator composition(PipOperator outer, PipOperator inner, SpaceIndex through);

  OpKind kind() const;
  std::string describe() const;

  // Form accessors; each throws InvalidArgument on a mismatched kind.
  const Sequence& symbol() const;
  const PipVector& dyad_left() const;
  const PipVector& dyad_right() const;
  const std::vector<PipVector>& left_vectors() const;
  const std::vector<PipVector>& right_vectors() const;
  const Eigen::MatrixXcd& coupling() const;
  bool is_finite_rank_sum() const;  // declared as |Phi>B<Phi|
  const std::vector<PipOperator>& terms() const;
  const PipOperator& outer() const;
  const PipOperator& inner() const;
  const SpaceIndex& through() const;
  Complex lambda() const;
  int offset() const;

  PipOperator operator+(const PipOperator& other) const;
  PipOperator operator-(const PipOperator& other) const;
  PipOperator scaled(Complex c) const;

 private:
  explicit PipOperator(std::shared_ptr<const detail::OpNode> node);
  std::shared_ptr<const detail::OpNode> node_;
  friend struct detail::OpNode;
};

bool structurally_equal(const PipOperator& a, const PipOperator& b);
bool structurally_equal(const PipVector& a, const PipVector& b);

enum class WitnessKind { Symbolic, Sampled, Heuristic, Truncated };
std::string_view witness_name(WitnessKind w);

// Certificate for the representative A_{pq}: V_q -> V_p.
struct Certificate {
  SpaceIndex q, p;
  bool valid = false;
  double bound = 0.0;  // +inf when invalid
  WitnessKind witness = WitnessKind::Symbolic;
  std::string formula;
};

struct CertOptions {
  std::size_t samples = kSampleHorizon;
  // Caller asserts the relevant ratio sequences are monotone beyond the samples.
  bool monotone_tail = false;
  // Sample budget for symbols without closed-form asymptotics (0 = refuse).
  std::size_t budget = 0;
};

Certificate representative_exists(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p,
                                  const CertOptions& options = {});

PipOperator adjoint(const PipOperator& A);

// Exact action on a vector, with no domain bookkeeping.
PipVector act(const PipOperator& A, const PipVector& f);
// Checked action of the representative A_{pq}.
PipVector apply(const PipOperator& A, const PipVector& f, const SpaceIndex& q, const SpaceIndex& p,
                const CertOptions& options = {});

// Searches the lattice closure for a space r with r in i(A) and r in d(B).
PipOperator compose(const PipOperator& B, const PipOperator& A, const Lattice& lattice,
                    const CertOptions& options = {});

// Rows of the truncated matrix <e_i|A e_j>, i < rows, j < cols.
Eigen::MatrixXcd dense_block(const PipOperator& A, std::size_t rows, std::size_t cols);
// W_p^{1/2} A W_q^{-1/2} on the leading block, the matrix of A_{pq} in orthonormal coordinates.
Eigen::MatrixXcd weighted_section(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p,
                                  std::size_t rows, std::size_t cols);
// How far below the diagonal the operator reaches (rows needed beyond cols).
std::size_t outreach(const PipOperator& A);
// How far above the diagonal it reaches (columns needed beyond rows).
std::size_t inreach(const PipOperator& A);

class InversionError : public Error {
 public:
  InversionError(ErrorCode code, const std::string& message, std::optional<PipVector> witness = std::nullopt)
      : Error(code, message), witness_(std::move(witness)) {}
  const std::optional<PipVector>& witness() const { return witness_; }

 private:
  std::optional<PipVector> witness_;
};

struct Inverse {
  PipOperator op;
  Certificate certificate;  // for the representative V_p -> V_q
};

// Inverse of the representative A_{pq}.  Throws InversionError.
Inverse invert(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, const CertOptions& options = {});

struct UniquenessReport {
  SpaceIndex domain;  // meet of the two target spaces
  SpaceIndex range;   // meet of the two source spaces
  std::size_t probes = 0;
  double max_disagreement = 0.0;
  bool agree = false;
};

UniquenessReport inverse_uniqueness_check(const PipOperator& A, const Certificate& first, const Certificate& second,
                                          std::size_t probes = 30, double tol = 1e-12);

// Weighted l2 norm over the leading N coordinates.
double truncated_norm(const Eigen::VectorXcd& v, const SpaceIndex& r);

}  // namespace pip
