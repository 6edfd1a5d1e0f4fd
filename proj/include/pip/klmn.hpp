#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pip/operators.hpp"
#include "pip/spectral.hpp"

namespace pip {

// Position of the pair (m, n), m <= n, relative to the dual pair on a chain.
enum class ChainCaseKind {
  Ia,        // m <= n <= 0 <= ov n <= ov m
  Ib,        // m <= ov n <= 0 <= n <= ov m
  IIa,       // ov n <= m <= 0 <= ov m <= n
  IIb,       // ov n <= ov m <= 0 <= m <= n
  Boundary,  // m = ov n: m <= 0 <= ov m
};
std::string_view chain_case_name(ChainCaseKind k);

struct ChainCase {
  ChainCaseKind kind = ChainCaseKind::Ia;
  std::vector<SpaceIndex> chain;  // increasing under inclusion, with the central space
  std::string ordering;           // "s_2 <= s_1 <= s_0 <= ..."
  bool expansion_applies = false;
  // Where generalized eigenvectors live when the expansion applies: ov m if m <= ov n, else n.
  SpaceIndex eigenvector_space;
  // The dual pair on which X - lambda maps the small space onto the large one.
  SpaceIndex small, large;
};

// m <= n is required under inclusion.  Throws NotComparable, NotAChain, InvalidArgument.
ChainCase chain_case_classify(const SpaceIndex& m, const SpaceIndex& n);
ChainCase chain_case_classify(const Lattice& lattice, const SpaceIndex& m, const SpaceIndex& n);

std::string space_name(const SpaceIndex& r);

struct QuintetReport {
  // m ^ ov n, m ^ ov m, 0, m v ov m, ov m v n
  std::vector<SpaceIndex> spaces;
  std::vector<Embedding> embeddings;  // consecutive inclusions
  bool holds = false;
};

QuintetReport quintet_check(const SpaceIndex& m, const SpaceIndex& n);

struct KlmnTruncation {
  std::size_t N = 0;
  Eigen::MatrixXcd R00;            // leading block of the resolvent in the central space
  Eigen::MatrixXcd X0;             // (R00)^{-1} + lambda
  Eigen::VectorXd spectrum;        // eigenvalues of X0, ascending
  double r_asymmetry = 0.0;        // ||R - R*||_max / max(1, ||R||_max)
  double x_asymmetry = 0.0;
  double distance = 0.0;           // dist(lambda, spectrum)
  std::size_t rank = 0;            // numerical rank of R00
};

struct KlmnOptions {
  std::vector<std::size_t> truncations{32, 64, 128};
  double hermitian_tol = 1e-13;
  double rank_tol = 1e-14;  // relative to the largest eigenvalue of R00
  SpectralOptions spectral;
};

struct KlmnRestriction {
  SpaceIndex m, n;
  double lambda = 0.0;
  std::optional<ChainCase> chain_case;
  std::string domain;           // predicate form or range form
  bool predicate_domain = false;  // domain given as {f in V_a : Xf in V_0}
  PipOperator X;
  PipOperator resolvent;        // R_mn, when available in closed form
  bool resolvent_exact = true;  // false: R00 from inverted sections of X - lambda
  std::vector<KlmnTruncation> truncations;
  double min_distance = 0.0;
  bool hermitian = false;
  bool dense_domain = false;

  const KlmnTruncation& finest() const { return truncations.back(); }
};

// Structural adjoint match, else a Hermitian check of the leading block.
bool is_symmetric(const PipOperator& X, std::size_t N = 64, double tol = 1e-12);

// Throws NotSymmetric, NoRepresentative, NotInvertible, DomainNotDense.
KlmnRestriction klmn_restrict(const PipOperator& X, const SpaceIndex& m, const SpaceIndex& n, double lambda,
                              const KlmnOptions& options = {});

struct HilbertSchmidtReport {
  bool hilbert_schmidt = false;
  double sum = 0.0;  // sum_n 1 / w(n), +inf when divergent
  bool certified = false;
  std::string detail;
};

// The scale generator A with ||f||_1 = ||A f||, so H_1 = l2(w): A^{-1} is
// Hilbert-Schmidt iff sum 1 / w(n) converges.
HilbertSchmidtReport hilbert_schmidt_check(const SpaceIndex& generator_space);

struct SpectralAtom {
  double lambda = 0.0;
  PipVector chi;
  double weight = 1.0;
};

class GeneralizedSpectralFamily {
 public:
  GeneralizedSpectralFamily() = default;
  explicit GeneralizedSpectralFamily(std::vector<SpectralAtom> atoms, std::size_t truncation = 0);

  const std::vector<SpectralAtom>& atoms() const { return atoms_; }
  std::size_t truncation() const { return truncation_; }

  // B(mu) = sum over lambda_k <= mu of weight_k |chi_k><chi_k|.
  PipOperator B(double mu) const;
  // <B(mu) f | g>
  Complex form(double mu, const PipVector& f, const PipVector& g) const;
  // f expanded against the atoms: sum weight <chi|f> chi
  PipVector expand(const PipVector& f) const;

 private:
  std::vector<SpectralAtom> atoms_;  // sorted by lambda
  std::size_t truncation_ = 0;
};

struct ExpansionOptions {
  std::size_t atoms = 64;  // truncation for the diagonalization
  SpaceIndex scale = SpaceIndex::power(2);  // H_1 of the scale generator
  bool force = false;      // expand even when the generator check fails
  std::optional<ChainCase> chain_case;  // refuse cases without the expansion theorem
  double unitarity_tol = 1e-10;
};

struct ExpansionResiduals {
  double finiteness = 0.0;       // max sum weight |<chi|f>|^2 over tests
  double reconstruction = 0.0;   // max ||f - sum weight <chi|f> chi|| / ||f||
  double parseval = 0.0;         // max |<f|g> - sum weight conj<chi|f><chi|g>|
  double eigen_relation = 0.0;   // max |<chi|X e_j> - lambda <chi|e_j>| / max(1, |lambda|)
  std::size_t vectors = 0;
};

struct EigenExpansion {
  GeneralizedSpectralFamily family;
  HilbertSchmidtReport generator;
  SpaceIndex eigenvector_space;  // dual of r
  bool eigenvectors_certified = false;
  bool exact = true;             // false after truncation diagonalization
  double edge_leak = 0.0;        // max ||X chi_k beyond the section|| / ||chi_k||
};

// X: V# -> V_r with r <= 0.  Throws NotSymmetric, NoCompleteFamily, InvalidArgument.
EigenExpansion eigen_expansion(const PipOperator& X, const SpaceIndex& r, const ExpansionOptions& options = {});

// Residuals of the completeness conditions on head vectors; the eigen relation
// is evaluated on e_j, j < the family truncation.
ExpansionResiduals completeness_residuals(const GeneralizedSpectralFamily& F, const PipOperator& X,
                                          const std::vector<PipVector>& tests);

struct Reconstruction {
  Complex lhs;  // <X f | g>
  Complex rhs;  // sum lambda_k d<B(lambda_k) f | g>
  double residual = 0.0;
};

Reconstruction spectral_family_reconstruct(const GeneralizedSpectralFamily& F, const PipOperator& X,
                                           const PipVector& f, const PipVector& g);

struct FamilyProfile {
  std::vector<double> mu;
  std::vector<double> values;    // <B(mu) f | f>
  double norm2 = 0.0;            // ||f||^2
  bool monotone = true;          // values nondecreasing
  bool bounded = true;           // values <= ||f||^2
  bool operator_monotone = true; // B(mu_{i+1}) - B(mu_i) >= 0 on truncations
  double idempotence_defect = 0.0;  // max ||B^2 - B|| on truncations, reported only
};

FamilyProfile family_profile(const GeneralizedSpectralFamily& F, const PipVector& f, const std::vector<double>& mu);

struct Rigging {
  SpaceIndex m;
  // Weight equivalent to the graph norm ||g||_m^2 + ||X0 g||_m^2.
  SpaceIndex k_space;
  bool approximate = false;  // graph norm replaced by its diagonal part
  bool dense = false;        // Babbitt density surrogate verdict
};

// K carries w_m (1 + |x_nn|^2), exact for diagonal X.
Rigging make_rigging(const KlmnRestriction& X0, const SpaceIndex& m);
inline Rigging make_rigging(const KlmnRestriction& X0) { return make_rigging(X0, X0.m); }

struct BabbittResult {
  std::vector<std::size_t> sizes;
  std::vector<double> residuals;  // max projection residual of the V_m basis
  bool dense = false;
};

// Projection of e_j / sqrt(w_m(j)), j < probes, onto (X0 - lambda) K truncations.
BabbittResult babbitt_density(const KlmnRestriction& X0, const Rigging& rigging, double lambda,
                              std::size_t N, std::size_t probes = 8);

struct ExtendedSpectrumOptions {
  std::size_t truncation = 64;   // N, with 2N used for the decay check
  double residual_tol = 1e-8;    // candidate eigenvector residual in K^x
  double decay_tol = 1e-6;       // smallest singular value on the grid at 2N
  unsigned jobs = 1;
};

struct ExtendedSpectrum {
  std::vector<Complex> eigenvalues;  // accepted generalized eigenvalues
  std::vector<bool> grid_member;     // grid points carrying a decaying null vector
  std::vector<double> grid_sigma;    // smallest singular value at 2N
  Grid grid;
  std::vector<double> spectrum;      // spec(X0) at the finest truncation
  double grid_tolerance = 0.0;
  bool tight = false;                // sigma_ext within the closure of spec(X0)
  bool approximate = false;
  BabbittResult babbitt;
};

ExtendedSpectrum extended_spectrum(const KlmnRestriction& X0, const Rigging& rigging, const Grid& region,
                                   const ExtendedSpectrumOptions& options = {});

struct InclusionReport {
  std::size_t spectrum_points = 0;  // points of spec(X0) inside the grid window
  std::size_t ext_points = 0;       // accepted eigenvalues and grid members
  std::size_t j_points = 0;         // of those, the points outside every rho^{(q,p)}
  bool spectrum_in_ext = false;
  bool ext_in_j = false;
};

// sigma(X0) in sigma_ext in sigma^J, each within the grid tolerance of `ext`.
InclusionReport spectral_inclusions(const ExtendedSpectrum& ext, const PipOperator& X,
                                    const std::vector<std::pair<SpaceIndex, SpaceIndex>>& pairs,
                                    const SpectralOptions& options = {}, unsigned jobs = 1);

}  // namespace pip
