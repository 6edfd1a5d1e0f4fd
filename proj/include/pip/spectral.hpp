#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pip/operators.hpp"

namespace pip {

enum class PointStatus { Regular, NotRegular, NotComparable, NoRepresentative };
std::string_view point_status_name(PointStatus s);

struct RegularPointResult {
  Complex lambda;
  SpaceIndex q, p;
  double c = 0.0;  // lower bound c_lambda
  double d = 0.0;  // upper bound d_lambda
  PointStatus status = PointStatus::NotRegular;
  bool exact = true;
  std::size_t truncation = 0;  // section size when not exact

  bool is_regular() const { return status == PointStatus::Regular; }
};

struct SpectralOptions {
  std::size_t truncation = 128;
  double rank_tol = 1e-8;  // relative singular-value threshold
  CertOptions cert;
};

// c_lambda ||f||_q <= ||(A - lambda) f||_p <= d_lambda ||f||_q, for q <= p.
RegularPointResult regular_point(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda,
                                 const SpectralOptions& options = {});

struct DefectRecord {
  Complex lambda;
  SpaceIndex q, p;
  std::optional<std::size_t> defect;  // nullopt for an infinite defect
  Eigen::MatrixXcd cokernel;          // columns: truncated vectors of V_p orthogonal to the range
  bool exact = true;
  std::size_t truncation = 0;
};

// Throws InvalidArgument when lambda is not regular, Unstable when the
// truncated estimate changes between N and 2N.
DefectRecord defect_number(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda,
                           const SpectralOptions& options = {});

// (A - lambda)_{pq} bijective: regular with defect zero.
bool in_resolvent_set(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda,
                      const SpectralOptions& options = {});

struct Grid {
  double re_min = -1.0, re_max = 1.0, im_min = -1.0, im_max = 1.0;
  std::size_t nx = 21, ny = 21;

  Complex point(std::size_t ix, std::size_t iy) const;
  std::size_t size() const { return nx * ny; }
};

struct GridRegion {
  Grid grid;
  SpaceIndex q, p;
  std::vector<PointStatus> status;  // row-major, iy * nx + ix
  std::vector<double> c;
  std::vector<int> defect;     // -1 where undefined or infinite
  std::vector<bool> resolvent;  // regular and defect 0
  std::vector<int> component;   // 4-neighbour component of the regular set, -1 elsewhere
  int components = 0;
};

GridRegion resolvent_region(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, const Grid& grid,
                            const SpectralOptions& options = {}, unsigned jobs = 1);

// 4-neighbour flood fill of a boolean mask on the grid.
std::vector<int> label_components(const std::vector<bool>& mask, std::size_t nx, std::size_t ny, int* count = nullptr);

struct SpectralReport {
  Grid grid;
  std::vector<GridRegion> regions;  // one per supplied pair
  std::vector<bool> rho;            // union of the per-pair resolvent sets
  std::vector<bool> sigma;          // complement
  std::size_t conjugate_mismatches = 0;  // rho^J(A) against conj(rho^J(A^x))
  bool conjugate_symmetric = false;
};

SpectralReport j_resolvent(const PipOperator& A, const std::vector<std::pair<SpaceIndex, SpaceIndex>>& pairs,
                           const Grid& grid, const SpectralOptions& options = {}, unsigned jobs = 1);

// R_lambda(A): V_p -> V_q.  Throws NotInResolventSet.
PipOperator resolvent(const PipOperator& A, Complex lambda, const SpaceIndex& q, const SpaceIndex& p,
                      const SpectralOptions& options = {});

struct IdentityResidual {
  double max_residual = 0.0;  // in ||.||_q, relative to ||f||_p
  std::size_t vectors = 0;
};

// R_l(A) - R_l(B) = R_l(A)(B - A)R_l(B).
IdentityResidual first_resolvent_identity(const PipOperator& A, const PipOperator& B, Complex lambda,
                                          const SpaceIndex& q, const SpaceIndex& p,
                                          const std::vector<PipVector>& tests, const SpectralOptions& options = {});
// R_l - R_m = (l - m) R_l R_m.
IdentityResidual second_resolvent_identity(const PipOperator& A, Complex lambda, Complex mu, const SpaceIndex& q,
                                           const SpaceIndex& p, const std::vector<PipVector>& tests,
                                           const SpectralOptions& options = {});
// Central difference of R against R^2.
IdentityResidual resolvent_derivative_identity(const PipOperator& A, Complex lambda, const SpaceIndex& q,
                                               const SpaceIndex& p, const std::vector<PipVector>& tests,
                                               double h = 1e-5, const SpectralOptions& options = {});

struct ResolventSeries {
  PipVector value;                 // partial sum applied to the input vector
  double radius = 0.0;             // 1 / ||R_{lambda0}||_{qq}
  double error_bound = 0.0;        // geometric tail bound in ||.||_q
  std::vector<double> increments;  // ||term_k||_q
};

// sum_k (lambda - lambda0)^k R_{lambda0}^{k+1} f.  Throws OutsideRadius.
ResolventSeries resolvent_series(const PipOperator& A, const SpaceIndex& q, const SpaceIndex& p, Complex lambda0,
                                 Complex lambda, std::size_t terms, const PipVector& f,
                                 const SpectralOptions& options = {});

struct Eigenpair {
  Complex lambda;
  PipVector vector;
  double residual = 0.0;  // ||(A - lambda) x||_p / ||x||_q
  bool global = false;    // in V#
  bool exact = true;
};

std::vector<Eigenpair> generalized_eigenpairs(const PipOperator& A, Complex lambda, const SpaceIndex& q,
                                              const SpaceIndex& p, const SpectralOptions& options = {});

// Self-adjoint extensions S_alpha of -i d/dx on L^2(0,1) with f(1) = alpha f(0).
struct BoundaryExtensionSpectrum {
  Complex alpha;
  double theta = 0.0;  // arg alpha in (-pi, pi]
  double eigenvalue(long n) const;
  std::vector<double> window(long n_max) const;  // n = -n_max .. n_max
};

BoundaryExtensionSpectrum boundary_extension_spectrum(Complex alpha);

struct BoundaryExtensionReport {
  std::vector<BoundaryExtensionSpectrum> spectra;
  bool pairwise_disjoint = true;
  double min_separation = 0.0;  // over eigenvalue pairs from distinct alphas
  std::string diagnosis;
};

BoundaryExtensionReport boundary_extension_demo(const std::vector<Complex>& alphas, long n_max = 50);

}  // namespace pip
