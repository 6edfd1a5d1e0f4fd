#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pip/operators.hpp"
#include "pip/spectral.hpp"

namespace pip {

// The free operator T: a positive increasing symbol on sequences, or p^2 on L^2(R).
class FreeOperator {
 public:
  enum class Kind { Sequence, Continuum1D };

  static FreeOperator sequence(Sequence t);
  static FreeOperator continuum_1d();

  Kind kind() const { return kind_; }
  const Sequence& symbol() const;  // sequence models only
  PipOperator op() const;          // Diagonal(t)
  // Bottom of the spectrum: inf t_n, or 0 for p^2.
  double threshold() const;
  // V_r = l2((t+1)^r).
  SpaceIndex scale(Rational r) const;
  bool in_spectrum(Complex lambda) const;

 private:
  Kind kind_ = Kind::Sequence;
  Sequence t_;
  double threshold_ = 0.0;
};

// H = T - |Phi> B <Phi|.
struct KreinModel {
  FreeOperator T;
  std::vector<PipVector> phi;     // sequence models
  std::vector<double> centers;    // 1-D point interactions at x_j
  Eigen::MatrixXcd B;
  Eigen::MatrixXcd B_inverse;
  bool hermitian = false;

  std::size_t rank() const { return static_cast<std::size_t>(B.rows()); }
  PipOperator H() const;  // sequence models only
};

KreinModel sequence_model(Sequence t, std::vector<PipVector> phi, Eigen::MatrixXcd B);
// -d^2/dx^2 - sum_ij B_ij |delta_{x_i}><delta_{x_j}|
KreinModel delta_model(std::vector<double> centers, Eigen::MatrixXcd B);
// One centre at 0 with strength c = 1/alpha.
KreinModel delta1d(double alpha);

// Physical sheet: kappa^2 = -lambda with Re kappa >= 0.
Complex kappa_of(Complex lambda);

// Multiplication by 1/(t - lambda).  Throws InSpectrum.
PipOperator free_resolvent(const FreeOperator& T, Complex lambda);
// (t - lambda)^{-1/2} for real lambda below the threshold.
PipOperator free_resolvent_sqrt(const FreeOperator& T, double lambda);

struct MappingCertificate {
  Certificate forward;  // R: V_r -> V_{r+step}
  Certificate inverse;  // T - lambda: V_{r+step} -> V_r
  bool bijective = false;
};

// step 2 for R_lambda, 1 for its square root.
MappingCertificate free_resolvent_mapping(const FreeOperator& T, Complex lambda, Rational r, int step = 2);

struct GammaValue {
  Eigen::MatrixXcd matrix;
  double error_bound = 0.0;
  bool closed_form = false;
};

// Gamma(lambda) = <Phi|R_lambda(T) Phi> - B^{-1}.  Throws PairingDiverges, InSpectrum.
GammaValue gamma_matrix(const KreinModel& model, Complex lambda);
// The 1-D pairings by quadrature instead of the closed form e^{-kappa|dx|}/(2 kappa).
GammaValue gamma_quadrature(const KreinModel& model, Complex lambda);
Complex gamma_determinant(const KreinModel& model, Complex lambda);

// R_lambda(T) - R_lambda(T)|Phi> Gamma^{-1} <Phi|R_lambda(T)  (sequence models).
// Throws FreeSpectrum, GammaSingular.
PipOperator krein_resolvent(const KreinModel& model, Complex lambda);

// Integral kernel of the 1-D Krein resolvent.
struct KreinKernel {
  Complex lambda, kappa;
  std::vector<double> centers;
  Eigen::MatrixXcd gamma_inverse;

  Complex free(double x, double y) const;
  Complex operator()(double x, double y) const;
};
KreinKernel krein_kernel_1d(const KreinModel& model, Complex lambda);

struct LatticeResolvent {
  Eigen::VectorXd nodes;
  Eigen::MatrixXcd G;  // G(x_a, x_b)
};

// Nodal Green matrix of H - lambda on [-L, L] with N nodes: exponentially
// fitted elements and transparent ends, inverted densely.  Centres must be nodes.
LatticeResolvent delta_lattice_resolvent(const KreinModel& model, Complex lambda, std::size_t N, double L);

// max_k ||(H - lambda) R_lambda(H) e_k - e_k|| over the first 512 coordinates.
double krein_residual(const KreinModel& model, Complex lambda, std::size_t kmax);

struct BoundState {
  double lambda = 0.0;
  double det = 0.0;       // |det Gamma| at the root
  double residual = 0.0;  // ||(H - lambda) x|| / ||x|| for x = R_lambda(T) Phi y
  Eigen::VectorXcd y;     // Gamma(lambda) y = 0
};

struct BoundStateOptions {
  double span = 1e8;          // search lambda in (threshold - span, threshold)
  double closest = 1e-10;     // ... no closer to the threshold than this
  std::size_t grid = 600;     // log-spaced bracketing points
  double det_tol = 1e-12;
  unsigned jobs = 1;
};

// Real roots of det Gamma below the threshold, ascending.  Requires Hermitian B.
std::vector<BoundState> bound_states(const KreinModel& model, const BoundStateOptions& options = {});

struct Resonance {
  double kappa = 0.0;
  double lambda = 0.0;     // -kappa^2
  bool bound_state = false;  // physical sheet (kappa > 0)
  std::string sheet;
};

// Zero of 1/(2 kappa) - alpha on either sheet.
Resonance resonances_1d(double alpha);
// Only one-centre 1-D models have the continuation.  Throws NotClosedForm.
Resonance resonances_1d(const KreinModel& model);

// e^x_nu in H_r(R^nu), t = p^2: the integral of (1+p^2)^r over R^nu converges iff r < -nu/2.
bool exponential_membership(int nu, int r);
// (2 pi)^{-nu} int (1+p^2)^r d^nu p, +inf when divergent.
double exponential_norm2(int nu, int r);

}  // namespace pip
