#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pip/klmn.hpp"
#include "pip/operators.hpp"
#include "pip/spectral.hpp"

namespace pip {

// psi_n = e_n / m_n and phi_n = m_n e_n for a positive weight m.
// The frame operator is S = diag(m_n^-2) and H_k carries the weight m_n^{2k}.
class SemiFrameScale {
 public:
  // Throws InvalidArgument unless m is real, positive and 1/m is bounded.
  explicit SemiFrameScale(Sequence m);
  // A diagonal T with {T f_n} orthonormal: f_n = e_n / t_n plays the role of psi_n.
  static SemiFrameScale riesz_basis(Sequence t) { return SemiFrameScale(std::move(t)); }

  const Sequence& m() const { return m_; }
  PipVector psi(std::size_t n) const;
  PipVector phi(std::size_t n) const;
  PipOperator frame_operator() const;          // S
  PipOperator inverse_frame_operator() const;  // S^-1, unbounded unless the scale collapses
  SpaceIndex space(Rational k) const;

  // 1/m_n -> 0 along a subsequence, so there is no lower frame bound.
  bool upper_semi_frame() const { return semi_; }

 private:
  Sequence m_;
  bool semi_ = false;
};

struct Multiplier {
  PipOperator op;
  int degree = 0;  // k in |a_n| <= c (n+1)^{k/2}, or |a_n| <= c m_n^k on a semi-frame scale
  double growth_constant = 0.0;
  bool growth_symbolic = false;
  std::vector<Certificate> mappings;  // H_j -> H_{j-k} for j = -3..3
  bool real_positive = false;         // symmetric and positive in the scale
  bool klmn_applicable = false;       // k = 2r > 0 and real positive: H_r -> H_{-r}
  std::optional<SemiFrameScale> scale;

  SpaceIndex space(Rational j) const;
};

// Diagonal multiplier on the s_m scale.  Throws GrowthViolated.
Multiplier multiplier(const Sequence& a, int k);
Multiplier multiplier(const Sequence& a, int k, const SemiFrameScale& scale);

// R^alpha f = sum alpha_n <psi_n|f> psi_n, with the degree read off the symbol alpha_n / m_n^2.
Multiplier riesz_multiplier(const Sequence& alpha, const SemiFrameScale& scale);

struct MultiplierSpectrum {
  std::vector<double> closure;        // a_n for n < 2N, then the limit if there is one
  std::optional<double> accumulation;
  ExtendedSpectrum extended;
  bool matches_closure = false;  // every generalized eigenvalue is some a_n
  bool tight = false;
};

// sigma_ext on (H_r, H_-r) at lambda = -1 for real positive symbols of degree 2r >= 0.
MultiplierSpectrum multiplier_spectrum(const Multiplier& M, const Grid& grid,
                                       const ExtendedSpectrumOptions& options = {});

struct FrameBounds {
  double upper = 0.0;  // M
  std::size_t argsup = 0;
  double lower = 0.0;  // inf over the probes (0 in the limit for a semi-frame)
  // n_k with m_{n_k}^-2 decreasing to 0, and those values.
  std::vector<std::size_t> witness;
  std::vector<double> witness_values;
  bool frame = false;     // a positive lower bound exists
  bool collapses = false;  // frame, so the three spaces coincide
  bool symbolic = false;
};

FrameBounds semi_frame_bounds(const SemiFrameScale& scale, std::size_t N);

// A continuous frame sampled on a quadrature grid.  Column i of `vectors` is psi_{x_i}
// in orthonormal coordinates of the truncated Hilbert space.
struct ContinuousFrame {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
  Eigen::MatrixXcd vectors;

  std::size_t size() const { return static_cast<std::size_t>(points.size()); }
  // (C f)_i = sqrt(nu_i) <psi_i|f>, the analysis map into orthonormal coordinates of L^2(X, nu).
  Eigen::MatrixXcd analysis() const;
  Eigen::MatrixXcd frame_operator() const;  // C^* C
  Eigen::MatrixXcd gram() const;            // C C^*
};

// Over successively refined samplings of one frame: the upper bound is the largest eigenvalue
// of S, the witness lists the smallest eigenvalue per refinement, and a lower bound is
// declared only if that value does not fall below half its first value.  Needs two or more.
FrameBounds semi_frame_bounds(const std::vector<ContinuousFrame>& refinements);

// max | ||C f||_Psi - ||f|| | / ||f|| over random probes, where ||F||_Psi = ||C^-1 F||.
double unitarity_defect(const ContinuousFrame& frame, std::size_t probes = 20, unsigned seed = 7);

struct TripletConstants {
  double inner = 0.0;    // ||F||_0 <= inner ||F||_Psi
  double outer = 0.0;    // ||F||_Psi^x <= outer ||F||_0
  double reverse = 0.0;  // ||F||_Psi <= reverse ||F||_0 on Ran C, which grows under refinement
  bool contained = false;
};
TripletConstants triplet_constants(const ContinuousFrame& frame);

struct ContinuousSymbol {
  enum class Class { Bounded, Integrable, Delta };
  Class kind = Class::Bounded;
  std::function<Complex(double)> fn;
  double at = 0.0;  // location of a Delta

  static ContinuousSymbol bounded(std::function<Complex(double)> f) { return {Class::Bounded, std::move(f), 0.0}; }
  static ContinuousSymbol integrable(std::function<Complex(double)> f) {
    return {Class::Integrable, std::move(f), 0.0};
  }
  static ContinuousSymbol delta(double x = 0.0) { return {Class::Delta, {}, x}; }
  static ContinuousSymbol one() { return bounded([](double) { return Complex(1.0); }); }
};

// Symbol values on the grid.  A delta is a unit mass at the nearest node.
Eigen::VectorXcd sample_symbol(const ContinuousSymbol& m, const ContinuousFrame& X);

struct ContinuousMultiplier {
  Eigen::MatrixXcd direct;      // sum_i nu_i m_i |phi_i><psi_i|
  Eigen::MatrixXcd factorized;  // C_Phi^* diag(m) C_Psi
  double agreement = 0.0;       // relative max difference of the two
  bool bounded = false;
  double norm = 0.0;
  double hermitian_defect = 0.0;  // relative, meaningful for Phi = Psi
};

// Throws SymbolUnbounded for a Bounded symbol that is not, InvalidArgument for mismatched grids.
ContinuousMultiplier continuous_multiplier(const ContinuousSymbol& m, const ContinuousFrame& psi,
                                           const ContinuousFrame& phi, unsigned jobs = 1);

struct SingularValueDecay {
  Eigen::VectorXd values;  // descending
  std::size_t effective_rank = 0;  // values above rel * values(0)
  bool monotone = false;
};
SingularValueDecay singular_value_decay(const Eigen::MatrixXcd& M, double rel = 1e-8);

struct RadialGrid {
  double r_max = 4.0;
  std::size_t points = 64;  // midpoints r_j = (j + 1/2) h, h = r_max / points
};

using RadialProfile = std::function<Complex(double)>;
// "gaussian" e^{-r^2/2}, "exponential" e^{-r}, "rational" 1/(1+r^2).  Throws InvalidArgument.
RadialProfile affine_profile(const std::string& name);

// Affine coherent states psi_x(r) = e^{-ixr} psi(r) in L^2(R+, r^{n-1} dr).  The x grid is
// the discrete Fourier dual of the radial grid, so S is exactly multiplication by s(r).
struct AffineFrameModel {
  int n = 1;
  RadialProfile psi;  // normalized so that sup s = 1 on the grid
  double normalization = 1.0;
  Eigen::VectorXd r;
  double h = 0.0;
  Eigen::VectorXd s;  // 2 pi r^{n-1} |psi(r)|^2
  ContinuousFrame frame;
  double s_sup = 0.0, s_inf = 0.0;
  double frame_operator_defect = 0.0;  // max |C^* C - diag(s)|
  double quadrature_error = 0.0;       // ||psi||^2 at h against h/2

  // Grid values f(r_j) to orthonormal coordinates and back.
  Eigen::VectorXcd coordinates(const Eigen::VectorXcd& values) const;
  Eigen::VectorXcd values(const Eigen::VectorXcd& coordinates) const;
  Eigen::VectorXcd frame_vector(double x) const;
  // int |f|^2 s^{-k} r^{n-1} dr from grid values.
  double scale_norm2(const Eigen::VectorXcd& values, int k) const;
  // ||S^-1 psi_x||, the same for every x.
  double inverse_frame_vector_norm() const;
};

// normalize = false requires sup s = 1 within tol.  Throws NotAdmissible.
AffineFrameModel affine_frame_build(RadialProfile psi, int n, const RadialGrid& grid, bool normalize = true,
                                    double tol = 1e-10);

struct DeltaProjection {
  Eigen::MatrixXcd M;       // M_{delta, Psi}
  Eigen::MatrixXcd dyad;    // |psi><psi|
  double defect = 0.0;      // max |M - dyad|
  double projection_defect = 0.0;  // max |M^2 - M|, zero iff ||psi|| = 1
  double quadrature_error = 0.0;
};
DeltaProjection delta_projection(const AffineFrameModel& model);

// The sequence analog of a delta multiplier: M = |g><g| with g outside l^2.
struct DyadicDeltaReport {
  PipOperator op;
  std::vector<Certificate> mappings;  // valid pairs (s_q, s_p) on the integer scale [-3, 3]
  std::vector<PipVector> kernel;      // finitely supported witnesses of M v = 0
  double kernel_residual = 0.0;
  double min_form = 0.0;              // min <M f|f> over probes, >= 0
  double form_identity = 0.0;         // max |<M f|f> - |<g|f>|^2|
  bool equal_weight_regular = false;  // some lambda regular on some (s_q, s_q)
  SpectralReport j_spectrum;
  bool j_spectrum_is_plane = false;
};

// Throws GeneratorTooRegular when g is in l^2.
DyadicDeltaReport dyadic_delta_model(const PipVector& g, const Grid& grid, std::size_t kernel_size = 16,
                                     unsigned jobs = 1);

}  // namespace pip
