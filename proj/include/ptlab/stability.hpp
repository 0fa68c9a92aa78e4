#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "ptlab/continuation.hpp"
#include "ptlab/dimer.hpp"
#include "ptlab/lattice.hpp"

namespace ptlab {

// ============================================================================
// Linearised spectral analysis of breathers
//
// Perturbations phi_n = (du, conj(du), dv, conj(dv))_n of a breather evolve
// under S H'' phi = i lambda phi, where H'' = L + eps*Delta is the Hermitian
// Hessian of the combined energy H - (E/2) Q and S is the per-site symplectic
// block. Eigenvalues come in pairs/quartets; purely imaginary eigenvalues
// carry a Krein signature sign<H'' phi, phi>, and the Hamilton-Krein index
// K_HAM = k_r + 2 k_c + 2 k_i^- equals n_pos(H'') minus one when dQ/dE > 0.
// ============================================================================

// Band computation hit a point where the linear dispersion leaves the
// imaginary axis (broken PT phase).
struct broken_pt_error : std::domain_error {
  explicit broken_pt_error(const std::string& what) : std::domain_error(what) {}
};

// dQ/dE vanished where the index formula needs a definite sign.
struct degenerate_slope_error : std::domain_error {
  explicit degenerate_slope_error(const std::string& what)
      : std::domain_error(what) {}
};

// --------------------------------------------------------------------------
// Operators
// --------------------------------------------------------------------------

struct HessianOperator {
  int half_width = 0;
  Eigen::MatrixXcd matrix;           // 4(2N+1) square, Hermitian
  double hermiticity_defect = 0.0;   // max |M - M^dagger|
};

struct SymplecticS {
  int half_width = 0;
  Eigen::MatrixXd matrix;            // block-diagonal per-site S; S^2 = I
};

// Per-site block S maps (a, b, c, d) -> (c, -d, a, -b).
SymplecticS symplectic_matrix(int half_width);

// H'' = L + eps*Delta with Dirichlet ends, built from U (V = conj(U)).
// Throws std::logic_error if the assembled matrix is not Hermitian to 1e-14.
HessianOperator assemble_hessian(const BreatherSolution& sol);

// Blocks (U, -conj(U), V, -conj(V)): the gauge kernel direction sigma*Phi.
Eigen::VectorXcd gauge_kernel_vector(const LatticeField& U);

// --------------------------------------------------------------------------
// Spectrum of -i S H''
// --------------------------------------------------------------------------

struct IndexCounts {
  int k_r = 0;        // positive real eigenvalues
  int k_c = 0;        // quadruplets off both axes
  int k_i_minus = 0;  // imaginary pairs with positive <H'' phi, phi>
  int k_ham = 0;      // k_r + 2 k_c + 2 k_i_minus
};

struct HessianInertia {
  int n_neg = 0;
  int n_zero = 0;
  int n_pos = 0;
};

struct SpectrumReport {
  std::vector<complexd> eigenvalues;   // sorted by (Im, Re)
  Eigen::MatrixXcd eigenvectors;       // unit columns, aligned with eigenvalues
  double max_real = 0.0;               // max Re(lambda) outside the zero cluster
  int zero_multiplicity = 0;           // count of |lambda| < 1e-6
  double zero_gap_ratio = 0.0;         // smallest nonzero / largest zero-cluster
  std::vector<double> central_mass;    // eigenvector mass within |n| <= 2
  std::vector<bool> band;              // mass-based diagnostic: > 50% outside
  std::vector<int> krein_signs;        // +1/-1 for imaginary modes, else 0
  std::vector<double> krein_quadratic; // raw <H'' phi, phi> (NaN where n/a)
  std::vector<bool> krein_indeterminate;
  IndexCounts counts;
  HessianInertia inertia;
};

// Dense eigendecomposition of -i S H''. Isolated imaginary modes get their
// Krein sign from the per-vector quadratic form; band-classified modes from
// the anticontinuum limit signs 2*Omega*E0*(E0 +- |E|) of their family.
SpectrumReport eigen_spectrum(const BreatherSolution& sol);

// Sign of <H'' phi, phi> for an isolated imaginary eigenvalue; |form| below
// 1e-8 is reported indeterminate (near-resonance). Non-imaginary lambda
// (|Re| > 1e-8) raises std::domain_error.
struct KreinSignature {
  double quadratic_form = 0.0;
  int sign = 0;
  bool indeterminate = false;
};
KreinSignature krein_signature(complexd lambda, const Eigen::VectorXcd& eigvec,
                               const HessianOperator& H);

// --------------------------------------------------------------------------
// Kernel structure and the Hamilton-Krein index
// --------------------------------------------------------------------------

struct KernelCheck {
  double kernel_residual = 0.0;      // |H''(sigma Phi)|_sup
  double gen_kernel_residual = 0.0;  // |S H''(dPhi/dE) - sigma Phi|_sup
  double slope_q_numeric = 0.0;      // centred finite difference of Q in E
};

// Re-solves the stationary problem at E +- dE (warm-started from sol) to form
// dPhi/dE by central differencing, then verifies the double-zero structure
// H''(sigma Phi) = 0 and S H''(dPhi/dE) = sigma Phi. Failures to obtain the
// neighbouring solutions raise std::invalid_argument.
KernelCheck kernel_and_generalized_kernel(const BreatherSolution& sol, double dE);

struct IndexCrossCheck {
  IndexCounts counts;                // from eigenvalue counting
  HessianInertia inertia;            // of H''
  double slope_q = 0.0;              // dQ/dE (anticontinuum closed form)
  int khm_from_counting = 0;         // k_r + 2 k_c + 2 k_i_minus
  int khm_from_inertia = 0;          // n_pos(H'') - (dQ/dE > 0 ? 1 : 0)
  bool consistent = false;
};

// Cross-checks the two sides of the Hamilton-Krein identity. Requires the
// double zero eigenvalue (zero_multiplicity == 2, std::domain_error else)
// and a definite slope (degenerate_slope_error when |dQ/dE| < 1e-10).
IndexCrossCheck hamilton_krein_index(const SpectrumReport& report,
                                     const BreatherSolution& sol);

// --------------------------------------------------------------------------
// Background (zero equilibrium) and continuous bands
// --------------------------------------------------------------------------

struct ZeroEquilibrium {
  double gamma0 = 0.0;           // PT threshold: Omega - 4 eps (Omega > 0),
                                 // |Omega| (Omega < 0), 0 at Omega = 0
  bool stable = false;           // all omega(k) real and nondegenerate
  std::vector<double> k;         // sampled wavenumbers in [-pi, pi]
  std::vector<complexd> omega;   // dispersion 2 omega = sqrt((Omega-4 eps sin^2(k/2))^2 - gamma^2)
};

ZeroEquilibrium zero_equilibrium_stability(const ModelParams& p,
                                           int k_samples = 201);

struct BandInterval {
  double lo = 0.0, hi = 0.0;  // imaginary parts, lo <= hi
};

struct BandEdges {
  double w_min = 0.0, w_max = 0.0;        // range of the band frequency w(k)
  std::array<BandInterval, 4> intervals;  // Im lambda for +i(E+w), +i(E-w),
                                          // -i(E-w), -i(E+w)
};

// Four branches lambda = +-i(E +- w(k)), w(k) = sqrt((Omega-4 eps sin^2(k/2))^2
// - gamma^2). Requires |Omega| > |gamma| (std::domain_error); raises
// broken_pt_error when w(k) leaves the real line for some k.
BandEdges band_edges(const ModelParams& p, double E);

}  // namespace ptlab
