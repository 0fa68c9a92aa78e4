#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ptlab/lattice.hpp"

namespace ptlab {

// ============================================================================
// Closed-form analysis of the anticontinuum (eps = 0) single-site states.
//
// At eps = 0 a one-site stationary state U0 = A e^{i theta} satisfies
//   sin(2 theta) = gamma / (4 A^2 + Omega),
//   cos(2 theta) = E / (8 A^2 + Omega),
//   E^2 = (8 A^2 + Omega)^2 [ 1 - gamma^2 / (4 A^2 + Omega)^2 ].
// Solution families are organised into three branches by the sign of
// 4 A^2 + Omega and the size of |E| relative to E0 = sqrt(Omega^2 - gamma^2).
// ============================================================================

enum class Branch { a, b, c };

std::string branch_name(Branch b);

// E0 = sqrt(Omega^2 - gamma^2); throws std::domain_error when |Omega| < |gamma|
// (the linear PT-broken regime, where no threshold exists).
double linear_threshold_E0(double gamma, double omega);

// One anticontinuum single-site state.
struct DimerPoint {
  double gamma = 0.0;
  double omega = 0.0;
  Branch branch = Branch::a;
  double amp_sq = 0.0;  // A^2
  double E = 0.0;       // eigenparameter, sign included
  double theta = 0.0;   // phase of U0 = A e^{i theta}, in (-pi/2, pi/2]

  complexd U0() const;
};

// Existence window of one branch at fixed (gamma, omega).
struct BranchWindow {
  Branch branch;
  bool exists;
  double E0;            // linear threshold (NaN when |Omega| < |gamma|)
  double amp_sq_min;    // admissible A^2 interval; the lower endpoint is
  double amp_sq_max;    // attained on (b) (E = 0), the upper on (c) (E = 0)
  double abs_E_min;     // |E| range swept as A^2 runs over the window
  double abs_E_max;     // (+inf allowed)
  bool e_sq_increasing; // monotonicity of E^2 as a function of A^2
};

// Branches that exist at (gamma, omega):
//   Omega >  |gamma|          -> { a }
//   -|gamma| < Omega < |gamma| -> { b }
//   Omega < -|gamma|          -> { b, c }
// gamma = 0 or |Omega| = |gamma| is rejected (degenerate thresholds).
std::vector<BranchWindow> classify_branches(double gamma, double omega);

// E^2 as a function of A^2 (any branch; caller checks admissibility).
double e_squared_of_amp(double gamma, double omega, double amp_sq);

// d(E^2)/d(A^2) = 8 (8A^2+Omega) [2 (4A^2+Omega)^3 - gamma^2 Omega]
//                 / (4A^2+Omega)^3 .
double de_squared_damp(double gamma, double omega, double amp_sq);

// Builds the point at a given amplitude on a given branch; e_sign picks the
// sign of E = e_sign * sqrt(E^2). Throws std::domain_error when amp_sq is
// outside the branch window.
DimerPoint point_from_amplitude(double gamma, double omega, double amp_sq,
                                Branch branch, int e_sign = +1);

// Inverts E -> A^2 on a branch by bisection on the monotone map A^2 -> E^2
// (|Delta E^2| <= 1e-12 at the returned point). Throws std::domain_error for
// E outside the branch range or at an excluded endpoint (|E| = E0 on (a);
// E = 0 and |E| = E0 on (c)).
DimerPoint solve_for_E(double gamma, double omega, double E, Branch branch);

// 2x2 Jacobian of the reduced single-site fixed-point map:
//   [ p - i gamma   q ; q   p + i gamma ],
//   p = E (Omega - 4A^2) / (Omega + 8A^2),  q = -(Omega + 12 A^2),
// with eigenvalues p +- sqrt(q^2 - gamma^2). Singular exactly on the
// synchronised locus 2 (Omega + 4A^2)^3 = Omega gamma^2 (branch (c), E = 0,
// Omega = -2|gamma|).
struct DimerJacobian {
  Eigen::Matrix2cd matrix;
  std::array<complexd, 2> eigenvalues;
  bool invertible;
};
DimerJacobian dimer_jacobian(const DimerPoint& pt);

// eps = 0 spectra: the central Hessian block L0 has eigenvalues
//   {0, mu1, mu2, mu3},
//   mu1 = 2 (4A^2 + Omega),
//   mu2,3 = 12A^2 + Omega
//           +- sqrt( (4A^2 - Omega)^2 + 16 Omega A^2 gamma^2/(4A^2+Omega)^2 );
// every far site contributes the double pair mu+- = Omega +- sqrt(E^2+gamma^2).
// The linearised dynamics has the internal pair +-lambda0,
//   lambda0 = 2 i sqrt( (4A^2+Omega)^2 - Omega gamma^2 / (4A^2+Omega) ),
// (a real pair when the radicand is negative) and the band-limit pairs
// +-lambda+- with lambda+- = i (E +- E0).
struct DimerLimitSpectrum {
  double mu1, mu2, mu3;                // nonzero central eigenvalues (with 0)
  double mu_plus, mu_minus;            // far-site double eigenvalues
  complexd lambda0;                    // one member of the internal pair
  bool lambda0_imaginary;              // false -> real unstable pair
  complexd lambda_plus, lambda_minus;  // band-limit eigenvalues i (E +- E0)
};
// Throws std::domain_error when 4A^2 + Omega = 0 (off every branch).
DimerLimitSpectrum limit_spectrum(const DimerPoint& pt);

// Slope of the charge along the branch at eps = 0:
//   dQ/dE = [ (4A^2+Omega)^3 - Omega gamma^2 ]
//           / ( 2 [ 2 (4A^2+Omega)^3 - Omega gamma^2 ] ).
// Throws std::domain_error at 8A^2 + Omega = 0 (the chain-rule form divides
// by it) and on the synchronised singular locus (denominator 0).
double slope_Q(const DimerPoint& pt);

// Charge of the single-site state: Q = 2 A^2 E / (8 A^2 + Omega).
double dimer_charge(const DimerPoint& pt);

// Predicted Hamilton-Krein index of the eps -> 0 breather (valid for
// Omega < -|gamma| and 0 < |E| < E0, where the far field is definite):
//   branch (b): 2;
//   branch (c): 1 for |E| < E_s, 0 for |E| > E_s when the internal transition
//     E_s exists (Omega in (-2 sqrt(2) |gamma|, -|gamma|)), else 0.
struct KhmPrediction {
  int k_ham;
  std::optional<double> E_s;  // branch (c) transition, when it exists
};
KhmPrediction predicted_khm(double gamma, double omega, double E,
                            Branch branch);

// Location E_s in (0, E0) where lambda0 on branch (c) changes from a real
// pair to an imaginary pair; bisection on the radicand sign to 1e-9.
// Empty when Omega <= -2 sqrt(2) |gamma| (no transition).
std::optional<double> internal_transition_E(double gamma, double omega);

// First resonance of the internal mode with a band-limit eigenvalue along
// branch (b):  Im lambda0(E_*) = E_* + E0   (kind lambda_plus, Omega >= -5|gamma|)
// or           Im lambda0(E_*) = E0 - E_*   (kind minus_lambda_minus, below).
// The boundary Omega = -5|gamma| gives E_* = 0; the side of E0 on which E_*
// falls flips across Omega_* = -sqrt((1+5 sqrt 2)/2) |gamma|. A miss is not
// an error: found = false with the scan bounds reported.
struct ResonanceResult {
  bool found = false;
  double E_star = 0.0;
  enum class Kind { lambda_plus, minus_lambda_minus } kind;
  enum class Side { below_E0, above_E0 } side;
  int extra_crossings = 0;  // additional sign changes past the first one
  double scan_lo = 0.0, scan_hi = 0.0;
};
ResonanceResult resonance(double gamma, double omega);

}  // namespace ptlab
