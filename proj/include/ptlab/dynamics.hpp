#pragma once

#include <vector>

#include "ptlab/continuation.hpp"
#include "ptlab/dimer.hpp"
#include "ptlab/model.hpp"

namespace ptlab {

// ============================================================================
// Time integration: the PT lattice, its linearization about a breather, the
// driven pendula chain it models, and the envelope-accuracy validator.
//
// All integrators use the classical explicit 4th-order Runge-Kutta scheme.
// The gain/loss chain is conservative only in the cross-gradient sense, so
// conservation of H and Q is monitored, never enforced.
// ============================================================================

// One sampled point of a lattice trajectory. H and Q are recomputed from the
// stored state (stored purely for convenience).
struct TrajectorySample {
  double t = 0.0;
  UVState state;
  double H = 0.0;
  double Q = 0.0;
};

// A run either reaches T or stops early when the sup-norm exceeds 1e6 (the
// expected outcome in gain-dominated regimes); the last sample holds the
// state just before blow-up.
struct PtTrajectory {
  std::vector<TrajectorySample> samples;
  bool diverged = false;
  double blow_up_time = 0.0;  // meaningful only when diverged
};

// Integrates the full nonlinear chain from `initial` over [0, T]. A negative
// T integrates backwards over [T, 0] (samples then carry decreasing negative
// times), which is how the time-reversal symmetry v_n(t) = conj(u_n(-t)) can
// be checked numerically. Requires T != 0, 0 < dt <= 1e-2 and
// sample_every >= 1; samples are taken at t = 0, every sample_every steps,
// and at T.
PtTrajectory integrate_pt_dnls(const UVState& initial, const ModelParams& p,
                               double T, double dt, int sample_every = 100);

// Least-squares growth rate of log ||perturbation|| over the last half of
// [0, T]. Perturbations of a breather behave like exp(lambda t / 2), so the
// returned rate estimates max Re lambda / 2. The fit residual is the rms
// misfit normalised by (1 + |total fitted trend|); a residual above 10%
// (e.g. a purely oscillatory norm observed over too short a window) marks
// the rate as inconclusive.
struct GrowthFit {
  double growth_rate = 0.0;
  double fit_residual = 0.0;
  bool conclusive = false;
};

// Integrates the linearisation about `sol` in the co-rotating frame, where
// the coefficients are time-independent. The norm is rescaled on the fly, so
// strongly unstable runs cannot overflow.
GrowthFit integrate_linearized(const BreatherSolution& sol,
                               const UVState& perturbation, double T,
                               double dt);

// Deviation history of a kicked breather in the co-rotating frame:
//   deviation(t) = min over alpha of || e^{i alpha} psi(t) - Phi ||_2
//                = sqrt( ||psi||^2 + ||Phi||^2 - 2 |<psi, Phi>| ),
// the gauge angle alpha = -arg <psi, Phi> being the exact minimiser. The
// initial kick is a fixed unit-norm two-site vector scaled by delta, so runs
// are deterministic. Divergence reports max_deviation = +infinity together
// with the blow-up time.
struct OrbitalProbe {
  double max_deviation = 0.0;
  bool diverged = false;
  double blow_up_time = 0.0;
  std::vector<double> times;
  std::vector<double> deviations;
};

// Requires 0 <= delta <= 1e-2.
OrbitalProbe orbital_probe(const BreatherSolution& sol, double delta, double T,
                           double dt = 1e-3, int sample_every = 100);

// ============================================================================
// The driven pendula chain
//
//   xddot_n + sin(x_n) = C (x_{n+1} - 2 x_n + x_{n-1}) + D(t) y_n,
//   yddot_n + sin(y_n) = C (y_{n+1} - 2 y_n + y_{n-1}) + D(t) x_n,
//
// with C = eps mu^2, D(t) = 2 gamma mu^2 cos(2 w t), w = sqrt(1 + mu^2 Omega),
// truncated to 2 half_width + 1 sites with zero Dirichlet end angles.
// ============================================================================

// mu in (0, 1/2]; gamma, omega_detune (Omega), eps_coupling (eps) are the
// mu-independent parameters shared with ModelParams. Derived quantities are
// always recomputed, never stored.
struct PendulaParams {
  double mu = 0.1;
  double gamma = 1.0;
  double omega_detune = 2.0;
  double eps_coupling = 0.0;

  double coupling() const { return eps_coupling * mu * mu; }
  double drive_amplitude() const { return 2.0 * gamma * mu * mu; }
  double frequency() const;  // w; throws std::domain_error if 1 + mu^2 Omega <= 0
  double drive(double t) const;  // D(t) = drive_amplitude() * cos(2 w t)
};

// Throws std::invalid_argument unless mu in (0, 1/2] and the drive frequency
// is real.
void validate(const PendulaParams& pp);

// Angles and angular velocities of the two arrays; all four sequences share
// one length (checked by the integrator).
struct PendulaState {
  std::vector<double> x, y, xdot, ydot;
};

struct PendulaSample {
  double t = 0.0;
  PendulaState state;
  double energy = 0.0;  // H_{x,y}(t), drive term included
};

struct PendulaTrajectory {
  std::vector<PendulaSample> samples;
  bool diverged = false;
  double blow_up_time = 0.0;
};

// Energy of the truncated chain at time t (the drive makes it t-dependent):
//   H = sum_n 1/2 (xdot^2 + ydot^2) + 2 - cos x - cos y - D(t) x y
//       + C/2 sum_bonds (x_{n+1} - x_n)^2 + (y_{n+1} - y_n)^2,
// boundary bonds to the zero walls included, so with gamma = 0 the truncated
// flow conserves H exactly.
double pendula_energy(const PendulaState& s, const PendulaParams& pp,
                      double t);

// Requires 0 < dt <= 1e-2; the drive D(t) is evaluated exactly at the
// Runge-Kutta stage times. Blow-up (any |angle| or |velocity| > 1e6, or a
// non-finite value) stops the run with a divergence report.
PendulaTrajectory integrate_pendula(const PendulaState& initial,
                                    const PendulaParams& pp, double T,
                                    double dt, int sample_every = 100);

// ============================================================================
// Envelope validation
//
// The chain above is modelled, for small mu, by the coupled envelope system
//   2i dA_n/dtau = eps (A_{n+1} - 2A_n + A_{n-1}) + Omega A_n + gamma conj(B_n)
//                  + 1/2 |A_n|^2 A_n          (and symmetrically for B),
// via x_n(t) ~ mu [ A_n(mu^2 t) e^{i w t} + c.c. ], with remainder O(mu^3).
// ============================================================================

// Envelope amplitudes on the lattice.
struct ABState {
  LatticeField A;
  LatticeField B;
};

// Right-hand side (dA/dtau, dB/dtau) of the envelope system in slow time.
ABState envelope_field(const ABState& s, const ModelParams& p);

struct MultiscaleReport {
  double error_norm = 0.0;  // max over samples of sup_n of the envelope error
  double mu_used = 0.0;
  std::vector<double> t_phys;  // sampled fast times
  std::vector<double> errors;  // sup_n |x_n - envelope| at each sample
  bool diverged = false;
  double blow_up_time = 0.0;
};

// Synthesises pendula data from (A, B) at tau = 0 with zero remainder
// (velocities include the slow chain-rule term), then integrates the pendula
// to fast time T_slow / mu^2 and the envelope system to slow time T_slow in
// lockstep (dt_slow = mu^2 dt_fast), comparing at every sample:
//   error(t) = sup_n max( |x_n(t) - mu(A_n e^{iwt} + c.c.)|,
//                         |y_n(t) - mu(B_n e^{iwt} + c.c.)| ).
// The (gamma, Omega, eps) of the envelope system are taken from pp, so both
// models are driven by the same parameters by construction.
MultiscaleReport multiscale_validate(const ABState& initial,
                                     const PendulaParams& pp, double T_slow,
                                     double dt_fast = 1e-2,
                                     int sample_every = 10);

// Convenience overload: single-site envelope data from an anticontinuum
// point, placed at the centre of a lattice of the given half-width.
MultiscaleReport multiscale_validate(const DimerPoint& pt,
                                     const PendulaParams& pp, double T_slow,
                                     int half_width, double dt_fast = 1e-2,
                                     int sample_every = 10);

}  // namespace ptlab
