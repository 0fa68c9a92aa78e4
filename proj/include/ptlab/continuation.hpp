#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ptlab/dimer.hpp"
#include "ptlab/lattice.hpp"

namespace ptlab {

// ============================================================================
// Breather continuation
//
// A breather u_n(t) = U_n e^{-iEt/2}, v_n = conj(u_n), solves the stationary
// system
//
//   E U_n = eps (Ub_{n+1} - 2 Ub_n + Ub_{n-1}) + Omega Ub_n + i gamma U_n
//           + 6 |U_n|^2 Ub_n + 2 U_n^3,        Ub = conj(U).
//
// At eps = 0 the solution is a one-site state U_0 = A e^{i theta} given by a
// DimerPoint; for small eps > 0 it continues to an exponentially localised
// lattice profile. This module provides the damped Newton solver for the
// truncated chain and the continuation drivers in eps and in E.
// ============================================================================

struct NewtonOptions {
  double tol = 1e-12;          // acceptance: sup-norm of the residual
  int max_iters = 50;          // Newton iteration budget
  bool enforce_symmetry = false;  // solve on the half lattice with U_{-n}=U_n
};

struct BreatherSolution {
  ModelParams params;          // gamma, omega, eps of the solved equation
  double E = 0.0;              // rotation frequency of the breather
  LatticeField field;          // U; v = conj(u) is implied
  DimerPoint seed;             // anticontinuum point the family grew from
  double residual_norm = 0.0;  // sup-norm of the stationary residual
  int newton_iters = 0;        // accepted Newton steps
  bool symmetric = false;      // U_{-n} = U_n holds to 1e-12
};

// One-site anticontinuum profile: U_0 = A e^{i theta}, all other sites zero.
LatticeField seed_field(const DimerPoint& pt, int half_width);

// Damped Newton iteration on 2(2 half_width + 1) real unknowns (Re U, Im U)
// with the analytic Jacobian; step halving whenever the residual sup-norm
// fails to decrease. The Jacobian is LU-factored with full pivoting and a
// relative pivot ratio below 1e-12 raises singular_jacobian_error (expected
// at the anticontinuum exceptional point 2(Omega + 4A^2)^3 = Omega gamma^2
// and at the linear-band edges E = +-E0). Non-convergence within the budget
// raises no_convergence_error carrying the last residual.
BreatherSolution newton_solve(const LatticeField& start, const DimerPoint& seed,
                              const ModelParams& p, double E,
                              const NewtonOptions& opts = {});

// |U_0 - A e^{i theta}| + sup_{n != 0} |U_n|: distance from the seed profile.
// Divided by eps this estimates the continuation constant C0.
double seed_deviation(const BreatherSolution& sol);

// --------------------------------------------------------------------------
// Continuation in eps at fixed E
// --------------------------------------------------------------------------

struct EpsPath {
  std::vector<double> eps_values;          // converged prefix of the request
  std::vector<BreatherSolution> solutions; // one entry per converged eps
  bool completed = false;                  // whole request converged
  double eps_reached = 0.0;                // largest converged eps
  std::string stop_reason;                 // diagnostic when !completed
};

// Walks the ascending eps grid, warm-starting each solve from the previous
// solution. A failed step is bisected (up to 6 halvings) before giving up;
// on giving up the path is returned truncated with eps_reached set. Failure
// of the very first step propagates the solver error instead.
EpsPath continue_eps(const DimerPoint& pt, const std::vector<double>& eps_values,
                     int half_width, const NewtonOptions& opts = {});

// --------------------------------------------------------------------------
// Continuation in E at fixed eps
// --------------------------------------------------------------------------

struct SweepPoint {
  double E = 0.0;
  bool converged = false;
  bool excluded = false;   // skipped by the endpoint-exclusion policy
  std::string failure;     // diagnostic when not converged and not excluded
  std::optional<BreatherSolution> solution;
};

// Warm-started sweep along the E grid at fixed eps. Grid points within
// `endpoint_exclusion` of E in {0, +-E0} are skipped (the continuation
// theorem excludes them); per-point failures are recorded and the sweep
// continues. Results are ordered by grid index.
std::vector<SweepPoint> continue_E(Branch branch, const std::vector<double>& E_grid,
                                   const ModelParams& p, int half_width,
                                   const NewtonOptions& opts = {},
                                   double endpoint_exclusion = 1e-3);

}  // namespace ptlab
