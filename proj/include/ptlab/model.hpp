#pragma once

#include <utility>

#include "ptlab/lattice.hpp"

namespace ptlab {

// ============================================================================
// Evaluation of the PT lattice vector field, its conserved quantities, and
// the change of variables to the driven-chain envelope fields (A, B).
// ============================================================================

// Right-hand side (du/dt, dv/dt) of the first-order system.
UVState vector_field(const UVState& s, const ModelParams& p);

// Residual of the stationary (PT-reduced) problem with V = conj(U):
//   R_n = eps (Ubar_{n+1} - 2 Ubar_n + Ubar_{n-1}) + Omega Ubar_n
//         + i gamma U_n + 6 |U_n|^2 Ubar_n + 2 U_n^3 - E U_n .
// A breather u_n(t) = U_n exp(-i E t / 2), v_n(t) = Ubar_n exp(-i E t / 2)
// solves the flow iff R = 0.
Eigen::VectorXcd stationary_residual(const LatticeField& U,
                                     const ModelParams& p, double E);

// Conserved energy of the truncated chain (boundary bonds to the zero ghosts
// included, so the truncated flow conserves it exactly):
//   H = sum_n (|u|^2+|v|^2)^2 + (u vbar + ubar v)^2 + Omega (|u|^2+|v|^2)
//       + i gamma (u vbar - ubar v)
//       - eps sum_bonds |u_{n+1}-u_n|^2 + |v_{n+1}-v_n|^2 .
double energy(const UVState& s, const ModelParams& p);

// Conserved charge Q = sum_n (u vbar + ubar v) = 2 sum_n Re(u vbar).
double charge(const UVState& s);

// Envelope change of variables: u = (A - i Bbar)/4, v = (A + i Bbar)/4.
UVState ab_to_uv(const LatticeField& A, const LatticeField& B);

// Inverse map: A = 2(u + v), B = 2i (vbar - ubar).
std::pair<LatticeField, LatticeField> uv_to_ab(const UVState& s);

// Parity P swaps the u and v blocks; with reverse_time also conjugates the
// entries (the T part). PT (= both) is an involution whose fixed points are
// exactly the stationary states with V = conj(U).
UVState pt_apply(const UVState& s, bool reverse_time = false);

}  // namespace ptlab
