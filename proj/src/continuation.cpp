#include "ptlab/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Dense>

#include "ptlab/model.hpp"

namespace ptlab {

namespace {

// ============================================================================
// Newton machinery
//
// Unknowns are the real pairs (Re U_n, Im U_n). In the full-lattice mode the
// sites run n = -N .. N; in the symmetric mode only n = 0 .. N are unknowns
// and the field is mirrored, which turns the n = 0 row's neighbour coupling
// into 2 eps (U_{-1} = U_{+1}).
//
// The residual row R_n depends on (U_m, conj(U_m)) through the Wirtinger
// derivatives
//   a = dR_n/dU_n      = -E + i gamma + 6 conj(U_n)^2 + 6 U_n^2
//   b = dR_n/dconj(U_n) = Omega - 2 eps + 12 |U_n|^2
//   dR_n/dconj(U_{n+-1}) = eps,          dR_n/dU_{n+-1} = 0,
// and a complex pair (a, b) maps to the real 2x2 block
//   [ Re(a + b)   Re(i (a - b)) ]
//   [ Im(a + b)   Im(i (a - b)) ].
// ============================================================================

void write_block(Eigen::MatrixXd& J, int row, int col, complexd a, complexd b) {
  const complexd s = a + b;
  const complexd d = complexd(0.0, 1.0) * (a - b);
  J(2 * row, 2 * col) = std::real(s);
  J(2 * row, 2 * col + 1) = std::real(d);
  J(2 * row + 1, 2 * col) = std::imag(s);
  J(2 * row + 1, 2 * col + 1) = std::imag(d);
}

LatticeField mirrored(const LatticeField& half_values, int half_width) {
  LatticeField full(half_width);
  for (int n = 0; n <= half_width; ++n) {
    full(n) = half_values(n);
    full(-n) = half_values(n);
  }
  return full;
}

struct NewtonSystem {
  const ModelParams& p;
  double E;
  int half_width;
  bool symmetric;

  int sites() const { return symmetric ? half_width + 1 : 2 * half_width + 1; }
  int site_of(int row) const { return symmetric ? row : row - half_width; }

  // Full-lattice field represented by the unknown vector x.
  LatticeField field_of(const Eigen::VectorXd& x) const {
    if (symmetric) {
      LatticeField half(half_width);
      for (int n = 0; n <= half_width; ++n)
        half(n) = complexd(x[2 * n], x[2 * n + 1]);
      return mirrored(half, half_width);
    }
    LatticeField f(half_width);
    for (int j = 0; j < sites(); ++j)
      f(j - half_width) = complexd(x[2 * j], x[2 * j + 1]);
    return f;
  }

  Eigen::VectorXd unknowns_of(const LatticeField& f) const {
    Eigen::VectorXd x(2 * sites());
    for (int j = 0; j < sites(); ++j) {
      const complexd u = f(site_of(j));
      x[2 * j] = std::real(u);
      x[2 * j + 1] = std::imag(u);
    }
    return x;
  }

  // Residual rows for the unknown sites, interleaved (Re, Im); also reports
  // the sup-norm over the whole lattice.
  Eigen::VectorXd residual(const LatticeField& full, double* sup) const {
    const Eigen::VectorXcd r = stationary_residual(full, p, E);
    if (sup) *sup = r.cwiseAbs().maxCoeff();
    Eigen::VectorXd out(2 * sites());
    for (int j = 0; j < sites(); ++j) {
      const complexd rj = r[site_of(j) + half_width];
      out[2 * j] = std::real(rj);
      out[2 * j + 1] = std::imag(rj);
    }
    return out;
  }

  Eigen::MatrixXd jacobian(const LatticeField& full) const {
    const int m = sites();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int j = 0; j < m; ++j) {
      const int n = site_of(j);
      const complexd u = full(n);
      const complexd ub = std::conj(u);
      const complexd a = -E + complexd(0.0, p.gamma) + 6.0 * ub * ub + 6.0 * u * u;
      const complexd b = p.omega - 2.0 * p.eps + 12.0 * std::norm(u);
      write_block(J, j, j, a, b);
      if (symmetric) {
        // dR_n/dconj(U_{n+1}) = eps, doubled on the n = 0 row by mirroring.
        if (j + 1 < m) write_block(J, j, j + 1, 0.0, j == 0 ? 2.0 * p.eps : p.eps);
        if (j - 1 >= 0) write_block(J, j, j - 1, 0.0, p.eps);
      } else {
        if (j + 1 < m) write_block(J, j, j + 1, 0.0, p.eps);
        if (j - 1 >= 0) write_block(J, j, j - 1, 0.0, p.eps);
      }
    }
    return J;
  }
};

// LU with a relative pivot-ratio singularity guard.
Eigen::VectorXd solve_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& rhs) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double pmax = pivots.maxCoeff();
  const double pmin = pivots.minCoeff();
  if (!(pmin > pmax * 1e-12)) {
    char msg[128];
    std::snprintf(msg, sizeof(msg),
                  "stationary Jacobian is numerically singular (pivot ratio %.3e)",
                  pmax > 0.0 ? pmin / pmax : 0.0);
    throw singular_jacobian_error(msg);
  }
  return lu.solve(rhs);
}

bool measure_symmetry(const LatticeField& f) {
  double dev = 0.0;
  for (int n = 1; n <= f.half_width(); ++n)
    dev = std::max(dev, std::abs(f(n) - f(-n)));
  return dev <= 1e-12;
}

}  // namespace

// ============================================================================
// Seeding and the Newton solver
// ============================================================================

LatticeField seed_field(const DimerPoint& pt, int half_width) {
  if (half_width < 1) throw std::invalid_argument("half_width must be >= 1");
  LatticeField f(half_width);
  f(0) = pt.U0();
  return f;
}

BreatherSolution newton_solve(const LatticeField& start, const DimerPoint& seed,
                              const ModelParams& p, double E,
                              const NewtonOptions& opts) {
  const int N = start.half_width();
  if (N < 1) throw std::invalid_argument("half_width must be >= 1");
  NewtonSystem sys{p, E, N, opts.enforce_symmetry};

  LatticeField current = start;
  if (opts.enforce_symmetry) {
    // Symmetrise the start so the half-lattice representation is faithful.
    LatticeField half(N);
    for (int n = 0; n <= N; ++n) half(n) = 0.5 * (start(n) + start(-n));
    current = mirrored(half, N);
  }

  double res_sup = 0.0;
  Eigen::VectorXd r = sys.residual(current, &res_sup);

  int iters = 0;
  while (true) {
    if (res_sup <= opts.tol) {
      // Accept, but still insist on an invertible Jacobian at the solution:
      // a singular linearisation here means the family cannot be continued
      // (anticontinuum exceptional point, band edge), which callers must see.
      (void)solve_step(sys.jacobian(current), r);
      break;
    }
    if (iters >= opts.max_iters)
      throw no_convergence_error("Newton did not reach tolerance", res_sup, iters);

    const Eigen::VectorXd step = solve_step(sys.jacobian(current), r);
    Eigen::VectorXd x = sys.unknowns_of(current);

    // Damping: halve the step until the residual sup-norm decreases.
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 11; ++k, t *= 0.5) {
      const Eigen::VectorXd trial = x - t * step;
      const LatticeField f = sys.field_of(trial);
      double trial_sup = 0.0;
      (void)sys.residual(f, &trial_sup);
      if (trial_sup < res_sup) {
        current = f;
        res_sup = trial_sup;
        accepted = true;
        break;
      }
    }
    ++iters;
    if (!accepted)
      throw no_convergence_error("Newton stalled: damping floor reached", res_sup,
                                 iters);
    r = sys.residual(current, &res_sup);
  }

  BreatherSolution sol;
  sol.params = p;
  sol.E = E;
  sol.field = current;
  sol.seed = seed;
  sol.residual_norm = res_sup;
  sol.newton_iters = iters;
  sol.symmetric = measure_symmetry(current);
  return sol;
}

double seed_deviation(const BreatherSolution& sol) {
  return std::abs(sol.field(0) - sol.seed.U0()) + sol.field.tail_sup(0);
}

// ============================================================================
// Continuation in eps
// ============================================================================

namespace {

// Advance from a converged state at eps_from to eps_to, bisecting the step on
// failure (depth-limited). Returns the solution at exactly eps_to.
BreatherSolution advance_eps(const LatticeField& state, const DimerPoint& pt,
                             ModelParams p, double E, double eps_from,
                             double eps_to, const NewtonOptions& opts,
                             int depth) {
  p.eps = eps_to;
  try {
    return newton_solve(state, pt, p, E, opts);
  } catch (const std::runtime_error&) {
    const double mid = 0.5 * (eps_from + eps_to);
    if (depth >= 6 || !(mid > std::min(eps_from, eps_to) &&
                        mid < std::max(eps_from, eps_to)))
      throw;
    const BreatherSolution half =
        advance_eps(state, pt, p, E, eps_from, mid, opts, depth + 1);
    return advance_eps(half.field, pt, p, E, mid, eps_to, opts, depth + 1);
  }
}

}  // namespace

EpsPath continue_eps(const DimerPoint& pt, const std::vector<double>& eps_values,
                     int half_width, const NewtonOptions& opts) {
  if (eps_values.empty())
    throw std::invalid_argument("eps_values must be non-empty");
  if (!std::is_sorted(eps_values.begin(), eps_values.end()))
    throw std::invalid_argument("eps_values must be ascending");

  EpsPath path;
  LatticeField state = seed_field(pt, half_width);
  const ModelParams base{pt.gamma, pt.omega, 0.0};
  double eps_prev = 0.0;

  for (std::size_t k = 0; k < eps_values.size(); ++k) {
    const double target = eps_values[k];
    try {
      BreatherSolution sol =
          advance_eps(state, pt, base, pt.E, eps_prev, target, opts, 0);
      state = sol.field;
      eps_prev = target;
      path.eps_values.push_back(target);
      path.solutions.push_back(std::move(sol));
      path.eps_reached = target;
    } catch (const std::runtime_error& err) {
      if (k == 0) throw;  // first-step failure propagates to the caller
      path.stop_reason = err.what();
      path.completed = false;
      return path;
    }
  }
  path.completed = true;
  return path;
}

// ============================================================================
// Continuation in E
// ============================================================================

std::vector<SweepPoint> continue_E(Branch branch, const std::vector<double>& E_grid,
                                   const ModelParams& p, int half_width,
                                   const NewtonOptions& opts,
                                   double endpoint_exclusion) {
  std::vector<SweepPoint> out;
  out.reserve(E_grid.size());

  // Excluded rotation frequencies: E = 0 always, E = +-E0 when it exists.
  std::vector<double> excluded{0.0};
  if (p.omega * p.omega > p.gamma * p.gamma) {
    const double e0 = linear_threshold_E0(p.gamma, p.omega);
    excluded.push_back(e0);
    excluded.push_back(-e0);
  }

  std::optional<LatticeField> warm;
  for (double E : E_grid) {
    SweepPoint entry;
    entry.E = E;

    double dist = std::numeric_limits<double>::infinity();
    for (double x : excluded) dist = std::min(dist, std::abs(E - x));
    if (dist < endpoint_exclusion) {
      entry.excluded = true;
      entry.failure = "excluded: within the endpoint guard of E in {0, +-E0}";
      out.push_back(std::move(entry));
      continue;
    }

    DimerPoint pt;
    try {
      pt = solve_for_E(p.gamma, p.omega, E, branch);
    } catch (const std::exception& err) {
      entry.failure = err.what();
      out.push_back(std::move(entry));
      continue;
    }

    bool done = false;
    if (warm) {
      try {
        BreatherSolution sol = newton_solve(*warm, pt, p, E, opts);
        warm = sol.field;
        entry.converged = true;
        entry.solution = std::move(sol);
        done = true;
      } catch (const std::runtime_error&) {
        // fall through to a cold start from this point's own seed
      }
    }
    if (!done) {
      try {
        const int steps = std::max(1, static_cast<int>(std::ceil(p.eps / 0.01)));
        std::vector<double> ladder(steps);
        for (int i = 0; i < steps; ++i) ladder[i] = p.eps * (i + 1) / steps;
        EpsPath fresh = continue_eps(pt, ladder, half_width, opts);
        if (fresh.completed) {
          BreatherSolution sol = fresh.solutions.back();
          warm = sol.field;
          entry.converged = true;
          entry.solution = std::move(sol);
        } else {
          entry.failure = "cold start stalled at eps = " +
                          std::to_string(fresh.eps_reached) + ": " +
                          fresh.stop_reason;
        }
      } catch (const std::runtime_error& err) {
        entry.failure = err.what();
      }
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace ptlab
