#include "ptlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ptlab/model.hpp"

namespace ptlab {

namespace {

constexpr double kZeroCluster = 1e-6;   // |lambda| below this is "zero"
constexpr double kImagTol = 1e-8;       // |Re lambda| below this is imaginary
constexpr double kKreinIndeterminate = 1e-8;

// 4x4 site block of L at amplitude u (V = conj(U) already substituted).
Eigen::Matrix4cd site_block(complexd u, const ModelParams& p, double E) {
  const double m = std::norm(u);                       // |U|^2
  const double c = std::real(u * u + std::conj(u) * std::conj(u));  // U^2+Ub^2
  const complexd ag(-E, -p.gamma);  // -E - i gamma
  const complexd bg(-E, p.gamma);   // -E + i gamma
  Eigen::Matrix4cd L;
  L << p.omega + 8.0 * m, 2.0 * c, ag + 4.0 * c, 4.0 * m,
       2.0 * c, p.omega + 8.0 * m, 4.0 * m, bg + 4.0 * c,
       bg + 4.0 * c, 4.0 * m, p.omega + 8.0 * m, 2.0 * c,
       4.0 * m, ag + 4.0 * c, 2.0 * c, p.omega + 8.0 * m;
  return L;
}

Eigen::Matrix4d site_symplectic() {
  Eigen::Matrix4d S;
  S << 0, 0, 1, 0,
       0, 0, 0, -1,
       1, 0, 0, 0,
       0, -1, 0, 0;
  return S;
}

// Minimum of (Omega - 4 eps s)^2 over s in [0, 1].
double min_dispersion_sq(double omega, double eps) {
  const double lo = omega - 4.0 * eps;   // value at s = 1
  if (omega >= 0.0 && lo <= 0.0) return 0.0;  // crosses zero inside
  return std::min(omega * omega, lo * lo);
}

double max_dispersion_sq(double omega, double eps) {
  const double lo = omega - 4.0 * eps;
  return std::max(omega * omega, lo * lo);
}

}  // namespace

// ============================================================================
// Operators
// ============================================================================

SymplecticS symplectic_matrix(int half_width) {
  const int m = 2 * half_width + 1;
  SymplecticS S;
  S.half_width = half_width;
  S.matrix = Eigen::MatrixXd::Zero(4 * m, 4 * m);
  const Eigen::Matrix4d blk = site_symplectic();
  for (int j = 0; j < m; ++j) S.matrix.block<4, 4>(4 * j, 4 * j) = blk;
  return S;
}

HessianOperator assemble_hessian(const BreatherSolution& sol) {
  const int N = sol.field.half_width();
  const int m = 2 * N + 1;
  HessianOperator H;
  H.half_width = N;
  H.matrix = Eigen::MatrixXcd::Zero(4 * m, 4 * m);
  const double eps = sol.params.eps;
  for (int j = 0; j < m; ++j) {
    Eigen::Matrix4cd L = site_block(sol.field(j - N), sol.params, sol.E);
    L.diagonal().array() -= 2.0 * eps;  // blockwise Laplacian diagonal
    H.matrix.block<4, 4>(4 * j, 4 * j) = L;
    if (j + 1 < m) {
      H.matrix.block<4, 4>(4 * j, 4 * (j + 1)) =
          eps * Eigen::Matrix4cd::Identity();
      H.matrix.block<4, 4>(4 * (j + 1), 4 * j) =
          eps * Eigen::Matrix4cd::Identity();
    }
  }
  H.hermiticity_defect =
      (H.matrix - H.matrix.adjoint()).cwiseAbs().maxCoeff();
  if (H.hermiticity_defect > 1e-14)
    throw std::logic_error("assembled Hessian is not Hermitian");
  return H;
}

Eigen::VectorXcd gauge_kernel_vector(const LatticeField& U) {
  const int N = U.half_width();
  const int m = 2 * N + 1;
  Eigen::VectorXcd v(4 * m);
  for (int j = 0; j < m; ++j) {
    const complexd u = U(j - N);
    v[4 * j + 0] = u;
    v[4 * j + 1] = -std::conj(u);
    v[4 * j + 2] = std::conj(u);  // V = conj(U)
    v[4 * j + 3] = -u;            // -conj(V)
  }
  return v;
}

// ============================================================================
// Spectrum
// ============================================================================

KreinSignature krein_signature(complexd lambda, const Eigen::VectorXcd& eigvec,
                               const HessianOperator& H) {
  if (std::abs(std::real(lambda)) > kImagTol)
    throw std::domain_error("Krein signature requires a purely imaginary eigenvalue");
  KreinSignature out;
  const double nrm = eigvec.squaredNorm();
  out.quadratic_form =
      std::real(eigvec.dot(H.matrix * eigvec)) / (nrm > 0.0 ? nrm : 1.0);
  if (std::abs(out.quadratic_form) < kKreinIndeterminate) {
    out.indeterminate = true;
    out.sign = 0;
  } else {
    out.sign = out.quadratic_form > 0.0 ? 1 : -1;
  }
  return out;
}

SpectrumReport eigen_spectrum(const BreatherSolution& sol) {
  const HessianOperator H = assemble_hessian(sol);
  const SymplecticS S = symplectic_matrix(H.half_width);
  const int N = H.half_width;
  const int dim = 4 * (2 * N + 1);

  const Eigen::MatrixXcd M =
      complexd(0.0, -1.0) * (S.matrix * H.matrix);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(M, true);
  if (solver.info() != Eigen::Success) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "eigensolver failed to converge (dim %d, |M|_max %.3e)", dim,
                  M.cwiseAbs().maxCoeff());
    throw std::runtime_error(msg);
  }

  // Sort by (Im, Re) and normalise the eigenvectors.
  std::vector<int> order(dim);
  for (int i = 0; i < dim; ++i) order[i] = i;
  const Eigen::VectorXcd raw = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::imag(raw[a]) != std::imag(raw[b]))
      return std::imag(raw[a]) < std::imag(raw[b]);
    return std::real(raw[a]) < std::real(raw[b]);
  });

  SpectrumReport rep;
  rep.eigenvalues.resize(dim);
  rep.eigenvectors.resize(dim, dim);
  for (int i = 0; i < dim; ++i) {
    rep.eigenvalues[i] = raw[order[i]];
    rep.eigenvectors.col(i) = solver.eigenvectors().col(order[i]).normalized();
  }

  // Zero cluster, gap ratio, max real part.
  double largest_zero = 0.0;
  double smallest_nonzero = std::numeric_limits<double>::infinity();
  rep.max_real = 0.0;
  for (const complexd& lam : rep.eigenvalues) {
    const double a = std::abs(lam);
    if (a < kZeroCluster) {
      ++rep.zero_multiplicity;
      largest_zero = std::max(largest_zero, a);
    } else {
      smallest_nonzero = std::min(smallest_nonzero, a);
      rep.max_real = std::max(rep.max_real, std::real(lam));
    }
  }
  rep.zero_gap_ratio = largest_zero > 0.0
                           ? smallest_nonzero / largest_zero
                           : std::numeric_limits<double>::infinity();

  // Localisation diagnostic: eigenvector mass within sites |n| <= 2.
  rep.central_mass.resize(dim);
  rep.band.resize(dim);
  for (int i = 0; i < dim; ++i) {
    double central = 0.0;
    for (int n = -std::min(2, N); n <= std::min(2, N); ++n)
      central += rep.eigenvectors.col(i).segment<4>(4 * (n + N)).squaredNorm();
    rep.central_mass[i] = central;  // columns are unit vectors
    rep.band[i] = central < 0.5;
  }

  // Krein data. Band families use the anticontinuum limit signs
  // 2 Omega E0 (E0 +- |E|); isolated modes use the per-vector form.
  const double g = sol.params.gamma, om = sol.params.omega;
  const bool has_e0 = om * om > g * g;
  const double e0 = has_e0 ? std::sqrt(om * om - g * g) : 0.0;
  const double eabs = std::abs(sol.E);
  rep.krein_signs.assign(dim, 0);
  rep.krein_quadratic.assign(dim, std::numeric_limits<double>::quiet_NaN());
  rep.krein_indeterminate.assign(dim, false);
  for (int i = 0; i < dim; ++i) {
    const complexd lam = rep.eigenvalues[i];
    if (std::abs(lam) < kZeroCluster || std::abs(std::real(lam)) > kImagTol)
      continue;
    const KreinSignature ks =
        krein_signature(lam, rep.eigenvectors.col(i), H);
    rep.krein_quadratic[i] = ks.quadratic_form;
    if (rep.band[i] && has_e0) {
      // Assign to the nearer of the two band families in |Im lambda|.
      const double nu = std::abs(std::imag(lam));
      const double d_plus = std::abs(nu - (eabs + e0));
      const double d_minus = std::abs(nu - std::abs(eabs - e0));
      const double k_family = d_plus <= d_minus ? 2.0 * om * e0 * (e0 + eabs)
                                                : 2.0 * om * e0 * (e0 - eabs);
      rep.krein_signs[i] = k_family > 0.0 ? 1 : (k_family < 0.0 ? -1 : 0);
      rep.krein_indeterminate[i] = k_family == 0.0;
    } else {
      rep.krein_signs[i] = ks.sign;
      rep.krein_indeterminate[i] = ks.indeterminate;
    }
  }

  // Index counts over representatives: positive reals, first-quadrant
  // quadruplet members, positive-imaginary pairs with positive form.
  for (int i = 0; i < dim; ++i) {
    const complexd lam = rep.eigenvalues[i];
    if (std::abs(lam) < kZeroCluster) continue;
    const double re = std::real(lam), im = std::imag(lam);
    if (re > kImagTol && std::abs(im) <= kImagTol) ++rep.counts.k_r;
    else if (re > kImagTol && im > kImagTol) ++rep.counts.k_c;
    else if (std::abs(re) <= kImagTol && im > 0.0 &&
             rep.krein_signs[i] > 0)
      ++rep.counts.k_i_minus;
  }
  rep.counts.k_ham =
      rep.counts.k_r + 2 * rep.counts.k_c + 2 * rep.counts.k_i_minus;

  // Inertia of the Hessian itself.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hs(H.matrix);
  for (int i = 0; i < dim; ++i) {
    const double mu = hs.eigenvalues()[i];
    if (std::abs(mu) < kZeroCluster) ++rep.inertia.n_zero;
    else if (mu > 0.0) ++rep.inertia.n_pos;
    else ++rep.inertia.n_neg;
  }
  return rep;
}

// ============================================================================
// Kernel structure
// ============================================================================

KernelCheck kernel_and_generalized_kernel(const BreatherSolution& sol,
                                          double dE) {
  if (!(dE > 0.0)) throw std::invalid_argument("dE must be positive");
  const HessianOperator H = assemble_hessian(sol);
  const SymplecticS S = symplectic_matrix(H.half_width);

  KernelCheck out;
  const Eigen::VectorXcd sigma = gauge_kernel_vector(sol.field);
  out.kernel_residual = (H.matrix * sigma).cwiseAbs().maxCoeff();

  // Neighbouring solutions at E +- dE, warm-started from sol.
  auto neighbour = [&](double E) -> BreatherSolution {
    try {
      const DimerPoint pt = solve_for_E(sol.seed.gamma, sol.seed.omega, E,
                                        sol.seed.branch);
      return newton_solve(sol.field, pt, sol.params, E);
    } catch (const std::exception& err) {
      throw std::invalid_argument(
          std::string("neighbour solution unavailable at E = ") +
          std::to_string(E) + ": " + err.what());
    }
  };
  const BreatherSolution plus = neighbour(sol.E + dE);
  const BreatherSolution minus = neighbour(sol.E - dE);

  // dPhi/dE by central differencing of the block vector Phi = (U, Ub, V, Vb).
  const int N = sol.field.half_width();
  const int m = 2 * N + 1;
  Eigen::VectorXcd dphi(4 * m);
  for (int j = 0; j < m; ++j) {
    const complexd up = plus.field(j - N), um = minus.field(j - N);
    const complexd du = (up - um) / (2.0 * dE);
    dphi[4 * j + 0] = du;
    dphi[4 * j + 1] = std::conj(du);
    dphi[4 * j + 2] = std::conj(du);  // V = conj(U)
    dphi[4 * j + 3] = du;
  }
  out.gen_kernel_residual =
      (S.matrix * (H.matrix * dphi) - sigma).cwiseAbs().maxCoeff();

  auto charge_of = [](const LatticeField& U) {
    return charge(UVState{U, U.conjugated()});
  };
  out.slope_q_numeric =
      (charge_of(plus.field) - charge_of(minus.field)) / (2.0 * dE);
  return out;
}

IndexCrossCheck hamilton_krein_index(const SpectrumReport& report,
                                     const BreatherSolution& sol) {
  if (report.zero_multiplicity != 2) {
    char msg[128];
    std::snprintf(msg, sizeof(msg),
                  "index formula requires a double zero eigenvalue, found %d",
                  report.zero_multiplicity);
    throw std::domain_error(msg);
  }
  IndexCrossCheck out;
  out.counts = report.counts;
  out.inertia = report.inertia;
  try {
    out.slope_q = slope_Q(sol.seed);
  } catch (const std::domain_error& err) {
    throw degenerate_slope_error(err.what());
  }
  if (std::abs(out.slope_q) < 1e-10)
    throw degenerate_slope_error("dQ/dE vanishes at this point");
  out.khm_from_counting = report.counts.k_ham;
  out.khm_from_inertia = report.inertia.n_pos - (out.slope_q > 0.0 ? 1 : 0);
  out.consistent = out.khm_from_counting == out.khm_from_inertia;
  return out;
}

// ============================================================================
// Background and bands
// ============================================================================

ZeroEquilibrium zero_equilibrium_stability(const ModelParams& p,
                                           int k_samples) {
  if (k_samples < 2) throw std::invalid_argument("need at least 2 k samples");
  ZeroEquilibrium out;
  if (p.omega > 0.0) out.gamma0 = p.omega - 4.0 * p.eps;
  else if (p.omega < 0.0) out.gamma0 = -p.omega;
  else out.gamma0 = 0.0;  // Omega = 0: threshold collapses, reported as is

  // stable <=> (Omega - 4 eps sin^2(k/2))^2 - gamma^2 > 0 for all k.
  const double min_disc = min_dispersion_sq(p.omega, p.eps) - p.gamma * p.gamma;
  out.stable = min_disc > 0.0;

  out.k.resize(k_samples);
  out.omega.resize(k_samples);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < k_samples; ++i) {
    const double k = -pi + 2.0 * pi * i / (k_samples - 1);
    const double s = std::sin(0.5 * k);
    const double disc =
        (p.omega - 4.0 * p.eps * s * s) * (p.omega - 4.0 * p.eps * s * s) -
        p.gamma * p.gamma;
    out.k[i] = k;
    out.omega[i] = 0.5 * std::sqrt(complexd(disc, 0.0));
  }
  return out;
}

BandEdges band_edges(const ModelParams& p, double E) {
  if (!(p.omega * p.omega > p.gamma * p.gamma))
    throw std::domain_error("band edges require |Omega| > |gamma|");
  const double lo_sq = min_dispersion_sq(p.omega, p.eps) - p.gamma * p.gamma;
  const double hi_sq = max_dispersion_sq(p.omega, p.eps) - p.gamma * p.gamma;
  if (!(lo_sq > 0.0)) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "PT symmetry broken: (Omega - 4 eps sin^2(k/2))^2 - gamma^2 "
                  "reaches %.3e <= 0",
                  lo_sq);
    throw broken_pt_error(msg);
  }
  BandEdges out;
  out.w_min = std::sqrt(lo_sq);
  out.w_max = std::sqrt(hi_sq);
  out.intervals[0] = {E + out.w_min, E + out.w_max};     // +i(E + w)
  out.intervals[1] = {E - out.w_max, E - out.w_min};     // +i(E - w)
  out.intervals[2] = {out.w_min - E, out.w_max - E};     // -i(E - w)
  out.intervals[3] = {-E - out.w_max, -E - out.w_min};   // -i(E + w)
  return out;
}

}  // namespace ptlab
