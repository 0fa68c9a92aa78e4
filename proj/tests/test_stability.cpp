#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ptlab/model.hpp"
#include "ptlab/stability.hpp"

using namespace ptlab;

namespace {

// Breather at the requested point: exact dimer embedding at eps = 0, or a
// short continuation ladder for eps > 0.
BreatherSolution solve_at(Branch br, double g, double om, double E, double eps,
                          int N) {
  DimerPoint pt = solve_for_E(g, om, E, br);
  if (eps == 0.0)
    return newton_solve(seed_field(pt, N), pt, ModelParams{g, om, 0.0}, E);
  const int steps = std::max(1, static_cast<int>(std::ceil(eps / 0.01)));
  std::vector<double> ladder;
  for (int i = 1; i <= steps; ++i) ladder.push_back(eps * i / steps);
  EpsPath path = continue_eps(pt, ladder, N);
  REQUIRE(path.completed);
  return path.solutions.back();
}

int count_near(const std::vector<complexd>& lams, complexd target, double tol) {
  int c = 0;
  for (const complexd& l : lams)
    if (std::abs(l - target) <= tol) ++c;
  return c;
}

}  // namespace

// ============================================================================
// Operators
// ============================================================================

TEST_CASE("symplectic matrix: symmetric involution acting blockwise") {
  SymplecticS S = symplectic_matrix(3);
  const int dim = 4 * 7;
  CHECK((S.matrix * S.matrix - Eigen::MatrixXd::Identity(dim, dim))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((S.matrix - S.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // Block action (a, b, c, d) -> (c, -d, a, -b).
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  x.segment<4>(0) << 1.0, 2.0, 3.0, 4.0;
  Eigen::VectorXd y = S.matrix * x;
  CHECK(y[0] == 3.0);
  CHECK(y[1] == -4.0);
  CHECK(y[2] == 1.0);
  CHECK(y[3] == -2.0);
}

TEST_CASE("hessian assembly: hermitian, far blocks exact at eps = 0") {
  BreatherSolution s = solve_at(Branch::c, 1.0, -3.0, 1.2470129599623452, 0.0, 4);
  HessianOperator H = assemble_hessian(s);
  CHECK(H.hermiticity_defect <= 1e-14);

  // Away from the centre the block must match the zero-amplitude form.
  const double E = s.E, g = 1.0, om = -3.0;
  Eigen::Matrix4cd far;
  far << om, 0.0, complexd(-E, -g), 0.0,
         0.0, om, 0.0, complexd(-E, g),
         complexd(-E, g), 0.0, om, 0.0,
         0.0, complexd(-E, -g), 0.0, om;
  const int j = 1 + 4;  // site n = +1
  CHECK((H.matrix.block<4, 4>(4 * j, 4 * j) - far).cwiseAbs().maxCoeff() <=
        1e-14);

  // Central block spectrum {0, mu1, mu2, mu3} from the closed forms.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(
      H.matrix.block<4, 4>(16, 16));
  std::vector<double> mus(es.eigenvalues().data(), es.eigenvalues().data() + 4);
  std::sort(mus.begin(), mus.end());
  CHECK(mus[0] == doctest::Approx(-4.4).epsilon(1e-12));
  CHECK(mus[1] == doctest::Approx(-4.129380813346703).epsilon(1e-12));
  CHECK(std::abs(mus[2]) <= 1e-12);
  CHECK(mus[3] == doctest::Approx(2.9293808133467034).epsilon(1e-12));
}

TEST_CASE("hessian assembly: zero background has two double bands per site") {
  BreatherSolution zero;
  zero.params = ModelParams{1.0, 2.0, 0.0};
  zero.E = 0.5;
  zero.field = LatticeField(3);
  HessianOperator H = assemble_hessian(zero);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.matrix);
  const double r = std::sqrt(0.25 + 1.0);
  int n_plus = 0, n_minus = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i] - (2.0 + r)) < 1e-12) ++n_plus;
    if (std::abs(es.eigenvalues()[i] - (2.0 - r)) < 1e-12) ++n_minus;
  }
  CHECK(n_plus == 14);   // 2 per site, 7 sites
  CHECK(n_minus == 14);
}

TEST_CASE("hessian kernel: gauge direction is annihilated") {
  const double E = 8.0 * std::sqrt(2.0) / 3.0;
  BreatherSolution s = solve_at(Branch::a, 1.0, 2.0, E, 0.05, 15);
  HessianOperator H = assemble_hessian(s);
  Eigen::VectorXcd sigma = gauge_kernel_vector(s.field);
  CHECK((H.matrix * sigma).cwiseAbs().maxCoeff() <= 1e-8);
}

// ============================================================================
// Spectrum at the anticontinuum limit
// ============================================================================

TEST_CASE("spectrum at eps = 0 matches the closed forms with multiplicities") {
  BreatherSolution s = solve_at(Branch::c, 1.0, -3.0, 1.2470129599623452, 0.0, 2);
  SpectrumReport rep = eigen_spectrum(s);
  REQUIRE(rep.eigenvalues.size() == 20);

  CHECK(rep.zero_multiplicity == 2);
  const complexd i1(0.0, 1.0);
  // Central pair +-lambda0 and far pairs +-lambda_plus, +-lambda_minus,
  // each far value with multiplicity 2 N_h = 4 (one per nonzero site).
  CHECK(count_near(rep.eigenvalues, 3.7290018162310608 * i1, 1e-10) == 1);
  CHECK(count_near(rep.eigenvalues, -3.7290018162310608 * i1, 1e-10) == 1);
  CHECK(count_near(rep.eigenvalues, 4.0754400847085355 * i1, 1e-10) == 4);
  CHECK(count_near(rep.eigenvalues, -4.0754400847085355 * i1, 1e-10) == 4);
  CHECK(count_near(rep.eigenvalues, -1.5814141647838451 * i1, 1e-10) == 4);
  CHECK(count_near(rep.eigenvalues, 1.5814141647838451 * i1, 1e-10) == 4);
  CHECK(rep.max_real <= 1e-10);

  // Same values as the dimer-side closed forms, cross-module.
  DimerLimitSpectrum lim = limit_spectrum(s.seed);
  CHECK(count_near(rep.eigenvalues, lim.lambda0, 1e-10) == 1);
  CHECK(count_near(rep.eigenvalues, lim.lambda_plus, 1e-10) == 4);
  CHECK(count_near(rep.eigenvalues, lim.lambda_minus, 1e-10) == 4);
}

TEST_CASE("spectrum: eigenvectors are retained and consistent") {
  BreatherSolution s = solve_at(Branch::b, 1.0, -3.0, 1.0, 0.02, 8);
  HessianOperator H = assemble_hessian(s);
  SymplecticS S = symplectic_matrix(8);
  Eigen::MatrixXcd M = complexd(0.0, -1.0) * (S.matrix * H.matrix);
  SpectrumReport rep = eigen_spectrum(s);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXcd v = rep.eigenvectors.col(i);
    CHECK((M * v - rep.eigenvalues[i] * v).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Sorted by imaginary part, then real part.
  for (std::size_t i = 1; i < rep.eigenvalues.size(); ++i) {
    const complexd a = rep.eigenvalues[i - 1], b = rep.eigenvalues[i];
    CHECK((std::imag(a) < std::imag(b) ||
           (std::imag(a) == std::imag(b) && std::real(a) <= std::real(b))));
  }
}

TEST_CASE("spectrum: quartet symmetry under negation and conjugation") {
  for (const BreatherSolution& s :
       {solve_at(Branch::b, 1.0, -3.0, 1.0, 0.02, 10),
        solve_at(Branch::a, 1.0, 2.0, 8.0 * std::sqrt(2.0) / 3.0, 0.05, 10),
        solve_at(Branch::c, 1.0, -2.2, 0.1, 0.02, 10)}) {
    SpectrumReport rep = eigen_spectrum(s);
    for (const complexd& lam : rep.eigenvalues) {
      double d_neg = 1e300, d_conj = 1e300;
      for (const complexd& mu : rep.eigenvalues) {
        d_neg = std::min(d_neg, std::abs(mu + lam));
        d_conj = std::min(d_conj, std::abs(mu - std::conj(lam)));
      }
      // Band eigenvalues come in tight clusters; the dense eigensolver
      // resolves individual members to ~1e-8 at this size.
      CHECK(d_neg <= 1e-7);
      CHECK(d_conj <= 1e-7);
    }
  }
}

// ============================================================================
// Stability classifications
// ============================================================================

TEST_CASE("branch (a): spectrally stable with a localised internal mode") {
  const double E = 8.0 * std::sqrt(2.0) / 3.0;
  BreatherSolution s = solve_at(Branch::a, 1.0, 2.0, E, 0.05, 20);
  SpectrumReport rep = eigen_spectrum(s);
  CHECK(rep.max_real <= 1e-8);
  CHECK(rep.zero_multiplicity == 2);
  CHECK(rep.zero_gap_ratio > 1e3);

  // The internal mode near lambda0 = 2 sqrt((4A^2+Omega)^2 - Omega g^2 /
  // (4A^2+Omega)) i = 5.7735i is localised; band modes are extended.
  const double lam0 = 2.0 * std::sqrt(9.0 - 2.0 / 3.0);
  int idx_lam0 = -1;
  double best = 1e300;
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    const double d = std::abs(rep.eigenvalues[i] - complexd(0.0, lam0));
    if (d < best) {
      best = d;
      idx_lam0 = static_cast<int>(i);
    }
  }
  CHECK(best < 0.1);  // the mode persists O(eps)-close to its limit
  CHECK_FALSE(rep.band[idx_lam0]);
  CHECK(rep.central_mass[idx_lam0] > 0.9);
  CHECK(rep.krein_signs[idx_lam0] == 1);  // positive signature on (a)

  // Band families: +i(E+w) has positive signature, +i(E-w) negative.
  BandEdges be = band_edges(s.params, s.E);
  int plus_checked = 0, minus_checked = 0;
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    if (!rep.band[i]) continue;
    const double im = std::imag(rep.eigenvalues[i]);
    if (im >= be.intervals[0].lo - 1e-6 && im <= be.intervals[0].hi + 1e-6) {
      CHECK(rep.krein_signs[i] == 1);
      ++plus_checked;
    }
    if (im >= be.intervals[1].lo - 1e-6 && im <= be.intervals[1].hi + 1e-6) {
      CHECK(rep.krein_signs[i] == -1);
      ++minus_checked;
    }
  }
  CHECK(plus_checked > 10);
  CHECK(minus_checked > 10);
}

TEST_CASE("krein signature: explicit band values on branch (a)") {
  // <L_n phi, phi> = 2 Omega E0 (E0 +- E) for the zero-background band
  // eigenvector phi = (-Omega, 0, +-E0 + i gamma, 0).
  const double E = 8.0 * std::sqrt(2.0) / 3.0;
  BreatherSolution s = solve_at(Branch::a, 1.0, 2.0, E, 0.0, 5);
  HessianOperator H = assemble_hessian(s);
  const double e0 = std::sqrt(3.0);
  for (double sign : {1.0, -1.0}) {
    Eigen::Vector4cd phi;
    phi << -2.0, 0.0, complexd(sign * e0, 1.0), 0.0;
    const Eigen::Matrix4cd far = H.matrix.block<4, 4>(4 * 6, 4 * 6);  // n = 1
    const double K = std::real(phi.dot(far * phi));
    const double expected = sign > 0 ? 38.12789058968723 : -14.127890589687235;
    CHECK(K == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("krein signature: domain error off the imaginary axis") {
  BreatherSolution s = solve_at(Branch::c, 1.0, -2.2, 0.1, 0.02, 10);
  HessianOperator H = assemble_hessian(s);
  SpectrumReport rep = eigen_spectrum(s);
  // This point is unstable: find the positive real eigenvalue.
  int idx = -1;
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
    if (std::real(rep.eigenvalues[i]) > 0.5) idx = static_cast<int>(i);
  REQUIRE(idx >= 0);
  CHECK_THROWS_AS(
      krein_signature(rep.eigenvalues[idx], rep.eigenvectors.col(idx), H),
      std::domain_error);
}

TEST_CASE("branch (c) below E_s: real instability pair near the limit value") {
  // gamma=1, Omega=-2.2, E=0.1: the anticontinuum pair sits at
  // +-2 sqrt(Omega g^2/(4A^2+Omega) - (4A^2+Omega)^2) = +-1.3041540906882052.
  BreatherSolution s = solve_at(Branch::c, 1.0, -2.2, 0.1, 0.02, 20);
  SpectrumReport rep = eigen_spectrum(s);
  CHECK(rep.counts.k_r == 1);
  CHECK(rep.max_real > 1.0);
  CHECK(rep.max_real == doctest::Approx(1.3041540906882052).epsilon(0.1));
  CHECK(rep.counts.k_ham == 1);
}

TEST_CASE("hamilton-krein index: counting equals the inertia formula") {
  struct Probe {
    Branch br;
    double g, om, E, eps;
    int khm, n_pos;
  };
  const Probe probes[] = {
      {Branch::b, 1.0, -3.0, 1.0, 0.02, 2, 3},
      {Branch::c, 1.0, -3.0, 1.0, 0.02, 0, 1},
      {Branch::c, 1.0, -2.2, 0.2, 0.02, 1, 1},  // below E_s ~ 0.2565
      {Branch::c, 1.0, -2.2, 0.3, 0.02, 0, 1},  // above E_s
  };
  for (const Probe& pr : probes) {
    BreatherSolution s = solve_at(pr.br, pr.g, pr.om, pr.E, pr.eps, 20);
    SpectrumReport rep = eigen_spectrum(s);
    IndexCrossCheck x = hamilton_krein_index(rep, s);
    CHECK(x.khm_from_counting == pr.khm);
    CHECK(x.khm_from_inertia == pr.khm);
    CHECK(x.consistent);
    CHECK(rep.inertia.n_pos == pr.n_pos);
    CHECK(rep.inertia.n_zero == 1);
    CHECK(rep.zero_multiplicity == 2);
  }
}

TEST_CASE("hamilton-krein index: extensive counts above the phonon gap") {
  // |E| > E0: the positive inertia grows linearly with the lattice size
  // (3 + 4N) and the identity still holds on the truncated chain.
  const double E = 8.0 * std::sqrt(2.0) / 3.0;
  for (int N : {10, 16}) {
    BreatherSolution s = solve_at(Branch::a, 1.0, 2.0, E, 0.05, N);
    SpectrumReport rep = eigen_spectrum(s);
    IndexCrossCheck x = hamilton_krein_index(rep, s);
    CHECK(rep.inertia.n_pos == 3 + 4 * N);
    CHECK(x.khm_from_counting == 2 + 4 * N);
    CHECK(x.consistent);
  }
}

TEST_CASE("hamilton-krein index: error paths") {
  SpectrumReport fake;
  fake.zero_multiplicity = 3;
  BreatherSolution dummy;
  CHECK_THROWS_AS(hamilton_krein_index(fake, dummy), std::domain_error);

  // E = 0 endpoint of branch (c): dQ/dE is not defined there (8A^2 + Omega
  // vanishes), so the slope side must refuse.
  DimerPoint endpoint = point_from_amplitude(1.0, -2.4, 0.3, Branch::c, +1);
  BreatherSolution s = newton_solve(seed_field(endpoint, 8), endpoint,
                                    ModelParams{1.0, -2.4, 0.0}, endpoint.E);
  SpectrumReport rep = eigen_spectrum(s);
  CHECK_THROWS_AS(hamilton_krein_index(rep, s), std::domain_error);
}

// ============================================================================
// Kernel structure
// ============================================================================

TEST_CASE("kernel check: anticontinuum limit is exact") {
  const double E = 8.0 * std::sqrt(2.0) / 3.0;
  BreatherSolution s = solve_at(Branch::a, 1.0, 2.0, E, 0.0, 8);
  KernelCheck kc = kernel_and_generalized_kernel(s, 1e-5);
  CHECK(kc.kernel_residual <= 1e-12);
  CHECK(kc.gen_kernel_residual <= 1e-8);
  CHECK(kc.slope_q_numeric ==
        doctest::Approx(slope_Q(s.seed)).epsilon(1e-6));
}

TEST_CASE("kernel check: coupled lattice keeps the double-zero structure") {
  BreatherSolution s = solve_at(Branch::b, 1.0, -3.0, 1.0, 0.02, 20);
  KernelCheck kc = kernel_and_generalized_kernel(s, 1e-5);
  CHECK(kc.kernel_residual <= 1e-10);
  CHECK(kc.gen_kernel_residual <= 1e-8);
  CHECK(kc.slope_q_numeric > 0.0);
  // The eps = 0 closed form is displaced by a genuine O(eps) correction;
  // at eps = 0.02 the observed gap is ~8e-4.
  CHECK(kc.slope_q_numeric ==
        doctest::Approx(slope_Q(s.seed)).epsilon(5e-3));
  // The finite difference itself is converged (refining dE changes little).
  KernelCheck kc2 = kernel_and_generalized_kernel(s, 1e-4);
  CHECK(std::abs(kc2.slope_q_numeric - kc.slope_q_numeric) <= 1e-6);

  SpectrumReport rep = eigen_spectrum(s);
  CHECK(rep.zero_multiplicity == 2);
}

TEST_CASE("kernel check: invalid finite-difference step") {
  BreatherSolution s = solve_at(Branch::b, 1.0, -3.0, 1.0, 0.0, 6);
  CHECK_THROWS_AS(kernel_and_generalized_kernel(s, 0.0), std::invalid_argument);
}

// ============================================================================
// Zero equilibrium and bands
// ============================================================================

TEST_CASE("zero equilibrium: thresholds and dispersion") {
  ZeroEquilibrium ze = zero_equilibrium_stability({1.0, 2.0, 0.1});
  CHECK(ze.gamma0 == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(ze.stable);
  // Dispersion at k = 0: 2 omega = sqrt(Omega^2 - gamma^2).
  const int mid = static_cast<int>(ze.k.size()) / 2;
  CHECK(std::abs(ze.k[mid]) < 1e-12);
  CHECK(std::real(ze.omega[mid]) ==
        doctest::Approx(0.5 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(std::imag(ze.omega[mid]) == 0.0);

  ZeroEquilibrium zn = zero_equilibrium_stability({1.0, -2.0, 0.05});
  CHECK(zn.gamma0 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(zn.stable);

  // Past the threshold the dispersion leaves the real axis near k = +-pi.
  ZeroEquilibrium zu = zero_equilibrium_stability({1.7, 2.0, 0.1});
  CHECK_FALSE(zu.stable);
  CHECK(std::imag(zu.omega.front()) > 0.0);   // k = -pi
  CHECK(std::imag(zu.omega.back()) > 0.0);    // k = +pi
  CHECK(std::imag(zu.omega[zu.omega.size() / 2]) == 0.0);  // k = 0 still real

  // Omega = 0: the threshold collapses to zero.
  ZeroEquilibrium z0 = zero_equilibrium_stability({0.1, 0.0, 0.05});
  CHECK(z0.gamma0 == 0.0);
  CHECK_FALSE(z0.stable);
}

TEST_CASE("band edges: degenerate at eps = 0, exact at eps = 0.02") {
  BandEdges b0 = band_edges({1.0, -3.0, 0.0}, 1.0);
  const double e0 = std::sqrt(8.0);
  CHECK(b0.w_min == doctest::Approx(e0).epsilon(1e-15));
  CHECK(b0.w_max == doctest::Approx(e0).epsilon(1e-15));
  CHECK(b0.intervals[0].lo == doctest::Approx(1.0 + e0).epsilon(1e-15));
  CHECK(b0.intervals[0].hi == doctest::Approx(1.0 + e0).epsilon(1e-15));

  BandEdges b = band_edges({1.0, -3.0, 0.02}, 1.0);
  CHECK(b.w_min == doctest::Approx(2.8284271247461903).epsilon(1e-14));
  CHECK(b.w_max == doctest::Approx(2.9131426329653).epsilon(1e-12));
  CHECK(b.intervals[0].lo == doctest::Approx(1.0 + 2.8284271247461903));
  CHECK(b.intervals[0].hi == doctest::Approx(1.0 + 2.9131426329653));
  CHECK(b.intervals[1].lo == doctest::Approx(1.0 - 2.9131426329653));
  CHECK(b.intervals[1].hi == doctest::Approx(1.0 - 2.8284271247461903));

  // Bandwidth shrinks linearly in eps.
  BandEdges bh = band_edges({1.0, -3.0, 0.01}, 1.0);
  const double ratio = (bh.w_max - bh.w_min) / (b.w_max - b.w_min);
  CHECK(ratio > 0.49);
  CHECK(ratio < 0.51);
}

TEST_CASE("band edges: precondition and broken-PT detection") {
  CHECK_THROWS_AS(band_edges({1.5, 1.2, 0.1}, 1.0), std::domain_error);
  CHECK_THROWS_AS(band_edges({1.0, 1.2, 0.1}, 1.0), broken_pt_error);
  // Omega > 0 small against eps: the dispersion crosses zero inside the zone.
  CHECK_THROWS_AS(band_edges({0.1, 0.3, 0.1}, 1.0), broken_pt_error);
}
