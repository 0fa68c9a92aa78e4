#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ptlab/dimer.hpp"
#include "ptlab/model.hpp"

using namespace ptlab;

namespace {

constexpr complexd kI{0.0, 1.0};

UVState single_site_state(complexd u0, complexd v0, int half_width = 3) {
  UVState s{LatticeField(half_width), LatticeField(half_width)};
  s.u(0) = u0;
  s.v(0) = v0;
  return s;
}

UVState random_state(int half_width, double amp, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-amp, amp);
  UVState s{LatticeField(half_width), LatticeField(half_width)};
  for (int n = -half_width; n <= half_width; ++n) {
    s.u(n) = complexd(uni(rng), uni(rng));
    s.v(n) = complexd(uni(rng), uni(rng));
  }
  return s;
}

// Wirtinger derivative dH/d(conj f_n) by central differences of the energy.
complexd energy_wirtinger(const UVState& s, const ModelParams& p, bool wrt_v,
                          int n, double h = 1e-6) {
  auto perturbed = [&](complexd dz) {
    UVState t = s;
    (wrt_v ? t.v(n) : t.u(n)) += dz;
    return energy(t, p);
  };
  const double dRe = (perturbed(h) - perturbed(-h)) / (2.0 * h);
  const double dIm = (perturbed(kI * h) - perturbed(-kI * h)) / (2.0 * h);
  // dH/d(conj z) = (dH/da + i dH/db)/2 for z = a + i b.
  return 0.5 * complexd(dRe, dIm);
}

}  // namespace

TEST_CASE("vector field: zero state maps to zero derivatives") {
  ModelParams p{1.0, 2.0, 0.3};
  UVState zero{LatticeField(4), LatticeField(4)};
  UVState dz = vector_field(zero, p);
  for (int n = -4; n <= 4; ++n) {
    CHECK(std::abs(dz.u(n)) == 0.0);
    CHECK(std::abs(dz.v(n)) == 0.0);
  }
}

TEST_CASE("vector field: hand-evaluated single-site value") {
  // u0 = v0 = 0.1 at gamma=1, Omega=2, eps=0:
  // 2i du0/dt = 2*0.1 + i*0.1 + 2[(2*0.01+0.01)*0.1 + 0.001] = 0.208 + 0.1i
  ModelParams p{1.0, 2.0, 0.0};
  UVState s = single_site_state(0.1, 0.1);
  UVState d = vector_field(s, p);
  const complexd rhs_u = 2.0 * kI * d.u(0);
  const complexd rhs_v = 2.0 * kI * d.v(0);
  CHECK(std::abs(rhs_u - complexd(0.208, 0.1)) < 1e-15);
  CHECK(std::abs(rhs_v - complexd(0.208, -0.1)) < 1e-15);
}

TEST_CASE("vector field: dimer states rotate with frequency E/2") {
  // At eps=0 a dimer point gives du/dt = -(iE/2) u, dv/dt = -(iE/2) v.
  const DimerPoint pts[] = {
      point_from_amplitude(1.0, 2.0, 0.25, Branch::a, +1),
      point_from_amplitude(1.0, -2.2, 1.3, Branch::b, -1),
      point_from_amplitude(1.0, -3.0, 0.2, Branch::c, +1),
  };
  for (const DimerPoint& pt : pts) {
    ModelParams p{pt.gamma, pt.omega, 0.0};
    const complexd U0 = pt.U0();
    UVState s = single_site_state(U0, std::conj(U0));
    UVState d = vector_field(s, p);
    CHECK(std::abs(d.u(0) - (-0.5 * kI * pt.E) * s.u(0)) < 1e-13);
    CHECK(std::abs(d.v(0) - (-0.5 * kI * pt.E) * s.v(0)) < 1e-13);
    // ... and the residual of the stationary problem vanishes.
    LatticeField U(3);
    U(0) = U0;
    CHECK(stationary_residual(U, p, pt.E).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("mismatched u/v sizes are rejected at construction") {
  CHECK_THROWS_AS((void)UVState(LatticeField(3), LatticeField(4)),
                  std::invalid_argument);
}

TEST_CASE("stationary residual: hand value at theta = 0") {
  // eps=0, gamma=1, Omega=2, E=0, U0=1: the four surviving terms are
  // Omega*Ubar = 2, i*gamma*U = i, 6|U|^2 Ubar = 6, 2U^3 = 2, so the
  // residual is 10 + i.
  ModelParams p{1.0, 2.0, 0.0};
  LatticeField U(2);
  U(0) = 1.0;
  Eigen::VectorXcd r = stationary_residual(U, p, 0.0);
  CHECK(std::abs(r[2] - complexd(10.0, 1.0)) < 1e-15);
  CHECK(std::abs(r[0]) == 0.0);

  LatticeField zero(2);
  CHECK(stationary_residual(zero, p, 1.7).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("energy: frozen single-site value and gauge invariance") {
  // gamma=1, Omega=2, A^2=0.25, sin 2theta = 1/3:
  // H = 4A^4 + (2A^2 cos2theta)^2 + 2 Omega A^2 - 2 gamma A^2 sin2theta
  //   = 1/4 + 2/9 + 1 - 1/6 = 47/36.
  ModelParams p{1.0, 2.0, 0.0};
  DimerPoint pt = point_from_amplitude(1.0, 2.0, 0.25, Branch::a, +1);
  CHECK(std::sin(2.0 * pt.theta) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  UVState s = single_site_state(pt.U0(), std::conj(pt.U0()));
  CHECK(energy(s, p) == doctest::Approx(47.0 / 36).epsilon(1e-12));

  UVState zero{LatticeField(2), LatticeField(2)};
  CHECK(energy(zero, p) == 0.0);

  // Global phase rotation leaves H (and Q) unchanged.
  ModelParams pc{0.7, -1.3, 0.15};
  UVState r = random_state(4, 0.6, 91u);
  UVState rot = r;
  const complexd phase = std::exp(kI * 0.7);
  for (int n = -4; n <= 4; ++n) {
    rot.u(n) *= phase;
    rot.v(n) *= phase;
  }
  CHECK(energy(rot, pc) == doctest::Approx(energy(r, pc)).epsilon(1e-12));
  CHECK(charge(rot) == doctest::Approx(charge(r)).epsilon(1e-12));
}

TEST_CASE("charge: dimer value and the v = conj(u) identity") {
  DimerPoint pt = point_from_amplitude(1.0, 2.0, 0.25, Branch::a, +1);
  UVState s = single_site_state(pt.U0(), std::conj(pt.U0()));
  // Q = 2 A^2 E / (8A^2+Omega) with E = 8 sqrt(2)/3.
  const double expected = 2.0 * 0.25 * pt.E / (8.0 * 0.25 + 2.0);
  CHECK(charge(s) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(charge(s) == doctest::Approx(0.47140452079103168).epsilon(1e-10));

  UVState r = random_state(3, 0.8, 5u);
  r.v = r.u.conjugated();
  double q2 = 0.0;
  for (int n = -3; n <= 3; ++n) q2 += 2.0 * std::real(r.u(n) * r.u(n));
  CHECK(charge(r) == doctest::Approx(q2).epsilon(1e-13));
}

TEST_CASE("cross-gradient structure of the flow") {
  // du/dt = (1/2i) dH/d(conj v), dv/dt = (1/2i) dH/d(conj u), checked by
  // central finite differences of the energy at a random state.
  ModelParams p{1.0, -2.2, 0.12};
  UVState s = random_state(3, 0.4, 2024u);
  UVState d = vector_field(s, p);
  for (int n = -3; n <= 3; ++n) {
    const complexd du = energy_wirtinger(s, p, /*wrt_v=*/true, n) / (2.0 * kI);
    const complexd dv = energy_wirtinger(s, p, /*wrt_v=*/false, n) / (2.0 * kI);
    CHECK(std::abs(du - d.u(n)) <= 1e-6 * std::max(1.0, std::abs(d.u(n))));
    CHECK(std::abs(dv - d.v(n)) <= 1e-6 * std::max(1.0, std::abs(d.v(n))));
  }
}

TEST_CASE("envelope transform: examples and round trip") {
  // A0 = 4, B0 = 4i -> u0 = 0, v0 = 2.
  LatticeField A(2), B(2);
  A(0) = 4.0;
  B(0) = complexd(0.0, 4.0);
  UVState s = ab_to_uv(A, B);
  CHECK(std::abs(s.u(0)) < 1e-15);
  CHECK(std::abs(s.v(0) - 2.0) < 1e-15);

  // A = B = 0 -> u = v = 0.
  UVState z = ab_to_uv(LatticeField(2), LatticeField(2));
  CHECK(z.u.sup_norm() == 0.0);
  CHECK(z.v.sup_norm() == 0.0);

  // Example A0 = 1+i, B0 = 1-i from the round-trip identity.
  LatticeField A2(1), B2(1);
  A2(0) = complexd(1.0, 1.0);
  B2(0) = complexd(1.0, -1.0);
  UVState s2 = ab_to_uv(A2, B2);
  CHECK(std::abs(s2.u(0) - 0.5) < 1e-15);
  CHECK(std::abs(s2.v(0) - complexd(0.0, 0.5)) < 1e-15);
  auto [A3, B3] = uv_to_ab(s2);
  CHECK(std::abs(A3(0) - A2(0)) < 1e-15);
  CHECK(std::abs(B3(0) - B2(0)) < 1e-15);

  // Random round trip.
  std::mt19937_64 rng(7u);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  LatticeField Ar(3), Br(3);
  for (int n = -3; n <= 3; ++n) {
    Ar(n) = complexd(uni(rng), uni(rng));
    Br(n) = complexd(uni(rng), uni(rng));
  }
  auto [Ar2, Br2] = uv_to_ab(ab_to_uv(Ar, Br));
  for (int n = -3; n <= 3; ++n) {
    CHECK(std::abs(Ar2(n) - Ar(n)) < 1e-14);
    CHECK(std::abs(Br2(n) - Br(n)) < 1e-14);
  }

  // Synchronized reduction A = B: e^{i pi/4} u and e^{-i pi/4} v are real.
  LatticeField As(1);
  As(0) = complexd(1.0, 2.0);
  UVState sync = ab_to_uv(As, As);
  CHECK(std::abs(std::imag(std::exp(kI * (M_PI / 4)) * sync.u(0))) < 1e-15);
  CHECK(std::abs(std::imag(std::exp(-kI * (M_PI / 4)) * sync.v(0))) < 1e-15);

  CHECK_THROWS_AS(ab_to_uv(LatticeField(2), LatticeField(3)),
                  std::invalid_argument);
}

TEST_CASE("parity and PT application") {
  UVState s = single_site_state(complexd(1.0, 1.0), 2.0);
  UVState ps = pt_apply(s);  // P only: swap
  CHECK(std::abs(ps.u(0) - 2.0) < 1e-15);
  CHECK(std::abs(ps.v(0) - complexd(1.0, 1.0)) < 1e-15);
  UVState pps = pt_apply(ps);
  CHECK(std::abs(pps.u(0) - s.u(0)) < 1e-15);

  // PT fixes stationary states (v = conj u).
  DimerPoint pt = point_from_amplitude(1.0, -3.0, 0.2, Branch::c, +1);
  UVState st = single_site_state(pt.U0(), std::conj(pt.U0()));
  UVState fixed = pt_apply(st, /*reverse_time=*/true);
  CHECK(std::abs(fixed.u(0) - st.u(0)) < 1e-15);
  CHECK(std::abs(fixed.v(0) - st.v(0)) < 1e-15);
  // PT twice is the identity on any state.
  UVState twice = pt_apply(pt_apply(s, true), true);
  CHECK(std::abs(twice.u(0) - s.u(0)) < 1e-15);
  CHECK(std::abs(twice.v(0) - s.v(0)) < 1e-15);
}
