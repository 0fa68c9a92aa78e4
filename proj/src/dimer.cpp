#include "ptlab/dimer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptlab {

namespace {

constexpr complexd kI{0.0, 1.0};
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_generic(double gamma, double omega) {
  if (gamma == 0.0)
    throw std::domain_error("gamma must be nonzero (no gain/loss)");
  if (std::abs(std::abs(omega) - std::abs(gamma)) == 0.0)
    throw std::domain_error("|Omega| = |gamma| is a degenerate threshold");
}

// Upper amplitude endpoint of branch (c): min{ (|Omega|-|gamma|)/4, |Omega|/8 }.
double branch_c_amp_max(double gamma, double omega) {
  const double g = std::abs(gamma), w = std::abs(omega);
  return std::min((w - g) / 4.0, w / 8.0);
}

// cos(2 theta) computed without the 0/0 that E / (8A^2+Omega) hits at the
// branch-(c) amplitude endpoint: identically equal on the branch, finite
// everywhere.
double cos2theta_of(double gamma, double omega, double amp_sq, int e_sign) {
  const double s2t = gamma / (4.0 * amp_sq + omega);
  const double rad = std::max(0.0, 1.0 - s2t * s2t);
  const double sgn8 = (8.0 * amp_sq + omega) >= 0.0 ? 1.0 : -1.0;
  return static_cast<double>(e_sign) * sgn8 * std::sqrt(rad);
}

}  // namespace

std::string branch_name(Branch b) {
  switch (b) {
    case Branch::a: return "a";
    case Branch::b: return "b";
    case Branch::c: return "c";
  }
  return "?";
}

double linear_threshold_E0(double gamma, double omega) {
  const double d = omega * omega - gamma * gamma;
  if (d < 0.0)
    throw std::domain_error("E0 undefined: |Omega| < |gamma| (PT-broken band)");
  return std::sqrt(d);
}

complexd DimerPoint::U0() const {
  return std::sqrt(amp_sq) * std::exp(kI * theta);
}

std::vector<BranchWindow> classify_branches(double gamma, double omega) {
  require_generic(gamma, omega);
  const double g = std::abs(gamma);
  std::vector<BranchWindow> out;
  if (omega > g) {
    const double E0 = linear_threshold_E0(gamma, omega);
    out.push_back({Branch::a, true, E0, 0.0, kInf, E0, kInf, true});
    return out;
  }
  // Omega < |gamma|: branch (b) always exists, from A+^2 upward.
  const double amp_plus = (g - omega) / 4.0;
  const double E0 = (omega < -g) ? linear_threshold_E0(gamma, omega) : kNaN;
  out.push_back({Branch::b, true, E0, amp_plus, kInf, 0.0, kInf, true});
  if (omega < -g) {
    const double amp_max = branch_c_amp_max(gamma, omega);
    out.push_back({Branch::c, true, E0, 0.0, amp_max, 0.0, E0, false});
  }
  return out;
}

double e_squared_of_amp(double gamma, double omega, double amp_sq) {
  const double x = 4.0 * amp_sq + omega;
  const double y = 8.0 * amp_sq + omega;
  return y * y * (1.0 - gamma * gamma / (x * x));
}

double de_squared_damp(double gamma, double omega, double amp_sq) {
  const double x = 4.0 * amp_sq + omega;
  const double y = 8.0 * amp_sq + omega;
  return 8.0 * y * (2.0 * x * x * x - gamma * gamma * omega) / (x * x * x);
}

DimerPoint point_from_amplitude(double gamma, double omega, double amp_sq,
                                Branch branch, int e_sign) {
  require_generic(gamma, omega);
  if (e_sign != 1 && e_sign != -1)
    throw std::invalid_argument("e_sign must be +1 or -1");
  const double g = std::abs(gamma);

  switch (branch) {
    case Branch::a:
      if (omega <= g)
        throw std::domain_error("branch (a) requires Omega > |gamma|");
      if (amp_sq <= 0.0)
        throw std::domain_error("branch (a) requires A^2 > 0");
      break;
    case Branch::b: {
      if (omega >= g)
        throw std::domain_error("branch (b) requires Omega < |gamma|");
      const double amp_plus = (g - omega) / 4.0;
      if (amp_sq < amp_plus)
        throw std::domain_error("branch (b) requires A^2 >= (|gamma|-Omega)/4");
      break;
    }
    case Branch::c: {
      if (omega >= -g)
        throw std::domain_error("branch (c) requires Omega < -|gamma|");
      const double amp_max = branch_c_amp_max(gamma, omega);
      // The closed upper endpoint is the E = 0 state (synchronised when
      // Omega = -2|gamma|); it is a genuine solution, so it is admitted here
      // even though E-parametrised sweeps exclude it.
      if (amp_sq <= 0.0 || amp_sq > amp_max)
        throw std::domain_error("branch (c) requires 0 < A^2 <= A_-^2");
      break;
    }
  }

  DimerPoint pt;
  pt.gamma = gamma;
  pt.omega = omega;
  pt.branch = branch;
  pt.amp_sq = amp_sq;
  const double e_sq = std::max(0.0, e_squared_of_amp(gamma, omega, amp_sq));
  pt.E = static_cast<double>(e_sign) * std::sqrt(e_sq);
  const double s2t = gamma / (4.0 * amp_sq + omega);
  const double c2t = cos2theta_of(gamma, omega, amp_sq, e_sign);
  pt.theta = 0.5 * std::atan2(s2t, c2t);
  return pt;
}

DimerPoint solve_for_E(double gamma, double omega, double E, Branch branch) {
  require_generic(gamma, omega);
  const double g = std::abs(gamma);
  const double target = E * E;

  // Branch-specific admissibility and bisection bracket in A^2. The map
  // A^2 -> E^2 is strictly monotone on each branch (increasing on (a), (b),
  // decreasing on (c)).
  double lo, hi;
  bool increasing;
  switch (branch) {
    case Branch::a: {
      if (omega <= g)
        throw std::domain_error("branch (a) requires Omega > |gamma|");
      const double E0 = linear_threshold_E0(gamma, omega);
      if (std::abs(E) == E0)
        throw std::domain_error("branch (a): |E| = E0 is an excluded endpoint");
      if (std::abs(E) < E0)
        throw std::domain_error("branch (a) requires |E| > E0");
      lo = 1e-14;
      hi = 1.0;
      increasing = true;
      break;
    }
    case Branch::b: {
      if (omega >= g)
        throw std::domain_error("branch (b) requires Omega < |gamma|");
      lo = (g - omega) / 4.0;  // E^2 = 0 here
      hi = lo + 1.0;
      increasing = true;
      break;
    }
    case Branch::c: {
      if (omega >= -g)
        throw std::domain_error("branch (c) requires Omega < -|gamma|");
      const double E0 = linear_threshold_E0(gamma, omega);
      if (E == 0.0 || std::abs(E) == E0)
        throw std::domain_error(
            "branch (c): E = 0 and |E| = E0 are excluded endpoints");
      if (std::abs(E) > E0)
        throw std::domain_error("branch (c) requires |E| < E0");
      lo = 1e-14;
      hi = branch_c_amp_max(gamma, omega) - 1e-14;
      increasing = false;
      break;
    }
    default:
      throw std::invalid_argument("unknown branch");
  }

  auto gfun = [&](double a2) {
    return e_squared_of_amp(gamma, omega, a2) - target;
  };

  if (increasing) {
    // Expand hi until it brackets the target (E^2 grows ~ 64 A^4).
    int guard = 0;
    while (gfun(hi) < 0.0) {
      hi = 2.0 * hi + 1.0;
      if (++guard > 60)
        throw std::domain_error("solve_for_E: failed to bracket target E");
    }
  }

  double a_lo = lo, a_hi = hi;
  double mid = 0.5 * (a_lo + a_hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (a_lo + a_hi);
    const double gm = gfun(mid);
    if (std::abs(gm) <= 1e-12 || (a_hi - a_lo) < 1e-16 * std::max(1.0, a_hi))
      break;
    const bool go_right = increasing ? (gm < 0.0) : (gm > 0.0);
    (go_right ? a_lo : a_hi) = mid;
  }

  const int e_sign = (E >= 0.0) ? +1 : -1;
  DimerPoint pt = point_from_amplitude(gamma, omega, mid, branch, e_sign);
  // Report the requested E exactly; the bisected amplitude reproduces it to
  // |Delta E^2| <= 1e-12.
  pt.E = E;
  return pt;
}

DimerJacobian dimer_jacobian(const DimerPoint& pt) {
  const double A2 = pt.amp_sq, W = pt.omega, g = pt.gamma;
  // p = E (Omega - 4A^2)/(Omega + 8A^2) written via cos(2 theta) so the
  // branch-(c) amplitude endpoint (where both E and Omega + 8A^2 vanish)
  // evaluates to its limit.
  const double p = std::cos(2.0 * pt.theta) * (W - 4.0 * A2);
  const double q = -(W + 12.0 * A2);

  DimerJacobian out;
  out.matrix << complexd(p, -g), complexd(q, 0.0), complexd(q, 0.0),
      complexd(p, g);
  const complexd root = std::sqrt(complexd(q * q - g * g, 0.0));
  out.eigenvalues = {p + root, p - root};
  const double det = p * p + g * g - q * q;
  const double scale = std::max(1.0, p * p + g * g + q * q);
  out.invertible = std::abs(det) > 1e-10 * scale;
  return out;
}

DimerLimitSpectrum limit_spectrum(const DimerPoint& pt) {
  const double A2 = pt.amp_sq, W = pt.omega, g = pt.gamma, E = pt.E;
  const double x = 4.0 * A2 + W;
  if (std::abs(x) < 1e-14 * std::max(1.0, std::abs(W)))
    throw std::domain_error("limit_spectrum: 4A^2 + Omega = 0 is off-branch");

  DimerLimitSpectrum out;
  out.mu1 = 2.0 * x;
  const double disc = std::max(
      0.0, (4.0 * A2 - W) * (4.0 * A2 - W) + 16.0 * W * A2 * g * g / (x * x));
  out.mu2 = 12.0 * A2 + W + std::sqrt(disc);
  out.mu3 = 12.0 * A2 + W - std::sqrt(disc);

  const double far_root = std::sqrt(E * E + g * g);
  out.mu_plus = W + far_root;
  out.mu_minus = W - far_root;

  const double r = x * x - W * g * g / x;
  if (r >= 0.0) {
    out.lambda0 = complexd(0.0, 2.0 * std::sqrt(r));
    out.lambda0_imaginary = true;
  } else {
    out.lambda0 = complexd(2.0 * std::sqrt(-r), 0.0);
    out.lambda0_imaginary = false;
  }

  // Band-limit eigenvalues i (E +- w0) with w0 = sqrt(Omega^2 - gamma^2);
  // complex w0 (PT-broken far field) is propagated rather than rejected.
  const complexd w0 = std::sqrt(complexd(W * W - g * g, 0.0));
  out.lambda_plus = kI * (E + w0);
  out.lambda_minus = kI * (E - w0);
  return out;
}

double slope_Q(const DimerPoint& pt) {
  const double y = 8.0 * pt.amp_sq + pt.omega;
  if (std::abs(y) < 1e-12 * std::max(1.0, std::abs(pt.omega)))
    throw std::domain_error("slope_Q: 8A^2 + Omega = 0 (chain-rule form "
                            "divides by it)");
  const double x = 4.0 * pt.amp_sq + pt.omega;
  const double x3 = x * x * x;
  const double wg2 = pt.omega * pt.gamma * pt.gamma;
  const double den = 2.0 * (2.0 * x3 - wg2);
  if (std::abs(den) < 1e-12 * std::max(1.0, std::abs(x3) + std::abs(wg2)))
    throw std::domain_error(
        "slope_Q: degenerate at the synchronised locus 2(4A^2+Omega)^3 = "
        "Omega gamma^2");
  return (x3 - wg2) / den;
}

double dimer_charge(const DimerPoint& pt) {
  // Q = U0^2 + conj(U0)^2 = 2 A^2 cos(2 theta); the cos form stays finite at
  // the branch-(c) amplitude endpoint.
  return 2.0 * pt.amp_sq * std::cos(2.0 * pt.theta);
}

std::optional<double> internal_transition_E(double gamma, double omega) {
  require_generic(gamma, omega);
  const double g = std::abs(gamma);
  if (omega >= -g)
    throw std::domain_error("internal transition defined on branch (c) only");
  if (omega <= -2.0 * std::sqrt(2.0) * g) return std::nullopt;

  // lambda0 changes type where (4A^2+Omega)^3 = Omega gamma^2; the cube is
  // strictly increasing in A^2, so bisect on its sign.
  const double amp_max = branch_c_amp_max(gamma, omega);
  auto h = [&](double a2) {
    const double x = 4.0 * a2 + omega;
    return x * x * x - omega * gamma * gamma;
  };
  double lo = 1e-14, hi = amp_max - 1e-14;
  if (h(lo) >= 0.0 || h(hi) <= 0.0) return std::nullopt;  // no interior root
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < 0.0 ? lo : hi) = mid;
    const double e_lo =
        std::sqrt(std::max(0.0, e_squared_of_amp(gamma, omega, hi)));
    const double e_hi =
        std::sqrt(std::max(0.0, e_squared_of_amp(gamma, omega, lo)));
    if (std::abs(e_hi - e_lo) < 1e-12) break;
  }
  const double a_s = 0.5 * (lo + hi);
  return std::sqrt(std::max(0.0, e_squared_of_amp(gamma, omega, a_s)));
}

KhmPrediction predicted_khm(double gamma, double omega, double E,
                            Branch branch) {
  require_generic(gamma, omega);
  const double g = std::abs(gamma);
  if (omega >= -g)
    throw std::domain_error(
        "predicted_khm requires Omega < -|gamma| (definite far field)");
  const double E0 = linear_threshold_E0(gamma, omega);
  if (E == 0.0 || std::abs(E) >= E0)
    throw std::domain_error("predicted_khm requires 0 < |E| < E0");

  if (branch == Branch::b) return {2, std::nullopt};
  if (branch != Branch::c)
    throw std::domain_error("branch (a) has no definite far field here");

  const std::optional<double> e_s = internal_transition_E(gamma, omega);
  if (!e_s) return {0, std::nullopt};
  if (std::abs(std::abs(E) - *e_s) < 1e-12)
    throw std::domain_error("predicted_khm: |E| sits at the transition E_s");
  return {std::abs(E) < *e_s ? 1 : 0, e_s};
}

ResonanceResult resonance(double gamma, double omega) {
  require_generic(gamma, omega);
  const double g = std::abs(gamma);
  if (omega >= -g)
    throw std::domain_error("resonance scan requires Omega < -|gamma|");
  const double E0 = linear_threshold_E0(gamma, omega);

  const bool minus_kind = omega < -5.0 * g;
  auto im_lambda0 = [&](double E) {
    const DimerPoint pt = solve_for_E(gamma, omega, E, Branch::b);
    const DimerLimitSpectrum ls = limit_spectrum(pt);
    return ls.lambda0.imag();  // imaginary throughout branch (b), Omega < 0
  };
  auto f = [&](double E) {
    return minus_kind ? im_lambda0(E) - (E0 - E) : im_lambda0(E) - (E + E0);
  };

  ResonanceResult out;
  out.kind = minus_kind ? ResonanceResult::Kind::minus_lambda_minus
                        : ResonanceResult::Kind::lambda_plus;
  out.scan_lo = 0.0;
  out.scan_hi =
      minus_kind ? E0 * (1.0 - 1e-9) : E0 + 5.0 * (std::abs(omega) + g);

  // Exact boundary Omega = -5|gamma|: the crossing degenerates to E = 0.
  const double f0 = f(0.0);
  if (std::abs(f0) < 1e-9) {
    out.found = true;
    out.E_star = 0.0;
    out.side = ResonanceResult::Side::below_E0;
    return out;
  }

  const int n_scan = 2000;
  double prev_E = 0.0, prev_f = f0;
  for (int i = 1; i <= n_scan; ++i) {
    const double E = out.scan_hi * static_cast<double>(i) / n_scan;
    const double fi = f(E);
    if (prev_f == 0.0 || (prev_f < 0.0) != (fi < 0.0)) {
      if (!out.found) {
        double lo = prev_E, hi_ = E, flo = prev_f;
        for (int it = 0; it < 200 && (hi_ - lo) > 1e-10; ++it) {
          const double mid = 0.5 * (lo + hi_);
          const double fm = f(mid);
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi_ = mid;
          }
        }
        out.E_star = 0.5 * (lo + hi_);
        out.found = true;
      } else {
        ++out.extra_crossings;
      }
    }
    prev_E = E;
    prev_f = fi;
  }
  if (out.found)
    out.side = out.E_star > E0 ? ResonanceResult::Side::above_E0
                               : ResonanceResult::Side::below_E0;
  return out;
}

}  // namespace ptlab
