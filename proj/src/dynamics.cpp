#include "ptlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ptlab {

namespace {

constexpr double kBlowUpThreshold = 1e6;

// ----------------------------------------------------------------------------
// Flat-vector plumbing
// ----------------------------------------------------------------------------

Eigen::VectorXcd pack(const UVState& s) {
  const int L = s.u.size();
  Eigen::VectorXcd z(2 * L);
  z.head(L) = s.u.data();
  z.tail(L) = s.v.data();
  return z;
}

UVState unpack(const Eigen::VectorXcd& z, int half_width) {
  const int L = 2 * half_width + 1;
  UVState s{LatticeField(half_width), LatticeField(half_width)};
  s.u.data() = z.head(L);
  s.v.data() = z.tail(L);
  return s;
}

template <typename Vec>
Vec dirichlet_laplacian(const Vec& f) {
  const Eigen::Index L = f.size();
  Vec out(L);
  for (Eigen::Index i = 0; i < L; ++i) {
    typename Vec::Scalar acc = -2.0 * f[i];
    if (i + 1 < L) acc += f[i + 1];
    if (i > 0) acc += f[i - 1];
    out[i] = acc;
  }
  return out;
}

// One classical 4th-order step; the right-hand side may depend on t.
template <typename Vec, typename Rhs>
Vec rk4_step(const Vec& s, double t, double h, const Rhs& f) {
  const Vec k1 = f(s, t);
  const Vec k2 = f(Vec(s + (0.5 * h) * k1), t + 0.5 * h);
  const Vec k3 = f(Vec(s + (0.5 * h) * k2), t + 0.5 * h);
  const Vec k4 = f(Vec(s + h * k3), t + h);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_step_args(double T, double dt, int sample_every) {
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(dt > 0.0) || dt > 1e-2)
    throw std::invalid_argument("dt must lie in (0, 1e-2]");
  if (sample_every < 1)
    throw std::invalid_argument("sample_every must be >= 1");
}

bool blown_up(const Eigen::VectorXcd& z) {
  return !z.allFinite() || z.cwiseAbs().maxCoeff() > kBlowUpThreshold;
}

bool blown_up(const Eigen::VectorXd& z) {
  return !z.allFinite() || z.cwiseAbs().maxCoeff() > kBlowUpThreshold;
}

}  // namespace

// ----------------------------------------------------------------------------
// Full nonlinear chain
// ----------------------------------------------------------------------------

PtTrajectory integrate_pt_dnls(const UVState& initial, const ModelParams& p,
                               double T, double dt, int sample_every) {
  const double direction = T < 0.0 ? -1.0 : 1.0;
  const double span = std::abs(T);
  check_step_args(span, dt, sample_every);
  const int N = initial.half_width();
  const auto rhs = [&](const Eigen::VectorXcd& z, double) {
    return pack(vector_field(unpack(z, N), p));
  };

  PtTrajectory out;
  const auto sample = [&](double t, const Eigen::VectorXcd& z) {
    UVState s = unpack(z, N);
    const double H = energy(s, p);
    const double Q = charge(s);
    out.samples.push_back({t, std::move(s), H, Q});
  };

  Eigen::VectorXcd z = pack(initial);
  sample(0.0, z);
  const int n_steps = static_cast<int>(std::ceil(span / dt - 1e-12));
  double elapsed = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const double h = std::min(dt, span - elapsed);
    const Eigen::VectorXcd next =
        rk4_step(z, direction * elapsed, direction * h, rhs);
    if (blown_up(next)) {
      if (out.samples.back().t != direction * elapsed)
        sample(direction * elapsed, z);
      out.diverged = true;
      out.blow_up_time = direction * (elapsed + h);
      return out;
    }
    z = next;
    elapsed += h;
    if ((k + 1) % sample_every == 0 || k + 1 == n_steps)
      sample(direction * elapsed, z);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Linearisation about a breather (co-rotating frame)
// ----------------------------------------------------------------------------

GrowthFit integrate_linearized(const BreatherSolution& sol,
                               const UVState& perturbation, double T,
                               double dt) {
  check_step_args(T, dt, 1);
  const int N = sol.field.half_width();
  if (perturbation.half_width() != N)
    throw std::invalid_argument(
        "perturbation must live on the breather's lattice");
  Eigen::VectorXcd z = pack(perturbation);
  if (!(z.norm() > 0.0))
    throw std::invalid_argument("perturbation must be nonzero");

  const int L = 2 * N + 1;
  const ModelParams& p = sol.params;
  const double E = sol.E;
  Eigen::VectorXd m(L), c(L);  // |U|^2 and U^2 + conj(U)^2 per site
  for (int i = 0; i < L; ++i) {
    const complexd U = sol.field.data()[i];
    m[i] = std::norm(U);
    c[i] = 2.0 * std::real(U * U);
  }

  const complexd half_over_i(0.0, -0.5);  // 1 / (2i)
  const auto rhs = [&](const Eigen::VectorXcd& z_, double) {
    const auto u = z_.head(L);
    const auto v = z_.tail(L);
    const Eigen::VectorXcd lap_u = dirichlet_laplacian(Eigen::VectorXcd(u));
    const Eigen::VectorXcd lap_v = dirichlet_laplacian(Eigen::VectorXcd(v));
    Eigen::VectorXcd out(2 * L);
    const complexd ig(0.0, p.gamma);
    for (int i = 0; i < L; ++i) {
      const complexd cu = 2.0 * (4.0 * m[i] * v[i] + c[i] * std::conj(v[i]) +
                                 2.0 * c[i] * u[i] + 2.0 * m[i] * std::conj(u[i]));
      const complexd cv = 2.0 * (4.0 * m[i] * u[i] + c[i] * std::conj(u[i]) +
                                 2.0 * c[i] * v[i] + 2.0 * m[i] * std::conj(v[i]));
      out[i] = half_over_i * (p.eps * lap_v[i] + p.omega * v[i] + ig * u[i] +
                              cu - E * u[i]);
      out[L + i] = half_over_i * (p.eps * lap_u[i] + p.omega * u[i] -
                                  ig * v[i] + cv - E * v[i]);
    }
    return out;
  };

  // March with on-the-fly rescaling so growth never overflows; the rescaling
  // is exact for a linear flow.
  std::vector<double> ts, ys;
  double log_scale = -std::log(z.norm());
  z /= z.norm();
  ts.push_back(0.0);
  ys.push_back(0.0);
  const int n_steps = static_cast<int>(std::ceil(T / dt - 1e-12));
  double t = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const double h = std::min(dt, T - t);
    z = rk4_step(z, t, h, rhs);
    t += h;
    const double nrm = z.norm();
    ts.push_back(t);
    ys.push_back(std::log(nrm) - log_scale);
    if (nrm > 1e8 || nrm < 1e-8) {
      log_scale -= std::log(nrm);
      z /= nrm;
    }
  }

  // Least-squares line through the samples of the last half of [0, T].
  GrowthFit fit;
  double t_mean = 0.0, y_mean = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] >= 0.5 * T) {
      t_mean += ts[i];
      y_mean += ys[i];
      ++n;
    }
  if (n < 2) {
    fit.fit_residual = std::numeric_limits<double>::infinity();
    return fit;
  }
  t_mean /= n;
  y_mean /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] >= 0.5 * T) {
      stt += (ts[i] - t_mean) * (ts[i] - t_mean);
      sty += (ts[i] - t_mean) * (ys[i] - y_mean);
    }
  fit.growth_rate = sty / stt;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] >= 0.5 * T) {
      const double yhat = y_mean + fit.growth_rate * (ts[i] - t_mean);
      ss_res += (ys[i] - yhat) * (ys[i] - yhat);
    }
  const double rms = std::sqrt(ss_res / n);
  const double trend = std::abs(fit.growth_rate) * 0.5 * T;
  fit.fit_residual = rms / (1.0 + trend);
  fit.conclusive = fit.fit_residual <= 0.1;
  return fit;
}

// ----------------------------------------------------------------------------
// Orbital deviation probe
// ----------------------------------------------------------------------------

OrbitalProbe orbital_probe(const BreatherSolution& sol, double delta, double T,
                           double dt, int sample_every) {
  check_step_args(T, dt, sample_every);
  if (delta < 0.0 || delta > 1e-2)
    throw std::invalid_argument("delta must lie in [0, 1e-2]");

  const int N = sol.field.half_width();
  const ModelParams& p = sol.params;
  const double E = sol.E;
  const int L = 2 * N + 1;

  // In the co-rotating frame the breather is a genuine fixed point.
  const complexd iE_half(0.0, 0.5 * E);
  const auto rhs = [&](const Eigen::VectorXcd& z, double) {
    Eigen::VectorXcd out = pack(vector_field(unpack(z, N), p));
    out += iE_half * z;
    return out;
  };

  const Eigen::VectorXcd phi = pack(UVState{sol.field, sol.field.conjugated()});
  const double phi_sq = phi.squaredNorm();

  // Fixed unit-norm kick at the central site (both components).
  Eigen::VectorXcd kick = Eigen::VectorXcd::Zero(2 * L);
  kick[N] = complexd(0.6, 0.0);
  kick[L + N] = complexd(-0.48, 0.64);
  Eigen::VectorXcd z = phi + delta * kick;

  OrbitalProbe out;
  const auto deviation = [&](const Eigen::VectorXcd& psi) {
    const double overlap = std::abs(phi.dot(psi));
    const double d_sq = psi.squaredNorm() + phi_sq - 2.0 * overlap;
    return std::sqrt(std::max(0.0, d_sq));
  };
  const auto sample = [&](double t, const Eigen::VectorXcd& psi) {
    out.times.push_back(t);
    out.deviations.push_back(deviation(psi));
    out.max_deviation = std::max(out.max_deviation, out.deviations.back());
  };

  sample(0.0, z);
  const int n_steps = static_cast<int>(std::ceil(T / dt - 1e-12));
  double t = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const double h = std::min(dt, T - t);
    const Eigen::VectorXcd next = rk4_step(z, t, h, rhs);
    if (blown_up(next)) {
      out.diverged = true;
      out.blow_up_time = t + h;
      out.max_deviation = std::numeric_limits<double>::infinity();
      return out;
    }
    z = next;
    t += h;
    if ((k + 1) % sample_every == 0 || k + 1 == n_steps) sample(t, z);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Driven pendula chain
// ----------------------------------------------------------------------------

double PendulaParams::frequency() const {
  const double w_sq = 1.0 + mu * mu * omega_detune;
  if (!(w_sq > 0.0))
    throw std::domain_error("drive frequency undefined: 1 + mu^2 Omega <= 0");
  return std::sqrt(w_sq);
}

double PendulaParams::drive(double t) const {
  return drive_amplitude() * std::cos(2.0 * frequency() * t);
}

void validate(const PendulaParams& pp) {
  if (!(pp.mu > 0.0) || pp.mu > 0.5)
    throw std::invalid_argument("mu must lie in (0, 1/2]");
  if (!(1.0 + pp.mu * pp.mu * pp.omega_detune > 0.0))
    throw std::invalid_argument(
        "drive frequency undefined: 1 + mu^2 Omega <= 0");
}

double pendula_energy(const PendulaState& s, const PendulaParams& pp,
                      double t) {
  const std::size_t L = s.x.size();
  const double C = pp.coupling();
  const double D = pp.drive(t);
  double H = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    H += 0.5 * (s.xdot[i] * s.xdot[i] + s.ydot[i] * s.ydot[i]);
    H += 2.0 - std::cos(s.x[i]) - std::cos(s.y[i]);
    H -= D * s.x[i] * s.y[i];
  }
  // Springs, boundary bonds to the zero walls included.
  for (std::size_t i = 0; i + 1 < L; ++i) {
    const double dx = s.x[i + 1] - s.x[i];
    const double dy = s.y[i + 1] - s.y[i];
    H += 0.5 * C * (dx * dx + dy * dy);
  }
  if (L > 0) {
    H += 0.5 * C * (s.x.front() * s.x.front() + s.y.front() * s.y.front());
    H += 0.5 * C * (s.x.back() * s.x.back() + s.y.back() * s.y.back());
  }
  return H;
}

namespace {

Eigen::VectorXd pack_pendula(const PendulaState& s) {
  const Eigen::Index L = static_cast<Eigen::Index>(s.x.size());
  Eigen::VectorXd z(4 * L);
  for (Eigen::Index i = 0; i < L; ++i) {
    z[i] = s.x[i];
    z[L + i] = s.y[i];
    z[2 * L + i] = s.xdot[i];
    z[3 * L + i] = s.ydot[i];
  }
  return z;
}

PendulaState unpack_pendula(const Eigen::VectorXd& z) {
  const Eigen::Index L = z.size() / 4;
  PendulaState s;
  s.x.assign(z.data(), z.data() + L);
  s.y.assign(z.data() + L, z.data() + 2 * L);
  s.xdot.assign(z.data() + 2 * L, z.data() + 3 * L);
  s.ydot.assign(z.data() + 3 * L, z.data() + 4 * L);
  return s;
}

}  // namespace

PendulaTrajectory integrate_pendula(const PendulaState& initial,
                                    const PendulaParams& pp, double T,
                                    double dt, int sample_every) {
  check_step_args(T, dt, sample_every);
  validate(pp);
  const std::size_t L = initial.x.size();
  if (initial.y.size() != L || initial.xdot.size() != L ||
      initial.ydot.size() != L)
    throw std::invalid_argument("pendula state sequences must share a length");

  const double C = pp.coupling();
  const auto rhs = [&](const Eigen::VectorXd& z, double t) {
    const Eigen::Index n = static_cast<Eigen::Index>(L);
    const auto x = z.segment(0, n);
    const auto y = z.segment(n, n);
    const Eigen::VectorXd lap_x = dirichlet_laplacian(Eigen::VectorXd(x));
    const Eigen::VectorXd lap_y = dirichlet_laplacian(Eigen::VectorXd(y));
    const double D = pp.drive(t);
    Eigen::VectorXd out(4 * n);
    out.segment(0, n) = z.segment(2 * n, n);
    out.segment(n, n) = z.segment(3 * n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out[2 * n + i] = -std::sin(x[i]) + C * lap_x[i] + D * y[i];
      out[3 * n + i] = -std::sin(y[i]) + C * lap_y[i] + D * x[i];
    }
    return out;
  };

  PendulaTrajectory out;
  const auto sample = [&](double t, const Eigen::VectorXd& z) {
    PendulaState s = unpack_pendula(z);
    const double H = pendula_energy(s, pp, t);
    out.samples.push_back({t, std::move(s), H});
  };

  Eigen::VectorXd z = pack_pendula(initial);
  sample(0.0, z);
  const int n_steps = static_cast<int>(std::ceil(T / dt - 1e-12));
  double t = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const double h = std::min(dt, T - t);
    const Eigen::VectorXd next = rk4_step(z, t, h, rhs);
    if (blown_up(next)) {
      if (out.samples.back().t != t) sample(t, z);
      out.diverged = true;
      out.blow_up_time = t + h;
      return out;
    }
    z = next;
    t += h;
    if ((k + 1) % sample_every == 0 || k + 1 == n_steps) sample(t, z);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Envelope validation
// ----------------------------------------------------------------------------

ABState envelope_field(const ABState& s, const ModelParams& p) {
  const int N = s.A.half_width();
  if (s.B.half_width() != N)
    throw std::invalid_argument("A and B must share the same half_width");
  ABState out{LatticeField(N), LatticeField(N)};
  const Eigen::VectorXcd lap_A = dirichlet_laplacian(s.A.data());
  const Eigen::VectorXcd lap_B = dirichlet_laplacian(s.B.data());
  const complexd half_over_i(0.0, -0.5);
  for (int i = 0; i < s.A.size(); ++i) {
    const complexd A = s.A.data()[i], B = s.B.data()[i];
    out.A.data()[i] =
        half_over_i * (p.eps * lap_A[i] + p.omega * A + p.gamma * std::conj(B) +
                       0.5 * std::norm(A) * A);
    out.B.data()[i] =
        half_over_i * (p.eps * lap_B[i] + p.omega * B + p.gamma * std::conj(A) +
                       0.5 * std::norm(B) * B);
  }
  return out;
}

MultiscaleReport multiscale_validate(const ABState& initial,
                                     const PendulaParams& pp, double T_slow,
                                     double dt_fast, int sample_every) {
  check_step_args(T_slow, dt_fast, sample_every);
  validate(pp);
  const int N = initial.A.half_width();
  if (initial.B.half_width() != N)
    throw std::invalid_argument("A and B must share the same half_width");

  const double mu = pp.mu;
  const double w = pp.frequency();
  const ModelParams p{pp.gamma, pp.omega_detune, pp.eps_coupling};
  const int L = 2 * N + 1;

  // Zero-remainder synthesis at t = 0: the envelope and its exact time
  // derivative, the slow chain-rule term included.
  const ABState dot0 = envelope_field(initial, p);
  PendulaState ps;
  ps.x.resize(L);
  ps.y.resize(L);
  ps.xdot.resize(L);
  ps.ydot.resize(L);
  const complexd iw(0.0, w);
  for (int i = 0; i < L; ++i) {
    const complexd A = initial.A.data()[i], B = initial.B.data()[i];
    ps.x[i] = 2.0 * mu * std::real(A);
    ps.y[i] = 2.0 * mu * std::real(B);
    ps.xdot[i] = 2.0 * mu * std::real(iw * A) +
                 2.0 * mu * mu * mu * std::real(dot0.A.data()[i]);
    ps.ydot[i] = 2.0 * mu * std::real(iw * B) +
                 2.0 * mu * mu * mu * std::real(dot0.B.data()[i]);
  }

  // Lockstep march: one fast pendula step of dt_fast per slow envelope step
  // of mu^2 dt_fast, so the envelope is known exactly at every fast sample.
  const double C = pp.coupling();
  const auto pendula_rhs = [&](const Eigen::VectorXd& z, double t) {
    const Eigen::Index n = L;
    const auto x = z.segment(0, n);
    const auto y = z.segment(n, n);
    const Eigen::VectorXd lap_x = dirichlet_laplacian(Eigen::VectorXd(x));
    const Eigen::VectorXd lap_y = dirichlet_laplacian(Eigen::VectorXd(y));
    const double D = pp.drive(t);
    Eigen::VectorXd out(4 * n);
    out.segment(0, n) = z.segment(2 * n, n);
    out.segment(n, n) = z.segment(3 * n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out[2 * n + i] = -std::sin(x[i]) + C * lap_x[i] + D * y[i];
      out[3 * n + i] = -std::sin(y[i]) + C * lap_y[i] + D * x[i];
    }
    return out;
  };
  const auto envelope_rhs = [&](const Eigen::VectorXcd& z, double) {
    ABState s{LatticeField(N), LatticeField(N)};
    s.A.data() = z.head(L);
    s.B.data() = z.tail(L);
    const ABState d = envelope_field(s, p);
    Eigen::VectorXcd out(2 * L);
    out.head(L) = d.A.data();
    out.tail(L) = d.B.data();
    return out;
  };

  MultiscaleReport rep;
  rep.mu_used = mu;
  Eigen::VectorXd zp = pack_pendula(ps);
  Eigen::VectorXcd ze(2 * L);
  ze.head(L) = initial.A.data();
  ze.tail(L) = initial.B.data();

  const auto sample = [&](double t) {
    double err = 0.0;
    const complexd ph = std::exp(complexd(0.0, w * t));
    for (int i = 0; i < L; ++i) {
      const double xa = 2.0 * mu * std::real(ze[i] * ph);
      const double ya = 2.0 * mu * std::real(ze[L + i] * ph);
      err = std::max(err, std::abs(zp[i] - xa));
      err = std::max(err, std::abs(zp[L + i] - ya));
    }
    rep.t_phys.push_back(t);
    rep.errors.push_back(err);
    rep.error_norm = std::max(rep.error_norm, err);
  };

  sample(0.0);
  const double T_phys = T_slow / (mu * mu);
  const int n_steps = static_cast<int>(std::ceil(T_phys / dt_fast - 1e-12));
  double t = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const double h = std::min(dt_fast, T_phys - t);
    const Eigen::VectorXd next = rk4_step(zp, t, h, pendula_rhs);
    if (blown_up(next)) {
      rep.diverged = true;
      rep.blow_up_time = t + h;
      rep.error_norm = std::numeric_limits<double>::infinity();
      return rep;
    }
    zp = next;
    ze = rk4_step(ze, mu * mu * t, mu * mu * h, envelope_rhs);
    t += h;
    if ((k + 1) % sample_every == 0 || k + 1 == n_steps) sample(t);
  }
  return rep;
}

MultiscaleReport multiscale_validate(const DimerPoint& pt,
                                     const PendulaParams& pp, double T_slow,
                                     int half_width, double dt_fast,
                                     int sample_every) {
  const LatticeField U = seed_field(pt, half_width);
  const auto ab = uv_to_ab(UVState{U, U.conjugated()});
  return multiscale_validate(ABState{ab.first, ab.second}, pp, T_slow, dt_fast,
                             sample_every);
}

}  // namespace ptlab
