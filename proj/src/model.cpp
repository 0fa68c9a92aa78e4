#include "ptlab/model.hpp"

#include <cmath>

namespace ptlab {

namespace {
constexpr complexd kI{0.0, 1.0};

inline complexd laplacian(const LatticeField& f, int n) {
  return f.at_or_zero(n + 1) - 2.0 * f.at_or_zero(n) + f.at_or_zero(n - 1);
}
}  // namespace

UVState vector_field(const UVState& s, const ModelParams& p) {
  const int N = s.half_width();
  UVState out{LatticeField(N), LatticeField(N)};
  for (int n = -N; n <= N; ++n) {
    const complexd u = s.u(n);
    const complexd v = s.v(n);
    const double uu = std::norm(u);
    const double vv = std::norm(v);
    const complexd rhs_u = p.eps * laplacian(s.v, n) + p.omega * v +
                           kI * p.gamma * u +
                           2.0 * ((2.0 * uu + vv) * v + u * u * std::conj(v));
    const complexd rhs_v = p.eps * laplacian(s.u, n) + p.omega * u -
                           kI * p.gamma * v +
                           2.0 * ((uu + 2.0 * vv) * u + std::conj(u) * v * v);
    // 2i du/dt = rhs  =>  du/dt = -i rhs / 2.
    out.u(n) = -0.5 * kI * rhs_u;
    out.v(n) = -0.5 * kI * rhs_v;
  }
  return out;
}

Eigen::VectorXcd stationary_residual(const LatticeField& U,
                                     const ModelParams& p, double E) {
  const int N = U.half_width();
  Eigen::VectorXcd R(2 * N + 1);
  for (int n = -N; n <= N; ++n) {
    const complexd Un = U(n);
    const complexd Ub = std::conj(Un);
    const complexd lap_bar = std::conj(laplacian(U, n));
    R[n + N] = p.eps * lap_bar + p.omega * Ub + kI * p.gamma * Un +
               6.0 * std::norm(Un) * Ub + 2.0 * Un * Un * Un - E * Un;
  }
  return R;
}

double energy(const UVState& s, const ModelParams& p) {
  const int N = s.half_width();
  double h = 0.0;
  for (int n = -N; n <= N; ++n) {
    const complexd u = s.u(n);
    const complexd v = s.v(n);
    const double dens = std::norm(u) + std::norm(v);
    const double cross = 2.0 * std::real(u * std::conj(v));  // u vbar + ubar v
    // i gamma (u vbar - ubar v) = -2 gamma Im(u vbar)
    h += dens * dens + cross * cross + p.omega * dens -
         2.0 * p.gamma * std::imag(u * std::conj(v));
  }
  // Bond terms, including the two boundary bonds to the zero ghosts.
  for (int n = -N - 1; n <= N; ++n) {
    h -= p.eps * (std::norm(s.u.at_or_zero(n + 1) - s.u.at_or_zero(n)) +
                  std::norm(s.v.at_or_zero(n + 1) - s.v.at_or_zero(n)));
  }
  return h;
}

double charge(const UVState& s) {
  const int N = s.half_width();
  double q = 0.0;
  for (int n = -N; n <= N; ++n)
    q += 2.0 * std::real(s.u(n) * std::conj(s.v(n)));
  return q;
}

UVState ab_to_uv(const LatticeField& A, const LatticeField& B) {
  if (A.half_width() != B.half_width())
    throw std::invalid_argument("A and B must share the same half_width");
  const int N = A.half_width();
  UVState out{LatticeField(N), LatticeField(N)};
  for (int n = -N; n <= N; ++n) {
    const complexd a = A(n);
    const complexd bbar = std::conj(B(n));
    out.u(n) = (a - kI * bbar) / 4.0;
    out.v(n) = (a + kI * bbar) / 4.0;
  }
  return out;
}

std::pair<LatticeField, LatticeField> uv_to_ab(const UVState& s) {
  const int N = s.half_width();
  LatticeField A(N), B(N);
  for (int n = -N; n <= N; ++n) {
    A(n) = 2.0 * (s.u(n) + s.v(n));
    B(n) = 2.0 * kI * (std::conj(s.v(n)) - std::conj(s.u(n)));
  }
  return {A, B};
}

UVState pt_apply(const UVState& s, bool reverse_time) {
  if (!reverse_time) return {s.v, s.u};
  return {s.v.conjugated(), s.u.conjugated()};
}

}  // namespace ptlab
