#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace ptlab {

using complexd = std::complex<double>;

// ============================================================================
// Model parameters of the PT-symmetric discrete NLS chain
//
//   2i du_n/dt = eps (v_{n+1} - 2 v_n + v_{n-1}) + Omega v_n + i gamma u_n
//                + 2 [ (2|u_n|^2 + |v_n|^2) v_n + u_n^2 conj(v_n) ]
//   2i dv_n/dt = eps (u_{n+1} - 2 u_n + u_{n-1}) + Omega u_n - i gamma v_n
//                + 2 [ (|u_n|^2 + 2|v_n|^2) u_n + conj(u_n) v_n^2 ]
//
// gamma is the gain/loss strength, Omega the detuning, eps the inter-site
// coupling. The chain is truncated to sites n = -half_width .. +half_width
// with Dirichlet (zero) ghosts beyond the ends.
// ============================================================================
struct ModelParams {
  double gamma = 1.0;
  double omega = 2.0;
  double eps = 0.0;
};

// Complex amplitudes on the sites n = -half_width() .. +half_width().
// Out-of-range neighbours read as zero, matching the Dirichlet truncation.
class LatticeField {
 public:
  LatticeField() = default;
  explicit LatticeField(int half_width)
      : half_width_(half_width),
        values_(Eigen::VectorXcd::Zero(2 * half_width + 1)) {
    if (half_width < 0) throw std::invalid_argument("half_width must be >= 0");
  }

  int half_width() const { return half_width_; }
  int size() const { return static_cast<int>(values_.size()); }

  complexd& operator()(int n) { return values_[n + half_width_]; }
  const complexd& operator()(int n) const { return values_[n + half_width_]; }

  // Value with zero ghosts outside the truncation window.
  complexd at_or_zero(int n) const {
    return (n < -half_width_ || n > half_width_) ? complexd(0.0)
                                                 : values_[n + half_width_];
  }

  Eigen::VectorXcd& data() { return values_; }
  const Eigen::VectorXcd& data() const { return values_; }

  double sup_norm() const {
    return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
  }

  // sup |f_n| over |n| > exclude_radius (0 if nothing is left).
  double tail_sup(int exclude_radius) const {
    double m = 0.0;
    for (int n = -half_width_; n <= half_width_; ++n)
      if (std::abs(n) > exclude_radius)
        m = std::max(m, std::abs((*this)(n)));
    return m;
  }

  LatticeField conjugated() const {
    LatticeField out = *this;
    out.values_ = values_.conjugate();
    return out;
  }

 private:
  int half_width_ = 0;
  Eigen::VectorXcd values_ = Eigen::VectorXcd::Zero(1);
};

// State of the first-order system: the pair of fields (u, v).
struct UVState {
  LatticeField u;
  LatticeField v;

  UVState() = default;
  UVState(LatticeField u_, LatticeField v_)
      : u(std::move(u_)), v(std::move(v_)) {
    if (u.half_width() != v.half_width())
      throw std::invalid_argument("u and v must share the same half_width");
  }

  int half_width() const { return u.half_width(); }
};

// ============================================================================
// Error types
// ============================================================================

// Newton iteration hit a (numerically) rank-deficient Jacobian.
struct singular_jacobian_error : std::runtime_error {
  explicit singular_jacobian_error(const std::string& what)
      : std::runtime_error(what) {}
};

// Newton failed to converge within the iteration budget / damping floor.
struct no_convergence_error : std::runtime_error {
  no_convergence_error(const std::string& what, double residual, int iters)
      : std::runtime_error(what), final_residual(residual), iterations(iters) {}
  double final_residual = 0.0;
  int iterations = 0;
};

}  // namespace ptlab
