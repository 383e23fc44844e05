#pragma once

// Power-of-norm composite terms  psi(x) = (sigma / p) * |x|_q^p.

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "resist/envelope.hpp"
#include "resist/errors.hpp"

namespace resist {

template <typename Scalar>
struct PowerNorm {
  Scalar sigma = Scalar(1);
  Scalar power = Scalar(2);
  Scalar norm_q = Scalar(2);

  PowerNorm() = default;
  PowerNorm(Scalar sigma_, Scalar power_, Scalar norm_q_)
      : sigma(sigma_), power(power_), norm_q(norm_q_) {
    if (!(sigma > Scalar(0)) || !std::isfinite(double(sigma))) {
      throw ConfigError("regularizer sigma must be positive and finite");
    }
    if (!(power >= Scalar(2)) || !std::isfinite(double(power))) {
      throw ConfigError("regularizer power p must satisfy p >= 2");
    }
    if (!(norm_q >= Scalar(1)) || !std::isfinite(double(norm_q))) {
      throw ConfigError("regularizer norm q must satisfy q >= 1");
    }
  }

  bool euclidean() const noexcept { return norm_q == Scalar(2); }
};

/// The l_q norm, scaled by the largest magnitude to avoid overflow in |x_i|^q.
template <typename Derived>
typename Derived::Scalar lq_norm(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar q) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return Scalar(0);
  if (q == Scalar(2)) return x.norm();
  if (q == Scalar(1)) return x.template lpNorm<1>();
  const Scalar top = x.cwiseAbs().maxCoeff();
  if (top == Scalar(0)) return Scalar(0);
  return top * std::pow((x.cwiseAbs() / top).array().pow(q).sum(), Scalar(1) / q);
}

template <typename Scalar, typename Derived>
Scalar reg_value(const PowerNorm<Scalar>& reg, const Eigen::MatrixBase<Derived>& x) {
  return reg.sigma / reg.power * std::pow(lq_norm(x, reg.norm_q), reg.power);
}

/// Gradient for q = 2 (well defined at 0 since p >= 2); a subgradient otherwise,
/// choosing 0 for the sign of zero coordinates.
template <typename Scalar, typename Derived>
Vec<Scalar> reg_subgrad(const PowerNorm<Scalar>& reg, const Eigen::MatrixBase<Derived>& x) {
  const Scalar nrm = lq_norm(x, reg.norm_q);
  if (nrm == Scalar(0)) return Vec<Scalar>::Zero(x.size());
  if (reg.euclidean()) return reg.sigma * std::pow(nrm, reg.power - Scalar(2)) * x;

  Vec<Scalar> unit(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar xi = x(i);
    const Scalar s = xi > Scalar(0) ? Scalar(1) : (xi < Scalar(0) ? Scalar(-1) : Scalar(0));
    unit(i) = reg.norm_q == Scalar(1) ? s : s * std::pow(std::abs(xi) / nrm, reg.norm_q - Scalar(1));
  }
  return reg.sigma * std::pow(nrm, reg.power - Scalar(1)) * unit;
}

/// Residual  L (tau - r) + sigma tau^(p-1)  of the radial prox equation.
template <typename Scalar>
Scalar power_prox_residual(Scalar tau, Scalar radius, Scalar lipschitz, Scalar sigma, Scalar power) {
  return lipschitz * (tau - radius) + sigma * std::pow(tau, power - Scalar(1));
}

/// Root in [0, radius] of the radial prox equation by bisection-safeguarded Newton.
/// Exposed separately so the closed forms for p = 2, 3 can be checked against it.
template <typename Scalar>
Scalar power_prox_radius_newton(Scalar radius, Scalar lipschitz, Scalar sigma, Scalar power) {
  if (radius == Scalar(0)) return Scalar(0);
  Scalar lo = Scalar(0);
  Scalar hi = radius;
  // Start from the p = 2 root, which lies inside the bracket.
  Scalar tau = lipschitz * radius / (lipschitz + sigma * std::pow(radius, power - Scalar(2)));
  for (int it = 0; it < 200; ++it) {
    const Scalar res = power_prox_residual(tau, radius, lipschitz, sigma, power);
    if (res == Scalar(0)) return tau;
    if (res > Scalar(0)) {
      hi = tau;
    } else {
      lo = tau;
    }
    const Scalar slope = lipschitz + (power - Scalar(1)) * sigma * std::pow(tau, power - Scalar(2));
    Scalar next = tau - res / slope;
    if (!(next > lo && next < hi)) next = Scalar(0.5) * (lo + hi);
    if (std::abs(next - tau) <= Scalar(2) * std::numeric_limits<Scalar>::epsilon() * tau ||
        hi - lo <= std::numeric_limits<Scalar>::epsilon() * hi) {
      return next;
    }
    tau = next;
  }
  return tau;
}

/// Radius of the prox point: closed forms for p = 2 and p = 3, Newton otherwise.
template <typename Scalar>
Scalar power_prox_radius(Scalar radius, Scalar lipschitz, Scalar sigma, Scalar power) {
  if (radius == Scalar(0)) return Scalar(0);
  if (power == Scalar(2)) return lipschitz * radius / (lipschitz + sigma);
  if (power == Scalar(3)) {
    // (-L + sqrt(L^2 + 4 sigma L r)) / (2 sigma), rationalized against cancellation.
    return Scalar(2) * lipschitz * radius /
           (lipschitz + std::sqrt(lipschitz * lipschitz + Scalar(4) * sigma * lipschitz * radius));
  }
  return power_prox_radius_newton(radius, lipschitz, sigma, power);
}

/// argmin_y (L/2)|y - v|^2 + (sigma/p)|y|^p  for the Euclidean norm.
template <typename Scalar, typename Derived>
Vec<Scalar> euclidean_power_prox(const PowerNorm<Scalar>& reg, const Eigen::MatrixBase<Derived>& v,
                                 Scalar lipschitz) {
  if (!reg.euclidean()) {
    throw UnsupportedError("proximal step is only available for the Euclidean norm (q = 2), got q = " +
                           std::to_string(double(reg.norm_q)));
  }
  if (!(lipschitz > Scalar(0))) throw InputError("prox step needs L > 0");
  const Scalar radius = v.norm();
  if (radius == Scalar(0)) return Vec<Scalar>::Zero(v.size());
  const Scalar tau = power_prox_radius(radius, lipschitz, reg.sigma, reg.power);
  const Scalar res = power_prox_residual(tau, radius, lipschitz, reg.sigma, reg.power);
  if (!(std::abs(res) <= Scalar(1e-12) * lipschitz * (Scalar(1) + radius))) {
    throw NumericalError("radial prox root did not converge: residual " + std::to_string(double(res)));
  }
  return (tau / radius) * v;
}

using Regularizer = PowerNorm<double>;

}  // namespace resist
