#include "siltlab/oracles.hpp"

#include <cmath>

#include "siltlab/errors.hpp"
#include "siltlab/quadrature.hpp"

namespace siltlab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double exp_integral_neg(double x) {
  if (!(x < 0.0)) fail(Err::domain_error, "Ei is evaluated on negative arguments only");
  if (x >= -6.0) {
    // Ei(x) = C + ln|x| + sum_k x^k / (k k!)
    double sum = 0.0, p = 1.0;
    for (int k = 1; k <= 200; ++k) {
      p *= x / double(k);
      double term = p / double(k);
      sum += term;
      if (std::abs(term) < 1e-18 * (1.0 + std::abs(sum))) break;
    }
    return kEulerGamma + std::log(-x) + sum;
  }
  // Ei(x) = -E1(-x); E1 by the continued fraction
  // e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...))), modified Lentz.
  double z = -x;
  const double tiny = 1e-290;
  double f = z + 1.0, C = f, D = 0.0;
  for (int k = 1; k <= 400; ++k) {
    double a = -double(k) * double(k);
    double b = z + 2.0 * double(k) + 1.0;
    D = b + a * D;
    if (D == 0.0) D = tiny;
    C = b + a / C;
    if (C == 0.0) C = tiny;
    D = 1.0 / D;
    double delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return -std::exp(-z) / f;
}

double expected_gamma(double t, Vec2 y) {
  if (!(t > 0.0)) fail(Err::nonpositive_time, "expected_gamma needs t > 0");
  double r2 = y.norm2();
  if (r2 == 0.0) return t / (2.0 * kPi) * (std::log(2.0 * t) - kEulerGamma - 1.0);
  double s = r2 / (2.0 * t);
  return t / kPi * 0.5 * std::log(r2) - (r2 + 2.0 * t) / (4.0 * kPi) * exp_integral_neg(-s) -
         t / (2.0 * kPi) * std::exp(-s);
}

double expected_x(double t, Vec2 y) {
  if (!(t > 0.0)) fail(Err::nonpositive_time, "expected_x needs t > 0");
  double r2 = y.norm2();
  if (r2 == 0.0) return 0.5 * t * (std::log(2.0 * t) - kEulerGamma - 1.0);
  double s = r2 / (2.0 * t);
  return 0.5 * t * std::log(r2) - (r2 + 2.0 * t) / 4.0 * exp_integral_neg(-s) -
         0.5 * t * std::exp(-s);
}

double psi(double u, PsiMode mode) {
  if (u < 0.0) fail(Err::negative_argument, "psi is defined for u >= 0");
  if (mode == PsiMode::closed_form) return u <= 1.0 ? u : 1.0 / u;
  // Symmetric about theta = pi, so integrate half and double. The integrand
  // has an integrable log singularity as u -> 1; clamp the argument to keep
  // the evaluations finite.
  auto integrand = [u](double th) {
    double arg = u * u + 1.0 + 2.0 * u * std::cos(th);
    if (arg < 1e-300) arg = 1e-300;
    return std::log(arg) * std::cos(th);
  };
  return adaptive_simpson(integrand, 0.0, kPi, 1e-11, 40) / kPi;
}

Vec2 nabla_phi_disc_average(Vec2 x, double delta) {
  double r = x.norm();
  if (r == 0.0) return {0.0, 0.0};
  double mag = psi(r / delta, PsiMode::closed_form) / delta;
  return x * (mag / r);
}

}  // namespace siltlab
