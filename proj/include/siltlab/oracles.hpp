#pragma once

#include "siltlab/geometry.hpp"

namespace siltlab {

// Euler–Mascheroni constant.
inline constexpr double kEulerGamma = 0.57721566490153286;

// Exponential integral Ei(x) for x < 0: power series with the Euler constant
// for |x| <= 6, modified-Lentz continued fraction of E1(-x) beyond. Absolute
// accuracy around 1e-13 over the range used here. Throws DomainError for
// x >= 0.
double exp_integral_neg(double x);

// E gamma(t, y): closed-form expectation of the renormalised planar
// self-intersection local time. y = 0 evaluates the (t/2pi)(log 2t - C - 1)
// branch; the y != 0 branch is continuous into it. Throws NonpositiveTime.
double expected_gamma(double t, Vec2 y);

// E X(t, y): expectation of the log integral; equals pi * expected_gamma
// identically (the two displays share every building block).
double expected_x(double t, Vec2 y);

enum class PsiMode { closed_form, quadrature };

// Psi(u) = (1/2pi) int_0^{2pi} log(u^2 + 1 + 2u cos th) cos th dth,
// which collapses to u on [0,1] and 1/u beyond. quadrature mode integrates
// adaptively (absolute tolerance 1e-11); closed_form evaluates the collapsed
// expression. Throws NegativeArgument.
double psi(double u, PsiMode mode = PsiMode::closed_form);

// Disc-average representation of the mollified log-gradient:
// (pi delta^2)^-1 int_{B_delta(0)} (x-z)/|x-z|^2 dz, reduced to magnitude
// Psi(|x|/delta)/delta along x. Coincides with the gradient of phi_delta.
Vec2 nabla_phi_disc_average(Vec2 x, double delta);

}  // namespace siltlab
