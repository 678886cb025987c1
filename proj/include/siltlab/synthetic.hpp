#pragma once

#include <cmath>

#include "siltlab/grid_field.hpp"
#include "siltlab/rng.hpp"

namespace siltlab {

// Scalar-field specs with analytic derivatives, used by verification suites.

// Sum of `terms` random plane waves a sin(w . x + th).
inline GridScalarSpec make_trig_spec(uint64_t seed, int terms = 3, double freq = 1.0,
                                     double amp = 1.0) {
  struct Wave {
    double a, wx, wy, th;
  };
  std::vector<Wave> ws;
  uint64_t s = seed;
  auto u = [&]() {
    s = splitmix64(s + 0x9E3779B97F4A7C15ULL);
    return 2.0 * (double(s >> 11) * 0x1.0p-53) - 1.0;
  };
  for (int k = 0; k < terms; ++k)
    ws.push_back({amp * (0.4 + 0.6 * std::abs(u())), freq * (0.3 + u()), freq * (0.3 + u()),
                  3.0 * u()});

  GridScalarSpec g;
  auto phase = [ws](Vec2 p, auto&& f) {
    double acc = 0.0;
    for (const auto& w : ws) acc += f(w, w.wx * p.x + w.wy * p.y + w.th);
    return acc;
  };
  g.g = [phase](Vec2 p) {
    return phase(p, [](const auto& w, double z) { return w.a * std::sin(z); });
  };
  g.d1 = [phase](Vec2 p) {
    return phase(p, [](const auto& w, double z) { return w.a * w.wx * std::cos(z); });
  };
  g.d2 = [phase](Vec2 p) {
    return phase(p, [](const auto& w, double z) { return w.a * w.wy * std::cos(z); });
  };
  g.d11 = [phase](Vec2 p) {
    return phase(p, [](const auto& w, double z) { return -w.a * w.wx * w.wx * std::sin(z); });
  };
  g.d22 = [phase](Vec2 p) {
    return phase(p, [](const auto& w, double z) { return -w.a * w.wy * w.wy * std::sin(z); });
  };
  g.d111 = [phase](Vec2 p) {
    return phase(p, [](const auto& w, double z) { return -w.a * w.wx * w.wx * w.wx * std::cos(z); });
  };
  g.d222 = [phase](Vec2 p) {
    return phase(p, [](const auto& w, double z) { return -w.a * w.wy * w.wy * w.wy * std::cos(z); });
  };
  return g;
}

// g = sin x1 cos x2.
inline GridScalarSpec make_sincos_spec() {
  GridScalarSpec g;
  g.g = [](Vec2 p) { return std::sin(p.x) * std::cos(p.y); };
  g.d1 = [](Vec2 p) { return std::cos(p.x) * std::cos(p.y); };
  g.d2 = [](Vec2 p) { return -std::sin(p.x) * std::sin(p.y); };
  g.d11 = [](Vec2 p) { return -std::sin(p.x) * std::cos(p.y); };
  g.d22 = [](Vec2 p) { return -std::sin(p.x) * std::cos(p.y); };
  g.d111 = [](Vec2 p) { return -std::cos(p.x) * std::cos(p.y); };
  g.d222 = [](Vec2 p) { return std::sin(p.x) * std::sin(p.y); };
  return g;
}

// Random full cubic polynomial; its third partials are constant, so the
// discrete curl of its gradient vanishes and the modification is a no-op.
inline GridScalarSpec make_cubic_spec(uint64_t seed) {
  uint64_t s = seed;
  auto u = [&]() {
    s = splitmix64(s + 0x165667B19E3779F9ULL);
    return 2.0 * (double(s >> 11) * 0x1.0p-53) - 1.0;
  };
  double c30 = u(), c21 = u(), c12 = u(), c03 = u();
  double c20 = u(), c11 = u(), c02 = u(), c10 = u(), c01 = u();
  GridScalarSpec g;
  g.g = [=](Vec2 p) {
    return c30 * p.x * p.x * p.x + c21 * p.x * p.x * p.y + c12 * p.x * p.y * p.y +
           c03 * p.y * p.y * p.y + c20 * p.x * p.x + c11 * p.x * p.y + c02 * p.y * p.y +
           c10 * p.x + c01 * p.y;
  };
  g.d1 = [=](Vec2 p) {
    return 3 * c30 * p.x * p.x + 2 * c21 * p.x * p.y + c12 * p.y * p.y + 2 * c20 * p.x +
           c11 * p.y + c10;
  };
  g.d2 = [=](Vec2 p) {
    return c21 * p.x * p.x + 2 * c12 * p.x * p.y + 3 * c03 * p.y * p.y + c11 * p.x +
           2 * c02 * p.y + c01;
  };
  g.d11 = [=](Vec2 p) { return 6 * c30 * p.x + 2 * c21 * p.y + 2 * c20; };
  g.d22 = [=](Vec2 p) { return 2 * c12 * p.x + 6 * c03 * p.y + 2 * c02; };
  g.d111 = [=](Vec2) { return 6 * c30; };
  g.d222 = [=](Vec2) { return 6 * c03; };
  return g;
}

// g = exp(-|x|^2).
inline GridScalarSpec make_gaussian_spec() {
  auto e = [](Vec2 p) { return std::exp(-(p.x * p.x + p.y * p.y)); };
  GridScalarSpec g;
  g.g = e;
  g.d1 = [e](Vec2 p) { return -2.0 * p.x * e(p); };
  g.d2 = [e](Vec2 p) { return -2.0 * p.y * e(p); };
  g.d11 = [e](Vec2 p) { return (4.0 * p.x * p.x - 2.0) * e(p); };
  g.d22 = [e](Vec2 p) { return (4.0 * p.y * p.y - 2.0) * e(p); };
  g.d111 = [e](Vec2 p) { return (12.0 * p.x - 8.0 * p.x * p.x * p.x) * e(p); };
  g.d222 = [e](Vec2 p) { return (12.0 * p.y - 8.0 * p.y * p.y * p.y) * e(p); };
  return g;
}

// g = |x|^2 / 2, grad g = x.
inline GridScalarSpec make_radial_quadratic_spec() {
  GridScalarSpec g;
  g.g = [](Vec2 p) { return 0.5 * (p.x * p.x + p.y * p.y); };
  g.d1 = [](Vec2 p) { return p.x; };
  g.d2 = [](Vec2 p) { return p.y; };
  g.d11 = [](Vec2) { return 1.0; };
  g.d22 = [](Vec2) { return 1.0; };
  g.d111 = [](Vec2) { return 0.0; };
  g.d222 = [](Vec2) { return 0.0; };
  return g;
}

}  // namespace siltlab
