#pragma once

#include <cmath>
#include <cstdint>

namespace siltlab {

// Planar point in physical coordinates.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

// Planar lattice point in integer lattice units.
struct GridPoint {
  int32_t x = 0;
  int32_t y = 0;

  GridPoint operator+(GridPoint o) const { return {x + o.x, y + o.y}; }
  GridPoint operator-(GridPoint o) const { return {x - o.x, y - o.y}; }
  bool operator==(GridPoint o) const { return x == o.x && y == o.y; }
};

// Packs a lattice point into a nonzero 64-bit key (coordinates must stay
// below 2^30 in magnitude, which every walk at desk scale satisfies).
inline uint64_t pack_point(int32_t x, int32_t y) {
  const uint64_t bias = uint64_t(1) << 30;
  return ((uint64_t(int64_t(x)) + bias) << 32) | (uint64_t(int64_t(y)) + bias);
}

inline GridPoint unpack_point(uint64_t key) {
  const int64_t bias = int64_t(1) << 30;
  int64_t hx = int64_t(key >> 32) - bias;
  int64_t hy = int64_t(key & 0xffffffffULL) - bias;
  return {int32_t(hx), int32_t(hy)};
}

// Step direction of a planar simple walk, both components in {-1,+1}.
// Index layout: 0=(+,+), 1=(+,-), 2=(-,+), 3=(-,-).
inline int mu_index(int sx, int sy) { return (sx < 0 ? 2 : 0) + (sy < 0 ? 1 : 0); }

inline int mu_sign_x(int idx) { return idx >= 2 ? -1 : +1; }
inline int mu_sign_y(int idx) { return (idx & 1) ? -1 : +1; }

}  // namespace siltlab
