#include "siltlab/walks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace siltlab {

namespace {

double lerp_value(const std::vector<int32_t>& pos, int level, double t) {
  double tu = std::ldexp(1.0, -2 * level);
  double s = t / tu;
  int64_t n = int64_t(pos.size()) - 1;
  if (t < 0.0 || s > double(n) + 1e-9)
    fail(Err::horizon_exceeded, "time " + std::to_string(t) + " beyond walk horizon");
  int64_t k = std::min(int64_t(std::floor(s)), n - 1);
  if (n == 0) return double(pos[0]) * std::ldexp(1.0, -level);
  if (k < 0) k = 0;
  double frac = s - double(k);
  if (frac > 1.0) frac = 1.0;
  double v = double(pos[size_t(k)]) + frac * double(pos[size_t(k + 1)] - pos[size_t(k)]);
  return v * std::ldexp(1.0, -level);
}

}  // namespace

double Walk1D::value_at(double t) const { return lerp_value(pos, level, t); }

Vec2 PlanarWalk::value_at(double t) const {
  return {lerp_value(x, level, t), lerp_value(y, level, t)};
}

NestedFamily1D::NestedFamily1D(CoinMatrix coins, int max_level) : coins_(coins) {
  levels_.resize(size_t(max_level) + 1);
  for (int m = 0; m <= max_level; ++m) {
    levels_[size_t(m)].walk.level = m;
    levels_[size_t(m)].walk.pos.push_back(0);
    levels_[size_t(m)].exit_times.push_back(0);
    rows_.emplace_back(coins_, m);
  }
}

void NestedFamily1D::extend_level0(int64_t steps) {
  NestedLevel& lv = levels_[0];
  while (lv.walk.steps() < steps) {
    if (rows_[0].consumed() >= raw_cap_)
      fail(Err::insufficient_coins,
           "level 0 exhausted its coin budget at " + std::to_string(lv.walk.steps()) +
               " of " + std::to_string(steps) + " steps");
    int s = rows_[0].next();
    lv.walk.pos.push_back(lv.walk.pos.back() + s);
    lv.raw_consumed = rows_[0].consumed();
  }
}

void NestedFamily1D::extend_twisted(int m, int64_t steps) {
  NestedLevel& lv = levels_[size_t(m)];
  while (lv.walk.steps() < steps) {
    // Bridge k+1: raw steps until the untwisted partial sum first hits +-2.
    int64_t k = int64_t(lv.exit_times.size()) - 1;  // completed bridges
    ensure_steps(m - 1, k + 1);
    const Walk1D& parent = levels_[size_t(m - 1)].walk;
    int parent_inc = parent.pos[size_t(k + 1)] - parent.pos[size_t(k)];

    int raw_sum = 0;
    std::vector<int8_t> pending;
    while (true) {
      if (rows_[size_t(m)].consumed() >= raw_cap_)
        fail(Err::insufficient_coins,
             "level " + std::to_string(m) + " exhausted its coin budget at " +
                 std::to_string(lv.walk.steps()) + " of " + std::to_string(steps) +
                 " steps");
      int s = rows_[size_t(m)].next();
      pending.push_back(int8_t(s));
      raw_sum += s;
      if (raw_sum == 2 || raw_sum == -2) break;
    }
    // Flip the whole bridge when its raw sign disagrees with the parent's
    // (k+1)-th twisted increment; then the bridge displacement is exactly
    // 2 * parent increment and the refinement identity telescopes.
    bool flip = (raw_sum != 2 * parent_inc);
    for (int8_t s : pending) {
      int inc = flip ? -int(s) : int(s);
      lv.walk.pos.push_back(lv.walk.pos.back() + inc);
    }
    lv.exit_times.push_back(int64_t(lv.walk.pos.size()) - 1);
    lv.raw_consumed = rows_[size_t(m)].consumed();
  }
}

void NestedFamily1D::ensure_steps(int m, int64_t steps) {
  if (m == 0)
    extend_level0(steps);
  else
    extend_twisted(m, steps);
}

PlanarNestedFamily::PlanarNestedFamily(uint64_t seed, int max_level)
    : cx(CoinMatrix(derive_coordinate_seed(seed, 0)), max_level),
      cy(CoinMatrix(derive_coordinate_seed(seed, 1)), max_level) {}

NestedFamily1D build_nested_family_1d(CoinMatrix coins, int max_level, double horizon,
                                      int64_t raw_cap) {
  if (max_level < 0 || max_level > 20 || !(horizon > 0.0))
    fail(Err::config_invalid, "nested family needs 0 <= M <= 20 and horizon > 0");
  NestedFamily1D fam(coins, max_level);
  fam.set_raw_cap(raw_cap);
  for (int m = 0; m <= max_level; ++m) {
    int64_t need = int64_t(std::ceil(horizon * std::ldexp(1.0, 2 * m)));
    fam.ensure_steps(m, need);
  }
  return fam;
}

PlanarNestedFamily build_nested_family(uint64_t seed, int max_level, double horizon,
                                       int64_t raw_cap) {
  if (max_level < 0 || max_level > 20 || !(horizon > 0.0))
    fail(Err::config_invalid, "nested family needs 0 <= M <= 20 and horizon > 0");
  PlanarNestedFamily fam(seed, max_level);
  fam.cx.set_raw_cap(raw_cap);
  fam.cy.set_raw_cap(raw_cap);
  for (int m = 0; m <= max_level; ++m) {
    int64_t need = int64_t(std::ceil(horizon * std::ldexp(1.0, 2 * m)));
    fam.cx.ensure_steps(m, need);
    fam.cy.ensure_steps(m, need);
  }
  return fam;
}

Walk1D shrink(const NestedFamily1D& family, int m) {
  if (m < 0 || m > family.max_level())
    fail(Err::level_mismatch, "shrink level outside family range");
  return family.level(m).walk;
}

PlanarWalk shrink_planar(const PlanarNestedFamily& family, int m) {
  const Walk1D& wx = family.cx.level(m).walk;
  const Walk1D& wy = family.cy.level(m).walk;
  size_t len = std::min(wx.pos.size(), wy.pos.size());
  PlanarWalk w;
  w.level = m;
  w.x.assign(wx.pos.begin(), wx.pos.begin() + ptrdiff_t(len));
  w.y.assign(wy.pos.begin(), wy.pos.begin() + ptrdiff_t(len));
  return w;
}

Walk1D direct_walk_1d(const CoinMatrix& coins, int m, int64_t steps) {
  Walk1D w;
  w.level = m;
  w.pos.reserve(size_t(steps) + 1);
  w.pos.push_back(0);
  CoinRow row(coins, m);
  for (int64_t i = 0; i < steps; ++i) w.pos.push_back(w.pos.back() + row.next());
  return w;
}

PlanarWalk direct_planar_walk(uint64_t seed, int m, int64_t steps) {
  CoinMatrix cx(derive_coordinate_seed(seed, 0));
  CoinMatrix cy(derive_coordinate_seed(seed, 1));
  Walk1D wx = direct_walk_1d(cx, m, steps);
  Walk1D wy = direct_walk_1d(cy, m, steps);
  return pair_planar(wx, wy);
}

namespace {

// First-exit scan: indices where the path has moved exactly `unit` from the
// previous recorded exit. Returns stop indices (without the leading 0) and
// embedded positions in coarse units (with the leading 0).
void embed_scan(const std::vector<int32_t>& pos, int32_t unit, std::vector<int32_t>& stops,
                std::vector<int32_t>& coarse) {
  stops.clear();
  coarse.clear();
  coarse.push_back(pos[0] / unit);
  int32_t anchor = pos[0];
  for (size_t i = 1; i < pos.size(); ++i) {
    int32_t d = pos[i] - anchor;
    if (d == unit || d == -unit) {
      stops.push_back(int32_t(i));
      anchor = pos[i];
      coarse.push_back(anchor / unit);
    }
  }
}

}  // namespace

EmbeddingMap1D skorohod_embed(const Walk1D& fine, int m, int64_t min_steps) {
  if (m < 0 || m > fine.level) fail(Err::level_mismatch, "embedding level must be in [0, fine level]");
  EmbeddingMap1D em;
  em.coarse_level = m;
  em.fine_level = fine.level;
  int32_t unit = int32_t(1) << (fine.level - m);
  std::vector<int32_t> coarse;
  embed_scan(fine.pos, unit, em.stop, coarse);
  if (int64_t(em.stop.size()) < min_steps)
    fail(Err::path_too_short, "found " + std::to_string(em.stop.size()) + " exits, need " +
                                  std::to_string(min_steps));
  em.embedded.level = m;
  em.embedded.pos = std::move(coarse);
  return em;
}

EmbeddingMap skorohod_embed(const PlanarWalk& fine, int m, int64_t min_steps) {
  if (m < 0 || m > fine.level) fail(Err::level_mismatch, "embedding level must be in [0, fine level]");
  EmbeddingMap em;
  em.coarse_level = m;
  em.fine_level = fine.level;
  int32_t unit = int32_t(1) << (fine.level - m);
  std::vector<int32_t> cx, cy;
  embed_scan(fine.x, unit, em.stop_x, cx);
  embed_scan(fine.y, unit, em.stop_y, cy);
  size_t len = std::min(cx.size(), cy.size());
  if (int64_t(len) - 1 < min_steps)
    fail(Err::path_too_short, "found " + std::to_string(int64_t(len) - 1) + " planar exits, need " +
                                  std::to_string(min_steps));
  em.stop_x.resize(len - 1);
  em.stop_y.resize(len - 1);
  em.embedded.level = m;
  em.embedded.x.assign(cx.begin(), cx.begin() + ptrdiff_t(len));
  em.embedded.y.assign(cy.begin(), cy.begin() + ptrdiff_t(len));
  return em;
}

PlanarWalk pair_planar(const Walk1D& wx, const Walk1D& wy) {
  if (wx.level != wy.level) fail(Err::level_mismatch, "pairing walks of different levels");
  if (wx.pos.size() != wy.pos.size()) fail(Err::length_mismatch, "pairing walks of different lengths");
  PlanarWalk w;
  w.level = wx.level;
  w.x = wx.pos;
  w.y = wy.pos;
  return w;
}

void write_walk_csv(const PlanarWalk& walk, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Err::io_error, "cannot open " + path);
  os << "level,k,x_lattice,y_lattice\n";
  for (size_t k = 0; k < walk.x.size(); ++k)
    os << walk.level << ',' << k << ',' << walk.x[k] << ',' << walk.y[k] << '\n';
}

double sup_distance(const PlanarWalk& a, const PlanarWalk& b, double horizon) {
  if (!(horizon > 0.0)) fail(Err::config_invalid, "sup_distance horizon must be positive");
  const PlanarWalk& fine = (a.level >= b.level) ? a : b;
  const PlanarWalk& coarse = (a.level >= b.level) ? b : a;
  double tu_f = fine.time_unit();
  if (double(fine.steps()) * tu_f < horizon - 1e-12 ||
      double(coarse.steps()) * coarse.time_unit() < horizon - 1e-12)
    fail(Err::horizon_exceeded, "walk does not cover the comparison horizon");

  int dl = fine.level - coarse.level;
  int64_t ratio = int64_t(1) << (2 * dl);
  double inv_ratio = 1.0 / double(ratio);
  double su_f = fine.space_unit();
  double su_c = coarse.space_unit();

  int64_t n = int64_t(std::floor(horizon / tu_f + 1e-12));
  double max2 = 0.0;
  for (int64_t i = 0; i <= n; ++i) {
    double fx = double(fine.x[size_t(i)]) * su_f;
    double fy = double(fine.y[size_t(i)]) * su_f;
    int64_t k = i / ratio;
    int64_t r = i - k * ratio;
    double cx, cy;
    if (r == 0) {
      cx = double(coarse.x[size_t(k)]) * su_c;
      cy = double(coarse.y[size_t(k)]) * su_c;
    } else {
      double frac = double(r) * inv_ratio;
      cx = (double(coarse.x[size_t(k)]) +
            frac * double(coarse.x[size_t(k + 1)] - coarse.x[size_t(k)])) * su_c;
      cy = (double(coarse.y[size_t(k)]) +
            frac * double(coarse.y[size_t(k + 1)] - coarse.y[size_t(k)])) * su_c;
    }
    double dx = fx - cx, dy = fy - cy;
    double d2 = dx * dx + dy * dy;
    if (d2 > max2) max2 = d2;
  }
  // Horizon not on the fine mesh: compare the interpolated endpoint too.
  if (std::abs(double(n) * tu_f - horizon) > 1e-12) {
    Vec2 fa = fine.value_at(horizon);
    Vec2 fb = coarse.value_at(horizon);
    double d2 = (fa - fb).norm2();
    if (d2 > max2) max2 = d2;
  }
  return std::sqrt(max2);
}

}  // namespace siltlab
