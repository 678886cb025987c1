#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "siltlab/errors.hpp"
#include "siltlab/geometry.hpp"
#include "siltlab/rng.hpp"

namespace siltlab {

// One-dimensional simple symmetric walk at dyadic level m: integer positions
// in lattice units of 2^-m, one step per 2^-2m time units, pos[0] = 0.
struct Walk1D {
  int level = 0;
  std::vector<int32_t> pos;

  int64_t steps() const { return int64_t(pos.size()) - 1; }
  double space_unit() const { return std::ldexp(1.0, -level); }
  double time_unit() const { return std::ldexp(1.0, -2 * level); }

  // Physical value at real time t (linear interpolation between steps).
  double value_at(double t) const;
};

// Planar walk with diagonal steps: both coordinate increments in {-1,+1}.
struct PlanarWalk {
  int level = 0;
  std::vector<int32_t> x, y;

  int64_t steps() const { return int64_t(x.size()) - 1; }
  double space_unit() const { return std::ldexp(1.0, -level); }
  double time_unit() const { return std::ldexp(1.0, -2 * level); }
  GridPoint at(int64_t k) const { return {x[size_t(k)], y[size_t(k)]}; }
  Vec2 value_at(double t) const;
};

// One level of the nested ("twist and shrink") construction. `walk` is the
// twisted walk of the level; T holds its first-exit times of +-2 relative to
// the previous exit (T[0] = 0), which delimit the bridges refining the level
// below.
struct NestedLevel {
  Walk1D walk;
  std::vector<int64_t> exit_times;  // T(0)=0, strictly increasing
  int64_t raw_consumed = 0;         // coins read from the level's row
};

// Nested family of one-dimensional twisted walks, level 0..M, built from one
// coin-matrix row per level. Level m+1 refines level m exactly:
// S~_{m+1}(T_{m+1}(k)) = 2 S~_m(k) for every k in range.
class NestedFamily1D {
 public:
  NestedFamily1D(CoinMatrix coins, int max_level);

  int max_level() const { return int(levels_.size()) - 1; }
  const NestedLevel& level(int m) const { return levels_.at(size_t(m)); }
  const CoinMatrix& coins() const { return coins_; }

  // Extends level m until it has at least `steps` increments, recursively
  // extending lower levels as their increments get consumed by bridges.
  // Throws InsufficientCoins if a level would need more than `raw_cap`
  // coins from its row.
  void ensure_steps(int m, int64_t steps);

  void set_raw_cap(int64_t cap) { raw_cap_ = cap; }

 private:
  void extend_level0(int64_t steps);
  void extend_twisted(int m, int64_t steps);

  CoinMatrix coins_;
  std::vector<NestedLevel> levels_;
  std::vector<CoinRow> rows_;
  int64_t raw_cap_ = std::numeric_limits<int64_t>::max();
};

// Planar nested family: two independent coordinate families built from
// coordinate-derived sub-seeds of one experiment seed.
struct PlanarNestedFamily {
  NestedFamily1D cx, cy;

  PlanarNestedFamily(uint64_t seed, int max_level);
};

// Builds the nested family covering time [0, K] on every level 0..M, i.e.
// level m carries at least ceil(K * 4^m) twisted steps (lower levels usually
// end up longer because bridges of the level above consume extra parent
// increments). `raw_cap` bounds the coins any single level may read; the
// default is unlimited since the coin matrix is a counter-based stream.
PlanarNestedFamily build_nested_family(uint64_t seed, int max_level, double horizon,
                                       int64_t raw_cap = std::numeric_limits<int64_t>::max());

NestedFamily1D build_nested_family_1d(CoinMatrix coins, int max_level, double horizon,
                                      int64_t raw_cap = std::numeric_limits<int64_t>::max());

// The m-th shrunken walk of the family: the twisted integer path reinterpreted
// at spatial unit 2^-m and time unit 2^-2m. No scaling is performed.
Walk1D shrink(const NestedFamily1D& family, int m);
PlanarWalk shrink_planar(const PlanarNestedFamily& family, int m);

// Plain simple symmetric walk at level m read directly off row m of the coin
// matrix (no twisting); the standard source for Monte Carlo proxies.
Walk1D direct_walk_1d(const CoinMatrix& coins, int m, int64_t steps);
PlanarWalk direct_planar_walk(uint64_t seed, int m, int64_t steps);

// Skorohod embedding of a coarse dyadic walk into a finer one, per
// coordinate: s(0)=0, s(k+1) = first index after s(k) where the fine path
// has moved exactly 2^(M-m) fine lattice units from fine[s(k)].
struct EmbeddingMap {
  int coarse_level = 0;
  int fine_level = 0;
  std::vector<int32_t> stop_x, stop_y;  // fine-step indices, per coordinate
  PlanarWalk embedded;                  // positions in coarse lattice units
};

struct EmbeddingMap1D {
  int coarse_level = 0;
  int fine_level = 0;
  std::vector<int32_t> stop;
  Walk1D embedded;
};

// Embeds level-m walks from a fine path. If `min_steps` > 0 and fewer exits
// exist, throws PathTooShort reporting how many were found. m == fine level
// yields the identity embedding s(k) = k.
EmbeddingMap1D skorohod_embed(const Walk1D& fine, int m, int64_t min_steps = 0);
EmbeddingMap skorohod_embed(const PlanarWalk& fine, int m, int64_t min_steps = 0);

// Pairs two one-dimensional walks of equal level and length into a planar
// walk. Throws LevelMismatch / LengthMismatch.
PlanarWalk pair_planar(const Walk1D& wx, const Walk1D& wy);

// Debug/test dump: text records `level, k, x_lattice, y_lattice`.
void write_walk_csv(const PlanarWalk& walk, const std::string& path);

// Supremum over [0, horizon] of the Euclidean distance between the linear
// interpolations of two planar walks, evaluated on the finer walk's step
// times (exact for piecewise-linear paths since |a-b|^2 is convex on every
// mesh interval). Throws HorizonExceeded if either walk ends before
// `horizon`.
double sup_distance(const PlanarWalk& a, const PlanarWalk& b, double horizon);

}  // namespace siltlab
