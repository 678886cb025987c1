#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siltlab/flat_map.hpp"
#include "siltlab/geometry.hpp"
#include "siltlab/walks.hpp"

namespace siltlab {

// ---------------------------------------------------------------------------
// Local times
// ---------------------------------------------------------------------------

// Visit counts of a planar walk up to (excluding) horizon k; time 0 counts,
// time k does not. Partials classify each visit by the exit step direction.
struct LocalTimeTable {
  int level = 0;
  int64_t horizon = 0;
  FlatMap<int64_t> counts;                     // point -> #visits
  FlatMap<std::array<int64_t, 4>> partials;    // point -> per-mu exit counts

  int64_t count_at(GridPoint p) const {
    const int64_t* v = counts.find(pack_point(p.x, p.y));
    return v ? *v : 0;
  }
  int64_t partial_at(GridPoint p, int mu) const {
    const auto* v = partials.find(pack_point(p.x, p.y));
    return v ? (*v)[size_t(mu)] : 0;
  }
  // Physical local time 2^-m * count at lattice point p.
  double physical_at(GridPoint p) const {
    return double(count_at(p)) * std::ldexp(1.0, -level);
  }
  int64_t max_count() const;
};

LocalTimeTable local_time(const PlanarWalk& walk, int64_t k);

// One-dimensional variant; returns point -> visit count.
FlatMap<int64_t> local_time_1d(const Walk1D& walk, int64_t k);

// ---------------------------------------------------------------------------
// Self-intersection local time
// ---------------------------------------------------------------------------

// Pair counts of a planar walk: total(x) = #{(i,j): 0 <= i <= j < n,
// S_j - S_i = x}, partials split by the exit step S_{j+1} - S_j. Horizon n in
// steps, level m fixes the physical scale h = 2^-m, t = n h^2, and the
// physical field alpha(t, x) = h^2 * total(x / h).
struct SiltValue {
  int32_t total = 0;
  std::array<int32_t, 4> mu{};
};

struct SiltField {
  int level = 0;
  int64_t horizon = 0;
  FlatMap<SiltValue> counts;
  // When built only around a disc, queries outside this region are invalid.
  bool partial = false;
  Vec2 support_center{};
  double support_radius = 0.0;

  double h() const { return std::ldexp(1.0, -level); }
  double t() const { return double(horizon) * std::ldexp(1.0, -2 * level); }

  int64_t total_at(GridPoint p) const {
    const SiltValue* v = counts.find(pack_point(p.x, p.y));
    return v ? v->total : 0;
  }
  int64_t mu_at(GridPoint p, int mu) const {
    const SiltValue* v = counts.find(pack_point(p.x, p.y));
    return v ? v->mu[size_t(mu)] : 0;
  }
  // alpha_h(t, x) at the lattice point p (physical value h^2 * count).
  double alpha_at(GridPoint p) const { return double(total_at(p)) * h() * h(); }

  int64_t total_mass() const;
};

// Incremental build: one pass over the walk, updating the displacement table
// against the occupancy of past positions; O(n * distinct visited points).
SiltField silt(const PlanarWalk& walk, int64_t n);

// Brute-force O(n^2) reference kept as the oracle for the incremental build.
SiltField silt_naive(const PlanarWalk& walk, int64_t n);

// Displacement counts restricted to |x - y| <= radius (physical units), built
// by disc-restricted occupancy queries; the cheap route when only a
// neighbourhood of y matters. Fields agree exactly with silt() inside.
SiltField silt_local(const PlanarWalk& walk, int64_t n, Vec2 y, double radius);

// Lean variant for monitoring: supremum of total(x) plus the total mass.
struct SiltSup {
  int64_t sup_total = 0;
  int64_t mass = 0;
};
SiltSup silt_sup(const PlanarWalk& walk, int64_t n);

// sup_x alpha_1(n, x) / (n ln^2 n) plus the raw maxima behind it.
struct ErdosTaylorStats {
  double ratio = 0.0;
  int64_t sup_alpha = 0;   // sup_x of the raw pair count
  int64_t max_visits = 0;  // l*(n): maximum visit count of a single site
};
ErdosTaylorStats erdos_taylor_ratio(const PlanarWalk& walk, int64_t n);

// ---------------------------------------------------------------------------
// Interpolation and disc functionals
// ---------------------------------------------------------------------------

// Piecewise-linear extension of the physical field over grid triangles. Each
// cell [a, a+h]^2 splits into the lower triangle {a, a+h e1, a+h e2} and the
// upper triangle {a+h e1, a+h e2, a+h(e1+e2)}; boundary points use the lower
// triangle. The integral over one triangle is h^2/6 (A+B+C).
struct InterpolatedField {
  const SiltField* field = nullptr;

  double value_at(Vec2 x) const;
  // Integral of the interpolant over the lower/upper triangle of the cell
  // with SW lattice corner `cell`.
  double triangle_integral(GridPoint cell, bool upper) const;
};

// alpha_h(t, x) at real (t, x): t snapped down to a multiple of h, x
// triangle-interpolated; 0 outside the support. The field must have been
// built at the snapped horizon.
double silt_physical(const SiltField& field, double t, Vec2 x);

// Sum of alpha_m(t,x) * 2^-2m over lattice points of the closed disc
// |x - y| <= delta (physical units).
double silt_disc_sum(const SiltField& field, Vec2 y, double delta);

// Integral of the interpolated field over the closed disc B_delta(y),
// exact per triangle (piecewise-linear integrand clipped against the circle).
double silt_disc_integral(const InterpolatedField& field, Vec2 y, double delta);

// Exact integral of an affine function a0 + ax*x + ay*y over triangle ∩ disc.
// Exposed for tests; the triangle is taken counterclockwise.
double integrate_linear_on_triangle_disc(Vec2 v0, Vec2 v1, Vec2 v2, Vec2 center, double radius,
                                         double a0, double ax, double ay);

// ---------------------------------------------------------------------------
// Disc pair counting (no field materialisation)
// ---------------------------------------------------------------------------

// Counts pairs 0 <= i <= j < n with S_j - S_i inside a disc, centers and
// radii in lattice units. `strict` selects |.| < r over |.| <= r. All queries
// are answered in one pass over the walk.
struct DiscQuery {
  double cx = 0.0, cy = 0.0;
  double radius = 0.0;
  bool strict = false;
  int64_t pairs = 0;
};

void disc_pair_counts(const PlanarWalk& walk, int64_t n, std::span<DiscQuery> queries);

// ---------------------------------------------------------------------------
// Occupation identity
// ---------------------------------------------------------------------------

// Discrete occupation identity: h^4 sum_{0<=i<=j<n} f(S_j - S_i) versus
// sum_x alpha(t,x) f(x) h^2. lhs is tallied by an independent O(n^2) double
// loop; tables_equal reports whether the two integer count tables agree
// key-for-key (which makes both contractions bitwise identical).
struct OccupationCheck {
  double lhs = 0.0;
  double rhs_lattice = 0.0;
  double rhs_integral = 0.0;
  bool tables_equal = false;
};

OccupationCheck occupation_check(const PlanarWalk& walk, double t,
                                 const std::function<double(GridPoint)>& f_lattice,
                                 const std::function<double(Vec2)>* f_continuous = nullptr);

// CSV export: m, n, x1_lattice, x2_lattice, count, count_mu_pp, count_mu_pm,
// count_mu_mp, count_mu_mm (rows sorted by coordinates).
void write_silt_csv(const SiltField& field, const std::string& path);

}  // namespace siltlab
