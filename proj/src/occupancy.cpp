#include "siltlab/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "siltlab/errors.hpp"

namespace siltlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Spatial hash of occupied lattice points with multiplicities, bucketed for
// disc-restricted scans. Counts stay attached to the bucket entries so a
// query walks contiguous memory.
class BucketGrid {
 public:
  struct Entry {
    int32_t x, y;
    int32_t cnt;
  };

  explicit BucketGrid(int log2b) : log2b_(log2b) {}

  void insert(int32_t x, int32_t y) {
    int32_t& slot = idx_[pack_point(x, y)];
    if (slot == 0) {
      std::vector<Entry>& v = bucket(bucket_key(x, y));
      v.push_back({x, y, 1});
      slot = int32_t(v.size());
    } else {
      bucket(bucket_key(x, y))[size_t(slot - 1)].cnt++;
    }
  }

  // Visits entries p with |(anchor - p) - off| inside radius r. The test is
  // evaluated as (integer displacement) minus (double centre) so that it is
  // bitwise identical to a displacement-keyed field scan; boundary ties then
  // resolve the same way on both routes.
  template <class F>
  void visit_disc(int32_t ax, int32_t ay, double offx, double offy, double r, bool strict,
                  F&& f) const {
    double r2 = r * r;
    double cx = double(ax) - offx, cy = double(ay) - offy;
    int32_t lox = int32_t(std::floor(cx - r)), hix = int32_t(std::floor(cx + r));
    int32_t loy = int32_t(std::floor(cy - r)), hiy = int32_t(std::floor(cy + r));
    int32_t bx0 = lox >> log2b_, bx1 = hix >> log2b_;
    int32_t by0 = loy >> log2b_, by1 = hiy >> log2b_;
    for (int32_t bx = bx0; bx <= bx1; ++bx) {
      for (int32_t by = by0; by <= by1; ++by) {
        const int32_t* bi = bidx_.find(pack_point(bx, by));
        if (!bi) continue;
        for (const Entry& e : pool_[size_t(*bi - 1)]) {
          double dx = double(ax - e.x) - offx, dy = double(ay - e.y) - offy;
          double d2 = dx * dx + dy * dy;
          if (strict ? d2 < r2 : d2 <= r2) f(e);
        }
      }
    }
  }

 private:
  uint64_t bucket_key(int32_t x, int32_t y) const { return pack_point(x >> log2b_, y >> log2b_); }

  std::vector<Entry>& bucket(uint64_t key) {
    int32_t& slot = bidx_[key];
    if (slot == 0) {
      pool_.emplace_back();
      slot = int32_t(pool_.size());
    }
    return pool_[size_t(slot - 1)];
  }

  int log2b_;
  FlatMap<int32_t> idx_;
  FlatMap<int32_t> bidx_;
  std::vector<std::vector<Entry>> pool_;
};

int bucket_log2_for_radius(double r) {
  int b = 3;
  while ((double(1 << b)) < r / 2.0 && b < 10) ++b;
  return b;
}

void check_horizon(const PlanarWalk& w, int64_t n) {
  if (n < 0 || n > w.steps())
    fail(Err::horizon_exceeded,
         "horizon " + std::to_string(n) + " beyond walk length " + std::to_string(w.steps()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Local times
// ---------------------------------------------------------------------------

int64_t LocalTimeTable::max_count() const {
  int64_t m = 0;
  counts.for_each([&](uint64_t, const int64_t& v) { m = std::max(m, v); });
  return m;
}

LocalTimeTable local_time(const PlanarWalk& walk, int64_t k) {
  check_horizon(walk, k);
  LocalTimeTable t;
  t.level = walk.level;
  t.horizon = k;
  for (int64_t j = 0; j < k; ++j) {
    uint64_t key = pack_point(walk.x[size_t(j)], walk.y[size_t(j)]);
    t.counts[key] += 1;
    int mu = mu_index(walk.x[size_t(j + 1)] - walk.x[size_t(j)],
                      walk.y[size_t(j + 1)] - walk.y[size_t(j)]);
    t.partials[key][size_t(mu)] += 1;
  }
  return t;
}

FlatMap<int64_t> local_time_1d(const Walk1D& walk, int64_t k) {
  if (k < 0 || k > walk.steps()) fail(Err::horizon_exceeded, "1-d local time horizon");
  FlatMap<int64_t> counts;
  for (int64_t j = 0; j < k; ++j) counts[pack_point(walk.pos[size_t(j)], 0)] += 1;
  return counts;
}

// ---------------------------------------------------------------------------
// Self-intersection local time
// ---------------------------------------------------------------------------

int64_t SiltField::total_mass() const {
  int64_t m = 0;
  counts.for_each([&](uint64_t, const SiltValue& v) { m += v.total; });
  return m;
}

SiltField silt(const PlanarWalk& walk, int64_t n) {
  check_horizon(walk, n);
  SiltField f;
  f.level = walk.level;
  f.horizon = n;

  struct Occ {
    int32_t x, y;
    int32_t cnt;
  };
  std::vector<Occ> occ;
  FlatMap<int32_t> occ_idx;
  occ.reserve(size_t(std::min<int64_t>(n, 1 << 20)));

  for (int64_t j = 0; j < n; ++j) {
    int32_t sx = walk.x[size_t(j)], sy = walk.y[size_t(j)];
    int32_t& slot = occ_idx[pack_point(sx, sy)];
    if (slot == 0) {
      occ.push_back({sx, sy, 1});
      slot = int32_t(occ.size());
    } else {
      occ[size_t(slot - 1)].cnt++;
    }
    int mu = mu_index(walk.x[size_t(j + 1)] - sx, walk.y[size_t(j + 1)] - sy);
    for (const Occ& o : occ) {
      SiltValue& v = f.counts[pack_point(sx - o.x, sy - o.y)];
      v.total += o.cnt;
      v.mu[size_t(mu)] += o.cnt;
    }
  }
  return f;
}

SiltField silt_naive(const PlanarWalk& walk, int64_t n) {
  check_horizon(walk, n);
  SiltField f;
  f.level = walk.level;
  f.horizon = n;
  for (int64_t j = 0; j < n; ++j) {
    int mu = mu_index(walk.x[size_t(j + 1)] - walk.x[size_t(j)],
                      walk.y[size_t(j + 1)] - walk.y[size_t(j)]);
    for (int64_t i = 0; i <= j; ++i) {
      SiltValue& v = f.counts[pack_point(walk.x[size_t(j)] - walk.x[size_t(i)],
                                         walk.y[size_t(j)] - walk.y[size_t(i)])];
      v.total += 1;
      v.mu[size_t(mu)] += 1;
    }
  }
  return f;
}

SiltField silt_local(const PlanarWalk& walk, int64_t n, Vec2 y, double radius) {
  check_horizon(walk, n);
  SiltField f;
  f.level = walk.level;
  f.horizon = n;
  f.partial = true;
  f.support_center = y;
  f.support_radius = radius;

  double scale = std::ldexp(1.0, walk.level);
  double ccx = y.x * scale, ccy = y.y * scale, r = radius * scale;
  BucketGrid grid(bucket_log2_for_radius(r));
  for (int64_t j = 0; j < n; ++j) {
    int32_t sx = walk.x[size_t(j)], sy = walk.y[size_t(j)];
    grid.insert(sx, sy);
    int mu = mu_index(walk.x[size_t(j + 1)] - sx, walk.y[size_t(j + 1)] - sy);
    grid.visit_disc(sx, sy, ccx, ccy, r, /*strict=*/false,
                    [&](const BucketGrid::Entry& e) {
                      SiltValue& v = f.counts[pack_point(sx - e.x, sy - e.y)];
                      v.total += e.cnt;
                      v.mu[size_t(mu)] += e.cnt;
                    });
  }
  return f;
}

SiltSup silt_sup(const PlanarWalk& walk, int64_t n) {
  check_horizon(walk, n);
  SiltSup out;
  struct Occ {
    int32_t x, y;
    int32_t cnt;
  };
  std::vector<Occ> occ;
  FlatMap<int32_t> occ_idx;
  FlatMap<int32_t> totals;
  for (int64_t j = 0; j < n; ++j) {
    int32_t sx = walk.x[size_t(j)], sy = walk.y[size_t(j)];
    int32_t& slot = occ_idx[pack_point(sx, sy)];
    if (slot == 0) {
      occ.push_back({sx, sy, 1});
      slot = int32_t(occ.size());
    } else {
      occ[size_t(slot - 1)].cnt++;
    }
    for (const Occ& o : occ) {
      int32_t& c = totals[pack_point(sx - o.x, sy - o.y)];
      c += o.cnt;
      if (c > out.sup_total) out.sup_total = c;
    }
    out.mass += j + 1;
  }
  return out;
}

ErdosTaylorStats erdos_taylor_ratio(const PlanarWalk& walk, int64_t n) {
  if (n < 2) fail(Err::horizon_exceeded, "erdos_taylor_ratio needs n >= 2");
  check_horizon(walk, n);
  ErdosTaylorStats s;
  SiltSup sup = silt_sup(walk, n);
  s.sup_alpha = sup.sup_total;
  FlatMap<int32_t> visits;
  int32_t mv = 0;
  for (int64_t j = 0; j < n; ++j) {
    int32_t& c = visits[pack_point(walk.x[size_t(j)], walk.y[size_t(j)])];
    c += 1;
    mv = std::max(mv, c);
  }
  s.max_visits = mv;
  double ln = std::log(double(n));
  s.ratio = double(s.sup_alpha) / (double(n) * ln * ln);
  return s;
}

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

namespace {

// Locally built fields only know displacements near their support disc; any
// query must fit inside, including its own extent.
void check_support(const SiltField& f, Vec2 x, double extent) {
  if (!f.partial) return;
  if ((x - f.support_center).norm() + extent > f.support_radius + 1e-12)
    fail(Err::out_of_window, "query outside the partial support of a locally built field");
}

}  // namespace

double InterpolatedField::value_at(Vec2 x) const {
  const SiltField& f = *field;
  check_support(f, x, 1.5 * f.h());
  double h = f.h();
  double ux = x.x / h, uy = x.y / h;
  double fx = std::floor(ux), fy = std::floor(uy);
  int32_t cx = int32_t(fx), cy = int32_t(fy);
  double p = ux - fx, q = uy - fy;
  double h2 = h * h;
  if (p + q <= 1.0) {
    double A = double(f.total_at({cx, cy})) * h2;
    double B = double(f.total_at({cx + 1, cy})) * h2;
    double C = double(f.total_at({cx, cy + 1})) * h2;
    return A + p * (B - A) + q * (C - A);
  }
  double B = double(f.total_at({cx + 1, cy})) * h2;
  double C = double(f.total_at({cx, cy + 1})) * h2;
  double D = double(f.total_at({cx + 1, cy + 1})) * h2;
  return D + (1.0 - p) * (C - D) + (1.0 - q) * (B - D);
}

double InterpolatedField::triangle_integral(GridPoint cell, bool upper) const {
  const SiltField& f = *field;
  double h = f.h();
  double h2 = h * h;
  double A, B, C;
  if (!upper) {
    A = double(f.total_at(cell)) * h2;
    B = double(f.total_at({cell.x + 1, cell.y})) * h2;
    C = double(f.total_at({cell.x, cell.y + 1})) * h2;
  } else {
    A = double(f.total_at({cell.x + 1, cell.y})) * h2;
    B = double(f.total_at({cell.x, cell.y + 1})) * h2;
    C = double(f.total_at({cell.x + 1, cell.y + 1})) * h2;
  }
  return h2 / 6.0 * (A + B + C);
}

double silt_physical(const SiltField& field, double t, Vec2 x) {
  if (t < 0.0) fail(Err::horizon_exceeded, "negative time");
  double h = field.h();
  int64_t snapped = int64_t(std::floor(t / h + 1e-12)) << field.level;
  if (snapped != field.horizon)
    fail(Err::config_invalid,
         "field was built at horizon " + std::to_string(field.horizon) +
             " but t snaps to " + std::to_string(snapped) + " steps");
  InterpolatedField view{&field};
  return view.value_at(x);
}

double silt_disc_sum(const SiltField& field, Vec2 y, double delta) {
  if (!(delta > 0.0)) fail(Err::nonpositive_delta, "disc radius must be positive");
  check_support(field, y, delta);
  double h = field.h();
  double w = field.h() * field.h() * field.h() * field.h();  // alpha * h^2 per count
  double r2 = (delta / h) * (delta / h);
  double cx = y.x / h, cy = y.y / h;

  int64_t lox = int64_t(std::floor(cx - delta / h)), hix = int64_t(std::ceil(cx + delta / h));
  int64_t loy = int64_t(std::floor(cy - delta / h)), hiy = int64_t(std::ceil(cy + delta / h));
  uint64_t box = uint64_t(std::max<int64_t>(0, hix - lox + 1)) *
                 uint64_t(std::max<int64_t>(0, hiy - loy + 1));

  int64_t sum = 0;
  if (box <= 2 * field.counts.size() + 64) {
    for (int64_t ix = lox; ix <= hix; ++ix) {
      for (int64_t iy = loy; iy <= hiy; ++iy) {
        double dx = double(ix) - cx, dy = double(iy) - cy;
        if (dx * dx + dy * dy <= r2) sum += field.total_at({int32_t(ix), int32_t(iy)});
      }
    }
  } else {
    field.counts.for_each([&](uint64_t key, const SiltValue& v) {
      GridPoint p = unpack_point(key);
      double dx = double(p.x) - cx, dy = double(p.y) - cy;
      if (dx * dx + dy * dy <= r2) sum += v.total;
    });
  }
  return double(sum) * w;
}

// ---------------------------------------------------------------------------
// Exact affine integration over triangle ∩ disc
// ---------------------------------------------------------------------------

namespace {

struct Affine {
  double a0, ax, ay;
  double at(Vec2 p) const { return a0 + ax * p.x + ay * p.y; }
};

// Green's theorem with F(x,y) = a0 x + ax x^2/2 + ay x y, so that
// dF/dx = a0 + ax x + ay y and the area integral becomes the ccw boundary
// integral of F dy.
double seg_term(Vec2 P, Vec2 Q, const Affine& L) {
  double dy = Q.y - P.y;
  if (dy == 0.0) return 0.0;
  const double g = 0.5 / std::sqrt(3.0);
  double I = 0.0;
  for (double tg : {0.5 - g, 0.5 + g}) {
    double x = P.x + tg * (Q.x - P.x);
    double y = P.y + tg * (Q.y - P.y);
    I += 0.5 * (L.a0 * x + 0.5 * L.ax * x * x + L.ay * x * y);
  }
  return I * dy;
}

double arc_antideriv(double th, double K1, double K2, double K3, double K4, double K5) {
  double S = std::sin(th), C = std::cos(th);
  return K1 * S + K2 * (0.5 * th + 0.5 * S * C) + K3 * 0.5 * S * S +
         K4 * (S - S * S * S / 3.0) + K5 * (-C * C * C / 3.0);
}

double arc_term(Vec2 c, double r, double th1, double th2, const Affine& L) {
  double K1 = r * (L.a0 * c.x + 0.5 * L.ax * c.x * c.x + L.ay * c.x * c.y);
  double K2 = r * r * (L.a0 + L.ax * c.x + L.ay * c.y);
  double K3 = r * r * L.ay * c.x;
  double K4 = 0.5 * L.ax * r * r * r;
  double K5 = L.ay * r * r * r;
  return arc_antideriv(th2, K1, K2, K3, K4, K5) - arc_antideriv(th1, K1, K2, K3, K4, K5);
}

bool point_in_triangle(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
  auto side = [](Vec2 u, Vec2 v, Vec2 q) {
    return (v.x - u.x) * (q.y - u.y) - (v.y - u.y) * (q.x - u.x);
  };
  double s1 = side(a, b, p), s2 = side(b, c, p), s3 = side(c, a, p);
  return s1 >= 0 && s2 >= 0 && s3 >= 0;  // triangle given ccw
}

}  // namespace

double integrate_linear_on_triangle_disc(Vec2 v0, Vec2 v1, Vec2 v2, Vec2 center, double radius,
                                         double a0, double ax, double ay) {
  double cross = (v1.x - v0.x) * (v2.y - v0.y) - (v1.y - v0.y) * (v2.x - v0.x);
  if (cross < 0) {
    std::swap(v1, v2);
    cross = -cross;
  }
  Affine L{a0, ax, ay};
  double r2 = radius * radius;
  auto inside = [&](Vec2 p) { return (p - center).norm2() <= r2; };

  if (inside(v0) && inside(v1) && inside(v2)) {
    Vec2 centroid = (v0 + v1 + v2) * (1.0 / 3.0);
    return 0.5 * cross * L.at(centroid);
  }

  struct Piece {
    Vec2 P, Q;
  };
  std::vector<Piece> pieces;
  Vec2 V[3] = {v0, v1, v2};
  const double eps_t = 1e-13;
  for (int e = 0; e < 3; ++e) {
    Vec2 A = V[e], B = V[(e + 1) % 3];
    Vec2 d = B - A;
    double qa = d.dot(d);
    double qb = 2.0 * d.dot(A - center);
    double qc = (A - center).norm2() - r2;
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0 || qa == 0.0) continue;
    double sq = std::sqrt(disc);
    double t0 = (-qb - sq) / (2.0 * qa);
    double t1 = (-qb + sq) / (2.0 * qa);
    double lo = std::max(0.0, t0), hi = std::min(1.0, t1);
    if (hi - lo <= eps_t) continue;
    pieces.push_back({A + d * lo, A + d * hi});
  }

  if (pieces.empty()) {
    if (point_in_triangle(center, v0, v1, v2)) return kPi * r2 * L.at(center);
    return 0.0;
  }

  double I = 0.0;
  for (const Piece& p : pieces) I += seg_term(p.P, p.Q, L);
  const double eps_gap2 = 1e-22;
  for (size_t i = 0; i < pieces.size(); ++i) {
    Vec2 qe = pieces[i].Q;
    Vec2 ps = pieces[(i + 1) % pieces.size()].P;
    if ((qe - ps).norm2() <= eps_gap2) continue;
    double th1 = std::atan2(qe.y - center.y, qe.x - center.x);
    double th2 = std::atan2(ps.y - center.y, ps.x - center.x);
    while (th2 < th1 - 1e-14) th2 += 2.0 * kPi;
    I += arc_term(center, radius, th1, th2, L);
  }
  return I;
}

double silt_disc_integral(const InterpolatedField& view, Vec2 y, double delta) {
  const SiltField& f = *view.field;
  if (!(delta > 0.0)) fail(Err::nonpositive_delta, "disc radius must be positive");
  check_support(f, y, delta + 2.0 * f.h());
  double h = f.h();
  double h2 = h * h;
  double cx = y.x / h, cy = y.y / h;
  double rl = delta / h;

  int64_t lox = int64_t(std::floor(cx - rl)) - 1, hix = int64_t(std::ceil(cx + rl));
  int64_t loy = int64_t(std::floor(cy - rl)) - 1, hiy = int64_t(std::ceil(cy + rl));
  uint64_t box = uint64_t(std::max<int64_t>(0, hix - lox + 1)) *
                 uint64_t(std::max<int64_t>(0, hiy - loy + 1));

  // Candidate cells: a bounding box of the disc, or the support of the field
  // when the disc is much larger than it.
  std::vector<GridPoint> cells;
  if (box <= 4 * f.counts.size() + 256) {
    cells.reserve(size_t(box));
    for (int64_t ix = lox; ix <= hix; ++ix)
      for (int64_t iy = loy; iy <= hiy; ++iy) cells.push_back({int32_t(ix), int32_t(iy)});
  } else {
    FlatMap<int32_t> seen;
    f.counts.for_each([&](uint64_t key, const SiltValue& v) {
      if (v.total == 0) return;
      GridPoint p = unpack_point(key);
      for (int dx = -1; dx <= 0; ++dx)
        for (int dy = -1; dy <= 0; ++dy) {
          int32_t qx = p.x + dx, qy = p.y + dy;
          int32_t& mark = seen[pack_point(qx, qy)];
          if (mark == 0) {
            mark = 1;
            cells.push_back({qx, qy});
          }
        }
    });
  }

  Vec2 c{cx, cy};
  double total = 0.0;
  for (GridPoint cell : cells) {
    double A = double(f.total_at(cell));
    double B = double(f.total_at({cell.x + 1, cell.y}));
    double C = double(f.total_at({cell.x, cell.y + 1}));
    double D = double(f.total_at({cell.x + 1, cell.y + 1}));
    if (A == 0 && B == 0 && C == 0 && D == 0) continue;
    double x0 = double(cell.x), y0 = double(cell.y);
    Vec2 sw{x0, y0}, se{x0 + 1, y0}, nw{x0, y0 + 1}, ne{x0 + 1, y0 + 1};

    // Lower triangle {sw, se, nw}: plane through (A, B, C).
    if (A != 0 || B != 0 || C != 0) {
      double axc = B - A, ayc = C - A;
      double a0 = A - axc * x0 - ayc * y0;
      total += integrate_linear_on_triangle_disc(sw, se, nw, c, rl, a0, axc, ayc);
    }
    // Upper triangle {se, ne, nw}: plane through (B, D, C).
    if (B != 0 || C != 0 || D != 0) {
      double axc = D - C, ayc = D - B;
      double a0 = D - axc * (x0 + 1) - ayc * (y0 + 1);
      total += integrate_linear_on_triangle_disc(se, ne, nw, c, rl, a0, axc, ayc);
    }
  }
  // Counts were used as plane values; restore physical alpha (h^2 per count)
  // and the lattice-to-physical area element (h^2).
  return total * h2 * h2;
}

// ---------------------------------------------------------------------------
// Disc pair counting
// ---------------------------------------------------------------------------

void disc_pair_counts(const PlanarWalk& walk, int64_t n, std::span<DiscQuery> queries) {
  check_horizon(walk, n);
  double rmax = 1.0;
  for (const DiscQuery& q : queries) rmax = std::max(rmax, q.radius);
  BucketGrid grid(bucket_log2_for_radius(rmax));
  for (DiscQuery& q : queries) q.pairs = 0;
  for (int64_t j = 0; j < n; ++j) {
    int32_t sx = walk.x[size_t(j)], sy = walk.y[size_t(j)];
    grid.insert(sx, sy);
    for (DiscQuery& q : queries) {
      int64_t sum = 0;
      grid.visit_disc(sx, sy, q.cx, q.cy, q.radius, q.strict,
                      [&](const BucketGrid::Entry& e) { sum += e.cnt; });
      q.pairs += sum;
    }
  }
}

// ---------------------------------------------------------------------------
// Occupation identity
// ---------------------------------------------------------------------------

OccupationCheck occupation_check(const PlanarWalk& walk, double t,
                                 const std::function<double(GridPoint)>& f_lattice,
                                 const std::function<double(Vec2)>* f_continuous) {
  double h = walk.space_unit();
  int64_t n = int64_t(std::llround(t / (h * h)));
  check_horizon(walk, n);

  // Left side: independent double-loop tally of displacements.
  FlatMap<int64_t> tally;
  for (int64_t i = 0; i < n; ++i) {
    int32_t ax = walk.x[size_t(i)], ay = walk.y[size_t(i)];
    for (int64_t j = i; j < n; ++j)
      tally[pack_point(walk.x[size_t(j)] - ax, walk.y[size_t(j)] - ay)] += 1;
  }

  SiltField field = silt(walk, n);

  OccupationCheck out;
  out.tables_equal = (tally.size() == field.counts.size());
  if (out.tables_equal) {
    tally.for_each([&](uint64_t key, const int64_t& v) {
      const SiltValue* sv = field.counts.find(key);
      if (!sv || int64_t(sv->total) != v) out.tables_equal = false;
    });
  }

  // Contract both tables against f in one shared key order so that equal
  // integer tables give bitwise-equal sums.
  std::vector<uint64_t> keys;
  keys.reserve(tally.size());
  tally.for_each([&](uint64_t key, const int64_t&) { keys.push_back(key); });
  std::sort(keys.begin(), keys.end());
  double w = h * h * h * h;
  double lhs = 0.0, rhs = 0.0;
  for (uint64_t key : keys) {
    GridPoint p = unpack_point(key);
    double fv = f_lattice(p);
    lhs += double(*tally.find(key)) * fv;
    rhs += double(field.total_at(p)) * fv;
  }
  out.lhs = lhs * w;
  out.rhs_lattice = rhs * w;

  if (f_continuous) {
    // Integral form: 3-point edge-midpoint rule per support triangle, exact
    // for the linear interpolant times an affine factor.
    InterpolatedField view{&field};
    FlatMap<int32_t> seen;
    double acc = 0.0;
    double h2 = h * h;
    field.counts.for_each([&](uint64_t key, const SiltValue& v) {
      if (v.total == 0) return;
      GridPoint p = unpack_point(key);
      for (int dx = -1; dx <= 0; ++dx)
        for (int dy = -1; dy <= 0; ++dy) {
          int32_t qx = p.x + dx, qy = p.y + dy;
          int32_t& mark = seen[pack_point(qx, qy)];
          if (mark != 0) continue;
          mark = 1;
          for (int up = 0; up < 2; ++up) {
            Vec2 a, b, c;
            if (!up) {
              a = {double(qx) * h, double(qy) * h};
              b = {double(qx + 1) * h, double(qy) * h};
              c = {double(qx) * h, double(qy + 1) * h};
            } else {
              a = {double(qx + 1) * h, double(qy) * h};
              b = {double(qx) * h, double(qy + 1) * h};
              c = {double(qx + 1) * h, double(qy + 1) * h};
            }
            Vec2 m1 = (a + b) * 0.5, m2 = (b + c) * 0.5, m3 = (c + a) * 0.5;
            double area = 0.5 * h2;
            acc += area / 3.0 *
                   (view.value_at(m1) * (*f_continuous)(m1) +
                    view.value_at(m2) * (*f_continuous)(m2) +
                    view.value_at(m3) * (*f_continuous)(m3));
          }
        }
    });
    out.rhs_integral = acc;
  }
  return out;
}

void write_silt_csv(const SiltField& field, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Err::io_error, "cannot open " + path);
  os << "m,n,x1_lattice,x2_lattice,count,count_mu_pp,count_mu_pm,count_mu_mp,count_mu_mm\n";
  std::vector<uint64_t> keys;
  keys.reserve(field.counts.size());
  field.counts.for_each([&](uint64_t key, const SiltValue&) { keys.push_back(key); });
  std::sort(keys.begin(), keys.end());
  for (uint64_t key : keys) {
    GridPoint p = unpack_point(key);
    const SiltValue* v = field.counts.find(key);
    os << field.level << ',' << field.horizon << ',' << p.x << ',' << p.y << ',' << v->total
       << ',' << v->mu[0] << ',' << v->mu[1] << ',' << v->mu[2] << ',' << v->mu[3] << '\n';
  }
}

}  // namespace siltlab
