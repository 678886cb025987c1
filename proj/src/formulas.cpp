#include "siltlab/formulas.hpp"

#include <algorithm>
#include <cmath>

namespace siltlab {

namespace {

struct WalkBox {
  int32_t lox, hix, loy, hiy;
};

WalkBox bounding_box(const PlanarWalk& w, int64_t n) {
  WalkBox b{0, 0, 0, 0};
  for (int64_t i = 0; i <= n; ++i) {
    b.lox = std::min(b.lox, w.x[size_t(i)]);
    b.hix = std::max(b.hix, w.x[size_t(i)]);
    b.loy = std::min(b.loy, w.y[size_t(i)]);
    b.hiy = std::max(b.hiy, w.y[size_t(i)]);
  }
  return b;
}

void require_window(const GridWindow& win, const WalkBox& b) {
  int32_t need = std::max(std::max(-b.lox, b.hix), std::max(-b.loy, b.hiy));
  if (need > win.half)
    fail(Err::out_of_window, "walk range " + std::to_string(need) +
                                 " exceeds field window half-width " + std::to_string(win.half));
}

// Discrete curl of the family at slice r, rectangle SW corner (i, j).
double family_curl(const TimeFieldFamily& f, int64_t r, int32_t i, int32_t j) {
  Vec2 sw = f.at(r, {i, j}), se = f.at(r, {int32_t(i + 1), j});
  Vec2 ne = f.at(r, {int32_t(i + 1), int32_t(j + 1)}), nw = f.at(r, {i, int32_t(j + 1)});
  return (sw.x + se.x + se.y + ne.y - ne.x - nw.x - nw.y - sw.y) / (2.0 * f.win.h);
}

void conservativity_precheck(const TimeFieldFamily& f, const WalkBox& b, int64_t n,
                             ConservativityCheck mode) {
  if (mode == ConservativityCheck::none) return;
  double maxabs = 0.0, maxcurl = 0.0;
  auto probe = [&](int64_t r, int32_t i, int32_t j) {
    Vec2 v = f.at(r, {i, j});
    maxabs = std::max(maxabs, std::max(std::abs(v.x), std::abs(v.y)));
    maxcurl = std::max(maxcurl, std::abs(family_curl(f, r, i, j)));
  };
  int64_t slice_stride = f.time_dependent ? std::max<int64_t>(1, n / 8) : n + 1;
  if (mode == ConservativityCheck::full) {
    for (int64_t r = 0; r <= n; r += f.time_dependent ? 1 : n + 1)
      for (int32_t i = b.lox; i < b.hix; ++i)
        for (int32_t j = b.loy; j < b.hiy; ++j) probe(r, i, j);
  } else {
    uint64_t state = 0x6a0f3e1d2c4b5977ULL;
    for (int64_t r = 0; r <= n; r += slice_stride) {
      for (int k = 0; k < 32; ++k) {
        state = splitmix64(state);
        int32_t spanx = std::max(1, b.hix - b.lox);
        int32_t spany = std::max(1, b.hiy - b.loy);
        int32_t i = b.lox + int32_t(state % uint64_t(spanx));
        int32_t j = b.loy + int32_t((state >> 32) % uint64_t(spany));
        probe(r, i, j);
      }
    }
  }
  double tol = 1e-12 * std::max(1.0, maxabs) / f.win.h;
  if (maxcurl > tol)
    fail(Err::not_conservative, "sampled |curl| = " + std::to_string(maxcurl) +
                                    " exceeds tolerance " + std::to_string(tol));
}

// Trapezoidal sum along the axis-first staircase from `from` to `to` of the
// point evaluator field(p) -> Vec2, at mesh h.
template <class F>
double trap_l_path(GridPoint from, GridPoint to, double h, F&& field) {
  double sum = 0.0;
  int dx = to.x > from.x ? 1 : -1;
  for (int32_t i = from.x; i != to.x; i += dx)
    sum += double(dx) * (field(GridPoint{i, from.y}).x + field(GridPoint{int32_t(i + dx), from.y}).x);
  int dy = to.y > from.y ? 1 : -1;
  for (int32_t j = from.y; j != to.y; j += dy)
    sum += double(dy) * (field(GridPoint{to.x, j}).y + field(GridPoint{to.x, int32_t(j + dy)}).y);
  return 0.5 * h * sum;
}

}  // namespace

TimeFieldFamily constant_family(const GridVectorField& f) {
  TimeFieldFamily fam;
  fam.win = f.win;
  fam.time_dependent = false;
  const GridVectorField* ptr = &f;
  fam.at = [ptr](int64_t, GridPoint p) -> Vec2 {
    return {ptr->at(1, p.x, p.y), ptr->at(2, p.x, p.y)};
  };
  return fam;
}

ItoDecomposition discrete_ito(const TimeFieldFamily& field, const PlanarWalk& walk, int64_t n,
                              ItoVariant variant, ConservativityCheck check) {
  if (n < 0 || n > walk.steps()) fail(Err::horizon_exceeded, "discrete_ito horizon");
  WalkBox box = bounding_box(walk, n);
  require_window(field.win, box);
  conservativity_precheck(field, box, n, check);

  double h = field.win.h;
  double maxabs = 0.0;
  auto eval = [&](int64_t r, GridPoint p) {
    Vec2 v = field.at(r, p);
    maxabs = std::max(maxabs, std::max(std::abs(v.x), std::abs(v.y)));
    return v;
  };

  ItoDecomposition d;
  d.variant = variant;
  d.level = walk.level;
  d.horizon = n;

  d.lhs = trap_l_path({0, 0}, walk.at(n), h, [&](GridPoint p) { return eval(n, p); });

  if (field.time_dependent) {
    for (int64_t r = 1; r <= n; ++r) {
      d.time_term += trap_l_path({0, 0}, walk.at(r), h, [&](GridPoint p) {
        Vec2 a = eval(r, p), b = eval(r - 1, p);
        return Vec2{a.x - b.x, a.y - b.y};
      });
    }
  }

  for (int64_t r = 1; r <= n; ++r) {
    GridPoint prev = walk.at(r - 1), next = walk.at(r);
    GridPoint mid{next.x, prev.y};
    int x1 = next.x - prev.x, x2 = next.y - prev.y;
    double f1_before = eval(r - 1, prev).x;
    double f1_after = eval(r - 1, mid).x;
    double f2_before = eval(r - 1, mid).y;
    double f2_after = eval(r - 1, next).y;
    if (variant == ItoVariant::ito) {
      d.stochastic_sum += h * (f1_before * double(x1) + f2_before * double(x2));
      d.correction += 0.5 * h * (double(x1) * (f1_after - f1_before) + double(x2) * (f2_after - f2_before));
    } else {
      d.stochastic_sum += 0.5 * h * ((f1_before + f1_after) * double(x1) + (f2_before + f2_after) * double(x2));
    }
  }

  d.residual = d.lhs - d.time_term - d.stochastic_sum - d.correction;
  d.scale = std::max(maxabs * double(n) * h, 1e-30);
  return d;
}

ItoDecomposition discrete_ito(const GridVectorField& field, const PlanarWalk& walk, int64_t n,
                              ItoVariant variant, ConservativityCheck check) {
  return discrete_ito(constant_family(field), walk, n, variant, check);
}

ItoDecomposition discrete_ito_tanaka_meyer(const GridVectorField& field, const PlanarWalk& walk,
                                           int64_t n, ConservativityCheck check) {
  ItoDecomposition d = discrete_ito(constant_family(field), walk, n, ItoVariant::ito, check);
  // Regroup the half-h^2 term over lattice points and exit directions,
  // weighted by the partial local times.
  LocalTimeTable lt = local_time(walk, n);
  double h = field.win.h;
  double corr = 0.0;
  lt.partials.for_each([&](uint64_t key, const std::array<int64_t, 4>& muc) {
    GridPoint p = unpack_point(key);
    for (int mu = 0; mu < 4; ++mu) {
      int64_t cnt = muc[size_t(mu)];
      if (cnt == 0) continue;
      int sx = mu_sign_x(mu), sy = mu_sign_y(mu);
      double term = double(sx) * (field.at(1, p.x + sx, p.y) - field.at(1, p.x, p.y)) +
                    double(sy) * (field.at(2, p.x + sx, p.y + sy) - field.at(2, p.x + sx, p.y));
      corr += double(cnt) * term;
    }
  });
  d.correction = 0.5 * h * corr;
  d.residual = d.lhs - d.time_term - d.stochastic_sum - d.correction;
  return d;
}

double stochastic_sum(const TimeFieldFamily& field, const PlanarWalk& embedded, double t) {
  double tu = embedded.time_unit();
  int64_t n = int64_t(std::floor(t / tu + 1e-12));
  if (n < 0 || n > embedded.steps()) fail(Err::horizon_exceeded, "stochastic_sum horizon");
  WalkBox box = bounding_box(embedded, n);
  require_window(field.win, box);
  double h = embedded.space_unit();
  double sum = 0.0;
  for (int64_t r = 1; r <= n; ++r) {
    GridPoint prev = embedded.at(r - 1), next = embedded.at(r);
    GridPoint mid{next.x, prev.y};
    sum += h * (field.at(r - 1, prev).x * double(next.x - prev.x) +
                field.at(r - 1, mid).y * double(next.y - prev.y));
  }
  return sum;
}

double stochastic_sum(const GridVectorField& field, const PlanarWalk& embedded, double t) {
  return stochastic_sum(constant_family(field), embedded, t);
}

// ---------------------------------------------------------------------------
// Discrete Tanaka–Rosen–Yor
// ---------------------------------------------------------------------------

namespace {

// Occupancy of past walk positions with multiplicities, iterated linearly.
struct PastTable {
  struct Entry {
    int32_t x, y;
    int32_t cnt;
  };
  std::vector<Entry> entries;
  FlatMap<int32_t> idx;

  void insert(int32_t x, int32_t y) {
    int32_t& slot = idx[pack_point(x, y)];
    if (slot == 0) {
      entries.push_back({x, y, 1});
      slot = int32_t(entries.size());
    } else {
      entries[size_t(slot - 1)].cnt++;
    }
  }
};

}  // namespace

TryDecomposition discrete_try(const GridScalarSpec& phi, const PlanarWalk& walk, GridPoint y,
                              int64_t n, TryMode mode) {
  if (n < 0 || n > walk.steps()) fail(Err::horizon_exceeded, "discrete_try horizon");
  if (!phi.d1 || !phi.d2) fail(Err::config_invalid, "discrete_try needs d1/d2 evaluators");
  if (mode == TryMode::direct && (!phi.d11 || !phi.d22))
    fail(Err::config_invalid, "direct mode needs d11/d22 for the Laplacian term");

  double h = walk.space_unit();
  TryDecomposition d;
  d.mode = mode;
  d.level = walk.level;
  d.horizon = n;
  d.y = y;

  // Gradient source: grad phi directly, or its conservative modification psi
  // on a window covering every queried displacement.
  GridVectorField psi;
  WalkBox box = bounding_box(walk, n);
  if (mode == TryMode::exact) {
    int32_t spanx = box.hix - box.lox, spany = box.hiy - box.loy;
    int32_t extent = std::max(spanx, spany) + std::max(std::abs(y.x), std::abs(y.y)) + 2;
    psi = conservative_modify(phi, {0.0, 0.0}, h, double(extent) * h);
    CurlScan scan = conservativity_scan(psi, 1e-12 * std::max(1.0, psi.max_abs()) / h);
    if (!scan.ok)
      fail(Err::not_conservative, "psi construction left max |curl| = " +
                                      std::to_string(scan.max_abs_curl));
  }
  auto grad = [&](GridPoint p) -> Vec2 {
    if (mode == TryMode::exact) return {psi.at(1, p.x, p.y), psi.at(2, p.x, p.y)};
    Vec2 v{double(p.x) * h, double(p.y) * h};
    return {phi.d1(v), phi.d2(v)};
  };
  auto lap = [&](GridPoint p) -> double {
    Vec2 v{double(p.x) * h, double(p.y) * h};
    return phi.d11(v) + phi.d22(v);
  };

  PastTable past;
  double maxf = 0.0;
  double h2 = h * h, h3 = h2 * h, h4 = h2 * h2;
  double lap_sum = 0.0;

  auto sum_component = [&](GridPoint at, int comp) {
    double s = 0.0;
    for (const PastTable::Entry& e : past.entries) {
      GridPoint q{at.x - e.x - y.x, at.y - e.y - y.y};
      Vec2 g = grad(q);
      s += double(e.cnt) * (comp == 1 ? g.x : g.y);
    }
    maxf = std::max(maxf, std::abs(s) * h2);
    return s;
  };

  for (int64_t r = 1; r <= n; ++r) {
    GridPoint prev = walk.at(r - 1), next = walk.at(r);
    GridPoint mid{next.x, prev.y};
    int x1 = next.x - prev.x, x2 = next.y - prev.y;
    past.insert(prev.x, prev.y);

    double a1 = sum_component(prev, 1);
    double a2 = sum_component(mid, 2);
    double b1 = sum_component(mid, 1);
    double b2 = sum_component(next, 2);
    d.term_stochastic += h3 * (a1 * double(x1) + a2 * double(x2));
    d.quad_direct += 0.5 * h3 * (double(x1) * (b1 - a1) + double(x2) * (b2 - a2));

    if (mode == TryMode::direct) {
      double ls = 0.0;
      for (const PastTable::Entry& e : past.entries)
        ls += double(e.cnt) * lap(GridPoint{prev.x - e.x - y.x, prev.y - e.y - y.y});
      lap_sum += ls;
    }

    d.term_path += h2 * trap_l_path({0, 0}, next, h, [&](GridPoint p) {
      return grad(GridPoint{p.x - next.x - y.x, p.y - next.y - y.y});
    });
  }
  past.insert(walk.x[size_t(n)], walk.y[size_t(n)]);

  // Left side: trapezoidal sum over the staircase to S_n of the full
  // translate sum (j = 0..n inclusive).
  d.lhs = h2 * trap_l_path({0, 0}, walk.at(n), h, [&](GridPoint p) -> Vec2 {
    double sx = 0.0, sy = 0.0;
    for (const PastTable::Entry& e : past.entries) {
      Vec2 g = grad(GridPoint{p.x - e.x - y.x, p.y - e.y - y.y});
      sx += double(e.cnt) * g.x;
      sy += double(e.cnt) * g.y;
    }
    maxf = std::max(maxf, h2 * std::max(std::abs(sx), std::abs(sy)));
    return {sx, sy};
  });

  // Displacement-grouped forms of the quadratic term.
  SiltField field = silt(walk, n);
  double mu_sum = 0.0, center_sum = 0.0;
  bool have_lap = bool(phi.d11) && bool(phi.d22);
  field.counts.for_each([&](uint64_t key, const SiltValue& v) {
    GridPoint p = unpack_point(key);
    GridPoint rel{p.x - y.x, p.y - y.y};
    for (int mu = 0; mu < 4; ++mu) {
      int32_t cnt = v.mu[size_t(mu)];
      if (cnt == 0) continue;
      int sx = mu_sign_x(mu), sy = mu_sign_y(mu);
      Vec2 g00 = grad(rel);
      Vec2 g10 = grad(GridPoint{rel.x + sx, rel.y});
      Vec2 g11 = grad(GridPoint{rel.x + sx, rel.y + sy});
      double u = (g10.x - g00.x) * double(sx) / h + (g11.y - g10.y) * double(sy) / h;
      mu_sum += double(cnt) * u;
    }
    if (have_lap) center_sum += double(v.total) * lap(rel);
  });
  d.quad_mu_regroup = 0.5 * h4 * mu_sum;
  d.laplace_center = have_lap ? 0.5 * h4 * center_sum : 0.0;

  d.term_laplace = (mode == TryMode::exact) ? d.quad_direct : 0.5 * h4 * lap_sum;
  d.residual = d.lhs - d.term_path - d.term_stochastic - d.term_laplace;
  d.scale = std::max(maxf * double(n) * h, 1e-30);
  return d;
}

}  // namespace siltlab
