#include "siltlab/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include "siltlab/quadrature.hpp"
#include "siltlab/rng.hpp"

namespace siltlab {

double GridVectorField::at(int comp, int32_t i, int32_t j) const {
  if (!win.contains(i, j))
    fail(Err::out_of_window, "grid point (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") outside window of half-width " + std::to_string(win.half));
  return comp == 1 ? v1(i, j) : v2(i, j);
}

double GridVectorField::max_abs() const {
  double m = 0.0;
  for (double v : f1) m = std::max(m, std::abs(v));
  for (double v : f2) m = std::max(m, std::abs(v));
  return m;
}

DiscretePath DiscretePath::l_path(GridPoint from, GridPoint to) {
  DiscretePath p;
  int dx = to.x > from.x ? 1 : -1;
  for (int32_t i = from.x; i != to.x; i += dx) p.edges.push_back({i, from.y, 1, dx});
  int dy = to.y > from.y ? 1 : -1;
  for (int32_t j = from.y; j != to.y; j += dy) p.edges.push_back({to.x, j, 2, dy});
  return p;
}

double trapezoidal_sum(const GridVectorField& f, const DiscretePath& path) {
  double sum = 0.0;
  for (const GridEdge& e : path.edges) {
    int32_t i2 = e.i + (e.axis == 1 ? e.dir : 0);
    int32_t j2 = e.j + (e.axis == 2 ? e.dir : 0);
    double a = f.at(e.axis, e.i, e.j);
    double b = f.at(e.axis, i2, j2);
    sum += double(e.dir) * (a + b);
  }
  return 0.5 * f.win.h * sum;
}

double discrete_curl(const GridVectorField& f, int32_t i, int32_t j) {
  if (!f.win.contains(i, j) || !f.win.contains(i + 1, j + 1))
    fail(Err::out_of_window, "elementary rectangle outside window");
  double s = f.v1(i, j) + f.v1(i + 1, j) + f.v2(i + 1, j) + f.v2(i + 1, j + 1) -
             f.v1(i + 1, j + 1) - f.v1(i, j + 1) - f.v2(i, j + 1) - f.v2(i, j);
  return s / (2.0 * f.win.h);
}

GridVectorField conservative_modify(const GridScalarSpec& g, Vec2 a, double h, double R) {
  if (!(h > 0.0) || !(R >= h)) fail(Err::config_invalid, "conservative_modify needs h > 0, R >= h");
  int32_t W = int32_t(std::ceil(R / h - 1e-12));
  GridVectorField f;
  f.win = GridWindow{a, h, W};
  f.allocate();

  // Gradient pinned on both coordinate axes.
  for (int32_t i = -W; i <= W; ++i) {
    Vec2 p = f.win.at(i, 0);
    f.c1(i, 0) = g.d1(p);
    f.c2(i, 0) = g.d2(p);
    Vec2 q = f.win.at(0, i);
    f.c1(0, i) = g.d1(q);
    f.c2(0, i) = g.d2(q);
  }

  // Per quadrant, in diagonal layers; the "new" vertex of a rectangle is its
  // corner furthest from the axes and absorbs +-h * (modified curl).
  const int sgnx[4] = {+1, -1, -1, +1};
  const int sgny[4] = {+1, +1, -1, -1};
  const double tmod1[4] = {+1.0, +1.0, -1.0, -1.0};
  const double tmod2[4] = {-1.0, +1.0, +1.0, -1.0};

  auto process_cell = [&](int q, int32_t ci, int32_t cj) {
    int32_t x0 = sgnx[q] > 0 ? ci : -(ci + 1);
    int32_t y0 = sgny[q] > 0 ? cj : -(cj + 1);
    int32_t nx = sgnx[q] * (ci + 1);
    int32_t ny = sgny[q] * (cj + 1);
    Vec2 np = f.win.at(nx, ny);
    double g1 = g.d1(np), g2 = g.d2(np);

    auto F1 = [&](int32_t i, int32_t j) { return (i == nx && j == ny) ? g1 : f.v1(i, j); };
    auto F2 = [&](int32_t i, int32_t j) { return (i == nx && j == ny) ? g2 : f.v2(i, j); };
    double curl = (F1(x0, y0) + F1(x0 + 1, y0) + F2(x0 + 1, y0) + F2(x0 + 1, y0 + 1) -
                   F1(x0 + 1, y0 + 1) - F1(x0, y0 + 1) - F2(x0, y0 + 1) - F2(x0, y0)) /
                  (2.0 * h);
    f.c1(nx, ny) = g1 + tmod1[q] * h * curl;
    f.c2(nx, ny) = g2 + tmod2[q] * h * curl;
  };

  for (int q = 0; q < 4; ++q) {
    for (int32_t r = 0; r < W; ++r) {
      process_cell(q, r, r);
      for (int32_t c = r + 1; c < W; ++c) {
        process_cell(q, c, r);
        process_cell(q, r, c);
      }
    }
  }
  f.conservative = true;
  return f;
}

CurlScan conservativity_scan(const GridVectorField& f, double tol) {
  CurlScan s;
  for (int32_t i = -f.win.half; i < f.win.half; ++i)
    for (int32_t j = -f.win.half; j < f.win.half; ++j)
      s.max_abs_curl = std::max(s.max_abs_curl, std::abs(discrete_curl(f, i, j)));
  s.ok = s.max_abs_curl <= tol;
  return s;
}

double discrete_potential(const GridVectorField& f, GridPoint b) {
  if (!f.conservative) {
    CurlScan s = conservativity_scan(f, 1e-12 * std::max(1.0, f.max_abs()) / f.win.h);
    if (!s.ok)
      fail(Err::not_conservative,
           "max |curl| = " + std::to_string(s.max_abs_curl) + " fails the conservativity check");
  }
  return trapezoidal_sum(f, DiscretePath::l_path({0, 0}, b));
}

namespace {

// Sliding minimum over a centred window of half-width w, per row.
void row_window_min(const std::vector<double>& src, int n, int w, std::vector<double>& dst) {
  std::deque<int> dq;
  dst.assign(size_t(n), 0.0);
  int right = 0;
  for (int i = 0; i < n; ++i) {
    for (; right <= std::min(n - 1, i + w); ++right) {
      while (!dq.empty() && src[size_t(dq.back())] >= src[size_t(right)]) dq.pop_back();
      dq.push_back(right);
    }
    while (dq.front() < i - w) dq.pop_front();
    dst[size_t(i)] = src[size_t(dq.front())];
  }
}

}  // namespace

double eps_h(const GridScalarSpec& g, Vec2 a, double h, double R, int oversample) {
  if (!g.d111 || !g.d222) fail(Err::config_invalid, "eps_h needs third-partial evaluators");
  double pitch = h / double(oversample);
  int n = 2 * int(std::ceil((R + h) / pitch)) + 1;  // samples per side
  int mid = n / 2;
  int w = int(std::ceil(std::sqrt(2.0) * double(oversample)));

  double eps = 0.0;
  for (const auto* d3 : {&g.d111, &g.d222}) {
    // Stream rows, keeping a ring of 2w+1 row-minimum slices plus the raw
    // centre rows they serve.
    std::vector<std::vector<double>> ring_min(static_cast<size_t>(2 * w + 1));
    std::vector<std::vector<double>> ring_raw(static_cast<size_t>(2 * w + 1));
    std::vector<double> row(static_cast<size_t>(n));
    std::vector<double> rmin;
    for (int y = 0; y < n + w; ++y) {
      if (y < n) {
        for (int x = 0; x < n; ++x)
          row[size_t(x)] = (*d3)({a.x + pitch * double(x - mid), a.y + pitch * double(y - mid)});
        row_window_min(row, n, w, rmin);
        ring_min[size_t(y % (2 * w + 1))] = rmin;
        ring_raw[size_t(y % (2 * w + 1))] = row;
      }
      int yc = y - w;  // centre row now fully covered by the ring
      if (yc < 0 || yc >= n) continue;
      const std::vector<double>& centre = ring_raw[size_t(yc % (2 * w + 1))];
      for (int x = 0; x < n; ++x) {
        double mn = centre[size_t(x)];
        for (int dy = std::max(0, yc - w); dy <= std::min(n - 1, yc + w); ++dy)
          mn = std::min(mn, ring_min[size_t(dy % (2 * w + 1))][size_t(x)]);
        eps = std::max(eps, centre[size_t(x)] - mn);
      }
    }
  }
  return eps;
}

TrapezoidErrorCheck trapezoid_error_bound(const std::function<double(double)>& phi,
                                          const std::function<double(double)>& phi_dd, double x,
                                          double h) {
  TrapezoidErrorCheck c;
  double maxdd = 0.0;
  const int samples = 129;
  for (int i = 0; i < samples; ++i)
    maxdd = std::max(maxdd, std::abs(phi_dd(x + h * double(i) / double(samples - 1))));
  double env = h * h * h / 12.0 * maxdd;
  // widen by quadrature/rounding noise so exact-zero cases stay contained
  env = env * (1.0 + 1e-9) + 1e-14 * h * (1.0 + std::abs(phi(x)) + std::abs(phi(x + h)));
  c.lo = -env;
  c.hi = env;
  double integral = adaptive_simpson(phi, x, x + h, 1e-14 * std::max(1.0, maxdd), 40);
  c.actual = integral - h * 0.5 * (phi(x) + phi(x + h));
  c.contained = c.actual >= c.lo && c.actual <= c.hi;
  return c;
}

GridVectorField random_conservative_field(uint64_t seed, Vec2 a, double h, int32_t half,
                                          double amplitude) {
  GridVectorField f;
  f.win = GridWindow{a, h, half};
  f.allocate();
  int32_t W = half;
  int32_t side = f.win.side();

  auto uniform = [&](uint64_t k) {
    return 2.0 * (double(splitmix64(seed ^ k) >> 11) * 0x1.0p-53) - 1.0;
  };

  // Random potential; edge trapezoids are forced to match its differences,
  // which makes every closed circulation vanish identically.
  std::vector<double> pot(size_t(side) * size_t(side));
  for (int32_t i = -W; i <= W; ++i)
    for (int32_t j = -W; j <= W; ++j)
      pot[f.win.index(i, j)] =
          amplitude * 0.25 * h * uniform(pack_point(i, j) * 0x9E3779B97F4A7C15ULL + 1);

  for (int32_t j = -W; j <= W; ++j) {
    f.c1(-W, j) = amplitude * uniform(pack_point(j, 2 * W + 7) + 2);
    for (int32_t i = -W; i < W; ++i)
      f.c1(i + 1, j) = 2.0 * (pot[f.win.index(i + 1, j)] - pot[f.win.index(i, j)]) / h - f.v1(i, j);
  }
  for (int32_t i = -W; i <= W; ++i) {
    f.c2(i, -W) = amplitude * uniform(pack_point(2 * W + 9, i) + 3);
    for (int32_t j = -W; j < W; ++j)
      f.c2(i, j + 1) = 2.0 * (pot[f.win.index(i, j + 1)] - pot[f.win.index(i, j)]) / h - f.v2(i, j);
  }
  f.conservative = true;
  return f;
}

void write_field_csv(const GridVectorField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Err::io_error, "cannot open " + path);
  os << "x1_lattice,x2_lattice,f1,f2\n";
  for (int32_t i = -f.win.half; i <= f.win.half; ++i)
    for (int32_t j = -f.win.half; j <= f.win.half; ++j)
      os << i << ',' << j << ',' << f.v1(i, j) << ',' << f.v2(i, j) << '\n';
}

void write_curl_csv(const GridVectorField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Err::io_error, "cannot open " + path);
  os << "x1,x2,curl\n";
  for (int32_t i = -f.win.half; i < f.win.half; ++i)
    for (int32_t j = -f.win.half; j < f.win.half; ++j)
      os << i << ',' << j << ',' << discrete_curl(f, i, j) << '\n';
}

}  // namespace siltlab
