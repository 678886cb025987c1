#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "siltlab/grid_field.hpp"
#include "siltlab/quadrature.hpp"
#include "siltlab/rng.hpp"
#include "siltlab/synthetic.hpp"

using namespace siltlab;

TEST_CASE("trapezoidal sum: empty path, constant loop, single edge") {
  GridVectorField f;
  f.win = {{0.0, 0.0}, 0.5, 4};
  f.allocate();
  for (double& v : f.f1) v = 3.25;
  for (double& v : f.f2) v = -1.5;

  CHECK(trapezoidal_sum(f, DiscretePath{}) == 0.0);

  DiscretePath loop;
  loop.edges = {{0, 0, 1, +1}, {1, 0, 2, +1}, {1, 1, 1, -1}, {0, 1, 2, -1}};
  CHECK(trapezoidal_sum(f, loop) == doctest::Approx(0.0).epsilon(1e-15));

  f.c1(2, 1) = 7.0;
  f.c1(3, 1) = 9.0;
  DiscretePath one;
  one.edges = {{2, 1, 1, +1}};
  CHECK(trapezoidal_sum(f, one) == doctest::Approx(0.5 * 0.5 * (7.0 + 9.0)));

  DiscretePath bad;
  bad.edges = {{4, 4, 1, +1}};
  CHECK_THROWS_AS((void)trapezoidal_sum(f, bad), Error);
}

TEST_CASE("discrete curl: gradients of affine fields and constants vanish") {
  GridVectorField f;
  f.win = {{0.0, 0.0}, 0.25, 5};
  f.allocate();
  // f = grad g for affine g(x) = 2 x1 - 3 x2 + 1: constant field
  for (int32_t i = -5; i <= 5; ++i)
    for (int32_t j = -5; j <= 5; ++j) {
      f.c1(i, j) = 2.0;
      f.c2(i, j) = -3.0;
    }
  for (int32_t i = -5; i < 5; ++i)
    for (int32_t j = -5; j < 5; ++j) CHECK(discrete_curl(f, i, j) == 0.0);
}

TEST_CASE("discrete curl matches the eight-term formula and the circulation") {
  GridVectorField f;
  f.win = {{0.0, 0.0}, 0.5, 2};
  f.allocate();
  uint64_t st = 77;
  auto u = [&]() {
    st = splitmix64(st);
    return 2.0 * double(st >> 11) * 0x1.0p-53 - 1.0;
  };
  for (int32_t i = -2; i <= 2; ++i)
    for (int32_t j = -2; j <= 2; ++j) {
      f.c1(i, j) = u();
      f.c2(i, j) = u();
    }
  double h = 0.5;
  for (int32_t i = -2; i < 2; ++i)
    for (int32_t j = -2; j < 2; ++j) {
      double hand = (f.v1(i, j) + f.v1(i + 1, j) + f.v2(i + 1, j) + f.v2(i + 1, j + 1) -
                     f.v1(i + 1, j + 1) - f.v1(i, j + 1) - f.v2(i, j + 1) - f.v2(i, j)) /
                    (2.0 * h);
      CHECK(discrete_curl(f, i, j) == doctest::Approx(hand));
      DiscretePath boundary;
      boundary.edges = {{i, j, 1, +1}, {int32_t(i + 1), j, 2, +1},
                        {int32_t(i + 1), int32_t(j + 1), 1, -1}, {i, int32_t(j + 1), 2, -1}};
      CHECK(discrete_curl(f, i, j) ==
            doctest::Approx(trapezoidal_sum(f, boundary) / (h * h)).epsilon(1e-12));
    }
}

TEST_CASE("conservative modification: cubic g reproduces its gradient exactly") {
  GridScalarSpec g = make_cubic_spec(99);
  double h = 1.0 / 16.0;
  GridVectorField f = conservative_modify(g, {0.0, 0.0}, h, 1.5);
  double worst = 0.0;
  for (int32_t i = -f.win.half; i <= f.win.half; ++i)
    for (int32_t j = -f.win.half; j <= f.win.half; ++j) {
      Vec2 p = f.win.at(i, j);
      worst = std::max(worst, std::abs(f.v1(i, j) - g.d1(p)));
      worst = std::max(worst, std::abs(f.v2(i, j) - g.d2(p)));
    }
  CHECK(worst <= 1e-12);
  CHECK(conservativity_scan(f, 1e-12).ok);
}

TEST_CASE("conservative modification: axes pinned, zero curl, error bound") {
  GridScalarSpec g = make_sincos_spec();
  double R = 2.0;
  for (int he : {4, 5, 6}) {
    double h = std::ldexp(1.0, -he);
    GridVectorField f = conservative_modify(g, {0.0, 0.0}, h, R);

    for (int32_t i = -f.win.half; i <= f.win.half; ++i) {
      CHECK(f.v1(i, 0) == g.d1(f.win.at(i, 0)));
      CHECK(f.v2(i, 0) == g.d2(f.win.at(i, 0)));
      CHECK(f.v1(0, i) == g.d1(f.win.at(0, i)));
      CHECK(f.v2(0, i) == g.d2(f.win.at(0, i)));
    }

    CurlScan scan = conservativity_scan(f, 1e-12);
    CHECK(scan.ok);

    double eps = eps_h(g, {0.0, 0.0}, h, R);
    double bound = R / 6.0 * h * eps;
    double worst = 0.0;
    for (int32_t i = -f.win.half; i <= f.win.half; ++i)
      for (int32_t j = -f.win.half; j <= f.win.half; ++j) {
        Vec2 p = f.win.at(i, j);
        if (p.norm() > R) continue;
        worst = std::max(worst, std::abs(f.v1(i, j) - g.d1(p)));
        worst = std::max(worst, std::abs(f.v2(i, j) - g.d2(p)));
      }
    CHECK(worst <= bound);
  }
}

TEST_CASE("diagonal error accumulation and per-rectangle curl estimate") {
  GridScalarSpec g = make_trig_spec(5, 3, 1.2, 1.0);
  double h = 1.0 / 32.0;
  double R = 1.0;
  GridVectorField f = conservative_modify(g, {0.0, 0.0}, h, R);

  // raw gradient field, to measure curl_h(grad g)
  GridVectorField raw;
  raw.win = f.win;
  raw.allocate();
  for (int32_t i = -raw.win.half; i <= raw.win.half; ++i)
    for (int32_t j = -raw.win.half; j <= raw.win.half; ++j) {
      Vec2 p = raw.win.at(i, j);
      raw.c1(i, j) = g.d1(p);
      raw.c2(i, j) = g.d2(p);
    }
  double max_curl = 0.0;
  for (int32_t i = -raw.win.half; i < raw.win.half; ++i)
    for (int32_t j = -raw.win.half; j < raw.win.half; ++j)
      max_curl = std::max(max_curl, std::abs(discrete_curl(raw, i, j)));

  // layer n error <= n h max|curl_h grad g|
  for (int32_t i = -f.win.half; i <= f.win.half; ++i)
    for (int32_t j = -f.win.half; j <= f.win.half; ++j) {
      int32_t layer = std::min(std::abs(i), std::abs(j));
      Vec2 p = f.win.at(i, j);
      double err = std::max(std::abs(f.v1(i, j) - g.d1(p)), std::abs(f.v2(i, j) - g.d2(p)));
      CHECK(err <= double(layer) * h * max_curl + 1e-13);
    }

}

TEST_CASE("per-rectangle curl bound from the sampled modulus") {
  GridScalarSpec g = make_trig_spec(6, 2, 1.0, 1.0);
  double h = 1.0 / 16.0;
  GridVectorField raw;
  raw.win = {{0.0, 0.0}, h, 8};
  raw.allocate();
  for (int32_t i = -8; i <= 8; ++i)
    for (int32_t j = -8; j <= 8; ++j) {
      Vec2 p = raw.win.at(i, j);
      raw.c1(i, j) = g.d1(p);
      raw.c2(i, j) = g.d2(p);
    }
  for (int32_t i = -8; i < 8; ++i)
    for (int32_t j = -8; j < 8; ++j) {
      // eps_E: modulus of the third partials over the rectangle, sampled
      double mx = -1e300, mn = 1e300, mx2 = -1e300, mn2 = 1e300;
      for (int a = 0; a <= 8; ++a)
        for (int b = 0; b <= 8; ++b) {
          Vec2 p = raw.win.at(i, j);
          Vec2 q{p.x + h * double(a) / 8.0, p.y + h * double(b) / 8.0};
          double v1 = g.d111(q), v2 = g.d222(q);
          mx = std::max(mx, v1);
          mn = std::min(mn, v1);
          mx2 = std::max(mx2, v2);
          mn2 = std::min(mn2, v2);
        }
      double eps_e = std::max(mx - mn, mx2 - mn2);
      CHECK(std::abs(discrete_curl(raw, i, j)) <= h / 6.0 * eps_e * 1.05 + 1e-15);
    }
}

TEST_CASE("discrete potential: zero at origin, path independence") {
  GridVectorField f = random_conservative_field(31, {0.0, 0.0}, 0.25, 10, 1.0);
  CHECK(discrete_potential(f, {0, 0}) == 0.0);

  uint64_t st = 8;
  auto pick = [&]() {
    st = splitmix64(st);
    return int32_t(st % 19) - 9;
  };
  for (int rep = 0; rep < 100; ++rep) {
    GridPoint b{pick(), pick()};
    // two different staircases to the same point agree
    DiscretePath p1 = DiscretePath::l_path({0, 0}, b);
    DiscretePath p2;
    int dy = b.y > 0 ? 1 : -1;
    for (int32_t j = 0; j != b.y; j += dy) p2.edges.push_back({0, j, 2, dy});
    int dx = b.x > 0 ? 1 : -1;
    for (int32_t i = 0; i != b.x; i += dx) p2.edges.push_back({i, b.y, 1, dx});
    double t1 = trapezoidal_sum(f, p1);
    double t2 = trapezoidal_sum(f, p2);
    CHECK(std::abs(t1 - t2) <= 1e-12 * std::max(1.0, std::abs(t1)));
    CHECK(discrete_potential(f, b) == doctest::Approx(t1));
  }

  GridVectorField bad;
  bad.win = {{0.0, 0.0}, 0.5, 2};
  bad.allocate();
  bad.c2(1, 0) = 5.0;  // one hot component breaks every adjacent circulation
  CHECK_THROWS_AS((void)discrete_potential(bad, {1, 1}), Error);
}

TEST_CASE("potential differences of a modified quadratic match the oracle") {
  // g quadratic: trapezoid sums along edges are exact integrals of grad g,
  // so the potential difference equals g(b) - g(a) exactly.
  GridScalarSpec g;
  g.g = [](Vec2 p) { return 0.7 * p.x * p.x - 0.3 * p.x * p.y + 0.2 * p.y * p.y; };
  g.d1 = [](Vec2 p) { return 1.4 * p.x - 0.3 * p.y; };
  g.d2 = [](Vec2 p) { return -0.3 * p.x + 0.4 * p.y; };
  g.d111 = [](Vec2) { return 0.0; };
  g.d222 = [](Vec2) { return 0.0; };
  double h = 0.125;
  GridVectorField f = conservative_modify(g, {0.0, 0.0}, h, 1.0);
  for (GridPoint b : {GridPoint{3, 5}, {-4, 2}, {-6, -6}, {5, -3}}) {
    Vec2 pb = f.win.at(b.x, b.y);
    CHECK(discrete_potential(f, b) == doctest::Approx(g.g(pb) - g.g({0, 0})).epsilon(1e-12));
  }
}

TEST_CASE("trapezoid error: affine exact, quadratic closed form, sine bound") {
  auto affine = [](double u) { return 3.0 * u - 2.0; };
  auto affine_dd = [](double) { return 0.0; };
  TrapezoidErrorCheck c0 = trapezoid_error_bound(affine, affine_dd, 0.3, 0.25);
  CHECK(std::abs(c0.actual) <= 1e-15);
  CHECK(c0.contained);

  auto sq = [](double u) { return u * u; };
  auto sq_dd = [](double) { return 2.0; };
  TrapezoidErrorCheck c1 = trapezoid_error_bound(sq, sq_dd, 0.0, 0.1);
  CHECK(c1.actual == doctest::Approx(-1.0e-3 / 12.0 * 2.0).epsilon(1e-9));
  CHECK(c1.contained);

  auto s = [](double u) { return std::sin(u); };
  auto s_dd = [](double u) { return -std::sin(u); };
  for (double x : {0.0, 0.7, 2.0}) {
    TrapezoidErrorCheck c2 = trapezoid_error_bound(s, s_dd, x, 0.2);
    CHECK(std::abs(c2.actual) <= 0.2 * 0.2 * 0.2 / 12.0 + 1e-15);
    CHECK(c2.contained);
  }
}

TEST_CASE("field and curl csv dumps carry the documented headers") {
  GridVectorField f = random_conservative_field(4, {0.0, 0.0}, 0.5, 3, 1.0);
  write_field_csv(f, "/tmp/silt_field.csv");
  write_curl_csv(f, "/tmp/silt_curl.csv");
  std::ifstream a("/tmp/silt_field.csv"), b("/tmp/silt_curl.csv");
  std::string ha, hb;
  std::getline(a, ha);
  std::getline(b, hb);
  CHECK(ha == "x1_lattice,x2_lattice,f1,f2");
  CHECK(hb == "x1,x2,curl");
  int rows = 0;
  std::string line;
  while (std::getline(a, line)) ++rows;
  CHECK(rows == 7 * 7);
}

TEST_CASE("random conservative fields really are conservative") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    GridVectorField f = random_conservative_field(seed, {0.0, 0.0}, 0.125, 12, 1.0);
    CurlScan s = conservativity_scan(f, 1e-12 * std::max(1.0, f.max_abs()) / f.win.h);
    CHECK(s.ok);
  }
}
