#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "siltlab/errors.hpp"
#include "siltlab/geometry.hpp"

namespace siltlab {

// Square grid window around origin a: vertices a + h*(i,j), |i|,|j| <= half.
struct GridWindow {
  Vec2 origin{};
  double h = 1.0;
  int32_t half = 0;

  int32_t side() const { return 2 * half + 1; }
  bool contains(int32_t i, int32_t j) const {
    return i >= -half && i <= half && j >= -half && j <= half;
  }
  size_t index(int32_t i, int32_t j) const {
    return size_t(i + half) * size_t(side()) + size_t(j + half);
  }
  Vec2 at(int32_t i, int32_t j) const {
    return {origin.x + h * double(i), origin.y + h * double(j)};
  }
};

// Planar vector field sampled on a grid window.
struct GridVectorField {
  GridWindow win;
  std::vector<double> f1, f2;
  bool conservative = false;

  void allocate() {
    f1.assign(size_t(win.side()) * size_t(win.side()), 0.0);
    f2.assign(f1.size(), 0.0);
  }
  double& c1(int32_t i, int32_t j) { return f1[win.index(i, j)]; }
  double& c2(int32_t i, int32_t j) { return f2[win.index(i, j)]; }
  double v1(int32_t i, int32_t j) const { return f1[win.index(i, j)]; }
  double v2(int32_t i, int32_t j) const { return f2[win.index(i, j)]; }
  // Component comp in {1,2} at lattice offset (i, j); throws OutOfWindow.
  double at(int comp, int32_t i, int32_t j) const;
  double max_abs() const;
};

// Oriented grid edge [x, x + dir*h*e_axis] with x at lattice offset (i, j).
struct GridEdge {
  int32_t i = 0, j = 0;
  int axis = 1;  // 1 or 2
  int dir = +1;  // +1 or -1
};

// A discrete path (1-chain): a formal list of oriented edges, not necessarily
// connected.
struct DiscretePath {
  std::vector<GridEdge> edges;

  // Axis-parallel staircase from `from` to `to`: first along e1, then e2.
  static DiscretePath l_path(GridPoint from, GridPoint to);
};

// Trapezoidal sum of f over the path: (h/2) sum_r dir_r (f(x_r)+f(x_r+dir h e)).
// Empty path gives 0. Throws OutOfWindow if an edge leaves the window.
double trapezoidal_sum(const GridVectorField& f, const DiscretePath& path);

// Discrete curl at the elementary rectangle with SW corner (i, j): the
// counterclockwise trapezoidal circulation divided by h^2.
double discrete_curl(const GridVectorField& f, int32_t i, int32_t j);

// Scalar field with caller-supplied derivatives. g, d1, d2 are required by
// the modification algorithm; the higher ones only by specific checks.
struct GridScalarSpec {
  std::function<double(Vec2)> g, d1, d2;
  std::function<double(Vec2)> d11, d22;    // second partials
  std::function<double(Vec2)> d111, d222;  // third partials (same-variable)
};

// Discrete conservative modification of grad g on the grid (a, h), windowed
// to lattice radius ceil(R/h). The gradient is kept exactly on both
// coordinate axes; away from them every "new" vertex absorbs the modified
// curl of its rectangle so that all elementary rectangles have zero curl.
// Quadrants are processed in diagonal layers starting at the axes.
GridVectorField conservative_modify(const GridScalarSpec& g, Vec2 a, double h, double R);

struct CurlScan {
  double max_abs_curl = 0.0;
  bool ok = false;
};

// Exhaustive scan of every elementary rectangle in the window.
CurlScan conservativity_scan(const GridVectorField& f, double tol);

// Discrete potential T_a^b of a conservative field, along an axis-first
// staircase (path independence makes the choice irrelevant). Throws
// NotConservative if the field is not flagged and fails a curl scan.
double discrete_potential(const GridVectorField& f, GridPoint b);

// Modulus of continuity of the third partials: sup |D3_j g(x) - D3_j g(y)|
// over |x-a|,|y-a| <= R+h, |x-y| <= h*sqrt(2), estimated on an oversampled
// grid (window comparisons use a square of half-width ceil(sqrt(2)*oversample)
// sample pitches, a slight overestimate of the Euclidean constraint).
double eps_h(const GridScalarSpec& g, Vec2 a, double h, double R, int oversample = 4);

// Error of the trapezoid rule on [x, x+h]: integral minus trapezoid equals
// -h^3/12 * phi''(xi). Returns the symmetric envelope from the sampled
// maximum of |phi''| and the actual quadrature error, with containment.
struct TrapezoidErrorCheck {
  double lo = 0.0, hi = 0.0;
  double actual = 0.0;
  bool contained = false;
};

TrapezoidErrorCheck trapezoid_error_bound(const std::function<double(double)>& phi,
                                          const std::function<double(double)>& phi_dd, double x,
                                          double h);

// Synthetic exactly-conservative field: random potential on the window plus
// free boundary values, with the component recursions enforcing that every
// edge trapezoid equals the potential difference. Used by verification
// suites that need arbitrary conservative inputs fast.
GridVectorField random_conservative_field(uint64_t seed, Vec2 a, double h, int32_t half,
                                          double amplitude = 1.0);

// CSV dumps: field as `x1_lattice,x2_lattice,f1,f2`, curls as `x1,x2,curl`.
void write_field_csv(const GridVectorField& f, const std::string& path);
void write_curl_csv(const GridVectorField& f, const std::string& path);

}  // namespace siltlab
