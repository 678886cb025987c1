#pragma once

#include <cstdint>
#include <functional>

#include "siltlab/grid_field.hpp"
#include "siltlab/occupancy.hpp"
#include "siltlab/walks.hpp"

namespace siltlab {

// Time-dependent vector field over slices t_r = r h^2; `at` returns both
// components at slice index r and lattice offset p. The window pins h and the
// valid region. Lifetime of anything captured by `at` belongs to the caller.
struct TimeFieldFamily {
  GridWindow win;
  bool time_dependent = true;
  std::function<Vec2(int64_t r, GridPoint p)> at;
};

// Views an existing field as a constant-in-time family (captures a pointer).
TimeFieldFamily constant_family(const GridVectorField& f);

enum class ItoVariant { ito, stratonovich };
enum class ConservativityCheck { none, sampled, full };

// Term-by-term decomposition of the discrete Ito/Stratonovich identity for a
// walk with diagonal steps. In the ito variant `stochastic_sum` evaluates the
// integrand at the pre-step point per coordinate (coordinate 1 advanced
// before coordinate 2 inside a step) and `correction` carries the half-h^2
// difference-quotient term; in the stratonovich variant `stochastic_sum` is
// the midpoint form and `correction` is zero. residual = lhs - time_term -
// stochastic_sum - correction, and vanishes up to rounding for discrete
// conservative fields.
struct ItoDecomposition {
  ItoVariant variant = ItoVariant::ito;
  int level = 0;
  int64_t horizon = 0;
  double lhs = 0.0;
  double time_term = 0.0;
  double stochastic_sum = 0.0;
  double correction = 0.0;
  double residual = 0.0;
  double scale = 0.0;  // max |field| * n * h
};

ItoDecomposition discrete_ito(const TimeFieldFamily& field, const PlanarWalk& walk, int64_t n,
                              ItoVariant variant,
                              ConservativityCheck check = ConservativityCheck::sampled);

ItoDecomposition discrete_ito(const GridVectorField& field, const PlanarWalk& walk, int64_t n,
                              ItoVariant variant,
                              ConservativityCheck check = ConservativityCheck::sampled);

// Time-independent variant whose correction term is regrouped over lattice
// points and exit directions, weighted by the partial local times.
ItoDecomposition discrete_ito_tanaka_meyer(const GridVectorField& field, const PlanarWalk& walk,
                                           int64_t n,
                                           ConservativityCheck check = ConservativityCheck::sampled);

// Stochastic sum (f . W)^m_t: coordinate-staggered evaluation, f^2 taken at
// (B^1(t_r), B^2(t_{r-1})). t is truncated to the walk mesh.
double stochastic_sum(const TimeFieldFamily& field, const PlanarWalk& embedded, double t);
double stochastic_sum(const GridVectorField& field, const PlanarWalk& embedded, double t);

// ---------------------------------------------------------------------------
// Discrete Tanaka–Rosen–Yor decomposition
// ---------------------------------------------------------------------------

enum class TryMode { exact, direct };

// Terms of the discrete Tanaka–Rosen–Yor identity for the field
// f^y(t_r, x) = sum_{j<=r} psi(x - S_j - y) h^2. In exact mode psi is the
// discrete conservative modification of grad phi and the identity closes to
// rounding; in direct mode grad phi itself is used, the quadratic term is
// replaced by the centred Laplacian sum, and the recorded residual carries
// the O(h) + O(eps(h)) discretisation error.
struct TryDecomposition {
  TryMode mode = TryMode::direct;
  int level = 0;
  int64_t horizon = 0;
  GridPoint y{};
  double lhs = 0.0;
  double term_path = 0.0;
  double term_stochastic = 0.0;
  double term_laplace = 0.0;  // exact: psi difference-quotient; direct: centred Laplacian
  double residual = 0.0;
  double scale = 0.0;
  // Regrouping diagnostics for the quadratic term: the step-indexed
  // difference-quotient double sum, the same sum regrouped by displacement
  // and exit direction (exact regroup), and the displacement-grouped centred
  // Laplacian form (mu-to-centre substitution, O(h log^2 h) away).
  double quad_direct = 0.0;
  double quad_mu_regroup = 0.0;
  double laplace_center = 0.0;
};

TryDecomposition discrete_try(const GridScalarSpec& phi, const PlanarWalk& walk, GridPoint y,
                              int64_t n, TryMode mode);

}  // namespace siltlab
