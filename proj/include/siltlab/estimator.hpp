#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "siltlab/geometry.hpp"
#include "siltlab/occupancy.hpp"
#include "siltlab/walks.hpp"

namespace siltlab {

// Continuously differentiable approximation of log|x|: quadratic inside
// radius delta, exact outside; gradient x/delta^2 inside, x/|x|^2 outside;
// Laplacian 2/delta^2 strictly inside and 0 from |x| = delta on.
struct PhiDelta {
  double delta = 0.0;

  double phi(Vec2 x) const;
  Vec2 grad(Vec2 x) const;
  double lap(Vec2 x) const;
};

PhiDelta phi_delta(double delta);  // throws NonpositiveDelta

// Terms of the mollified Tanaka–Rosen–Yor identity evaluated on walk data:
// the proxy (finest walk, standing in for the Brownian path) carries the left
// side and the strict pair-count measure term; the stochastic double sum and
// the closed-disc lattice sum are taken at `eval_level` via embedding.
struct SpecTryTerms {
  double t = 0.0;
  double delta = 0.0;
  int eval_level = 0;
  Vec2 y{};
  double lhs = 0.0;
  double t_phi_y = 0.0;
  double stochastic = 0.0;
  double measure_pairs = 0.0;    // delta^-2 measure proxy, strict inequality
  double measure_lattice = 0.0;  // delta^-2 disc sum of the level-m field, closed disc
  double residual = 0.0;         // lhs - t_phi_y - stochastic - measure_lattice
};

SpecTryTerms spec_try_terms(const PlanarWalk& proxy, double t, Vec2 y, double delta,
                            int eval_level);

// One rung of the (delta, m) ladder: the disc-averaged self-intersection
// local time (pi delta^2)^-1 sum_{x in B_delta(y)} alpha_m(t, x) 2^-2m.
struct RungEstimate {
  double delta = 0.0;
  int m = 0;
  double value = 0.0;
};

struct AlphaLadder {
  double t = 0.0;
  Vec2 y{};
  std::vector<RungEstimate> rungs;  // in caller order; no silent extrapolation
  double alpha_hat = 0.0;           // last rung
};

// Ladder of (delta, m) pairs evaluated on embeddings of one proxy walk.
// Requires y != 0 and delta >= 4 * 2^-m per rung (LadderTooAggressive
// otherwise); embedding shortfalls surface as ProxyTooShort.
AlphaLadder alpha_estimate(const PlanarWalk& proxy, double t, Vec2 y,
                           const std::vector<std::pair<double, int>>& ladder);

// Renormalised self-intersection local time gamma = alpha + (t/pi) log|y|.
double gamma_from_alpha(double alpha_hat, double t, Vec2 y);

}  // namespace siltlab
