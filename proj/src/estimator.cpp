#include "siltlab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "siltlab/errors.hpp"
#include "siltlab/flat_map.hpp"

namespace siltlab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double PhiDelta::phi(Vec2 x) const {
  double r2 = x.norm2();
  double d2 = delta * delta;
  if (r2 <= d2) return (r2 - d2) / (2.0 * d2) + std::log(delta);
  return 0.5 * std::log(r2);
}

Vec2 PhiDelta::grad(Vec2 x) const {
  double r2 = x.norm2();
  double d2 = delta * delta;
  if (r2 <= d2) return x * (1.0 / d2);
  return x * (1.0 / r2);
}

double PhiDelta::lap(Vec2 x) const {
  double r2 = x.norm2();
  double d2 = delta * delta;
  return r2 < d2 ? 2.0 / d2 : 0.0;
}

PhiDelta phi_delta(double delta) {
  if (!(delta > 0.0)) fail(Err::nonpositive_delta, "phi_delta needs delta > 0");
  return PhiDelta{delta};
}

SpecTryTerms spec_try_terms(const PlanarWalk& proxy, double t, Vec2 y, double delta,
                            int eval_level) {
  if (!(delta > 0.0)) fail(Err::nonpositive_delta, "spec_try_terms needs delta > 0");
  if (eval_level < 0 || eval_level > proxy.level)
    fail(Err::config_invalid, "evaluation level outside [0, proxy level]");
  PhiDelta pd = phi_delta(delta);

  SpecTryTerms out;
  out.t = t;
  out.delta = delta;
  out.eval_level = eval_level;
  out.y = y;

  int M = proxy.level;
  double hM = proxy.space_unit();
  int64_t nM = int64_t(std::floor(t / (hM * hM) + 1e-9));
  if (nM > proxy.steps())
    fail(Err::proxy_too_short, "proxy covers " + std::to_string(proxy.steps()) +
                                   " steps, need " + std::to_string(nM));

  // Left side: Riemann sum over the proxy mesh of phi_delta(W(t)-W(u)-y).
  Vec2 wt{double(proxy.x[size_t(nM)]) * hM, double(proxy.y[size_t(nM)]) * hM};
  double lhs = 0.0;
  for (int64_t i = 0; i < nM; ++i) {
    Vec2 wu{double(proxy.x[size_t(i)]) * hM, double(proxy.y[size_t(i)]) * hM};
    lhs += pd.phi(wt - wu - y);
  }
  out.lhs = lhs * hM * hM;

  out.t_phi_y = t * pd.phi(y);  // phi_delta is radial, so phi(y) = phi(-y)

  // Strict pair-count measure term on the proxy mesh.
  {
    double scale = std::ldexp(1.0, M);
    DiscQuery q{y.x * scale, y.y * scale, delta * scale, /*strict=*/true, 0};
    disc_pair_counts(proxy, nM, std::span<DiscQuery>(&q, 1));
    out.measure_pairs = double(q.pairs) * std::ldexp(1.0, -4 * M) / (delta * delta);
  }

  // Evaluation-level walk.
  PlanarWalk em;
  const PlanarWalk* wm = &proxy;
  double hm = hM;
  int64_t nm = nM;
  if (eval_level < M) {
    hm = std::ldexp(1.0, -eval_level);
    nm = int64_t(std::floor(t / (hm * hm) + 1e-9));
    try {
      em = skorohod_embed(proxy, eval_level, nm).embedded;
    } catch (const Error& e) {
      if (e.kind() == Err::path_too_short)
        fail(Err::proxy_too_short, "embedding at level " + std::to_string(eval_level) +
                                       " ran out of exits");
      throw;
    }
    wm = &em;
  }

  // Closed-disc lattice sum at the evaluation level.
  {
    double scale = std::ldexp(1.0, eval_level);
    DiscQuery q{y.x * scale, y.y * scale, delta * scale, /*strict=*/false, 0};
    disc_pair_counts(*wm, nm, std::span<DiscQuery>(&q, 1));
    out.measure_lattice = double(q.pairs) * std::ldexp(1.0, -4 * eval_level) / (delta * delta);
  }

  // Stochastic double sum at the evaluation level, coordinate-staggered.
  {
    struct Entry {
      int32_t x, y;
      int32_t cnt;
    };
    std::vector<Entry> past;
    FlatMap<int32_t> idx;
    double h2 = hm * hm, h3 = h2 * hm;
    double stoch = 0.0;
    for (int64_t r = 1; r <= nm; ++r) {
      int32_t px = wm->x[size_t(r - 1)], py = wm->y[size_t(r - 1)];
      int32_t qx = wm->x[size_t(r)], qy = wm->y[size_t(r)];
      int32_t& slot = idx[pack_point(px, py)];
      if (slot == 0) {
        past.push_back({px, py, 1});
        slot = int32_t(past.size());
      } else {
        past[size_t(slot - 1)].cnt++;
      }
      double s1 = 0.0, s2 = 0.0;
      for (const Entry& e : past) {
        Vec2 arg1{double(px - e.x) * hm - y.x, double(py - e.y) * hm - y.y};
        Vec2 arg2{double(qx - e.x) * hm - y.x, double(py - e.y) * hm - y.y};
        s1 += double(e.cnt) * pd.grad(arg1).x;
        s2 += double(e.cnt) * pd.grad(arg2).y;
      }
      stoch += h3 * (s1 * double(qx - px) + s2 * double(qy - py));
    }
    out.stochastic = stoch;
  }

  out.residual = out.lhs - out.t_phi_y - out.stochastic - out.measure_lattice;
  return out;
}

AlphaLadder alpha_estimate(const PlanarWalk& proxy, double t, Vec2 y,
                           const std::vector<std::pair<double, int>>& ladder) {
  if (y.norm2() == 0.0)
    fail(Err::config_invalid, "alpha_estimate is defined away from the origin");
  AlphaLadder out;
  out.t = t;
  out.y = y;

  // Group rungs by level so each level costs one pass over its walk.
  std::map<int, std::vector<size_t>> by_level;
  out.rungs.resize(ladder.size());
  for (size_t i = 0; i < ladder.size(); ++i) {
    double delta = ladder[i].first;
    int m = ladder[i].second;
    if (m < 0 || m > proxy.level) fail(Err::config_invalid, "ladder level outside proxy range");
    if (!(delta >= 4.0 * std::ldexp(1.0, -m)))
      fail(Err::ladder_too_aggressive,
           "delta = " + std::to_string(delta) + " below 4 * 2^-m at m = " + std::to_string(m));
    out.rungs[i] = {delta, m, 0.0};
    by_level[m].push_back(i);
  }

  for (const auto& [m, idxs] : by_level) {
    double hm = std::ldexp(1.0, -m);
    int64_t nm = int64_t(std::floor(t / (hm * hm) + 1e-9));
    PlanarWalk em;
    const PlanarWalk* wm = &proxy;
    if (m < proxy.level) {
      try {
        em = skorohod_embed(proxy, m, nm).embedded;
      } catch (const Error& e) {
        if (e.kind() == Err::path_too_short)
          fail(Err::proxy_too_short, "embedding at level " + std::to_string(m) +
                                         " ran out of exits");
        throw;
      }
      wm = &em;
    } else if (nm > proxy.steps()) {
      fail(Err::proxy_too_short, "proxy does not cover the requested horizon");
    }
    double scale = std::ldexp(1.0, m);
    std::vector<DiscQuery> queries(idxs.size());
    for (size_t k = 0; k < idxs.size(); ++k) {
      const RungEstimate& r = out.rungs[idxs[k]];
      queries[k] = {y.x * scale, y.y * scale, r.delta * scale, /*strict=*/false, 0};
    }
    disc_pair_counts(*wm, nm, queries);
    for (size_t k = 0; k < idxs.size(); ++k) {
      RungEstimate& r = out.rungs[idxs[k]];
      r.value = double(queries[k].pairs) * std::ldexp(1.0, -4 * m) / (kPi * r.delta * r.delta);
    }
  }

  out.alpha_hat = out.rungs.empty() ? 0.0 : out.rungs.back().value;
  return out;
}

double gamma_from_alpha(double alpha_hat, double t, Vec2 y) {
  return alpha_hat + t / kPi * std::log(y.norm());
}

}  // namespace siltlab
