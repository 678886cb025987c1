#include "siltlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "siltlab/estimator.hpp"
#include "siltlab/formulas.hpp"
#include "siltlab/occupancy.hpp"
#include "siltlab/oracles.hpp"
#include "siltlab/quadrature.hpp"
#include "siltlab/synthetic.hpp"
#include "siltlab/walks.hpp"

namespace siltlab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / double(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
  return r;
}

double ei_quadrature_oracle(double x) {
  if (!(x < 0.0)) fail(Err::domain_error, "quadrature oracle defined for x < 0");
  double z = -x;
  auto integrand = [](double u) { return std::exp(-u) / u; };
  double e1 = adaptive_simpson(integrand, z, z + 80.0, 1e-14 * std::exp(-z), 44);
  return -e1;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  c.raw = j;
  try {
    c.kind = j.at("kind").get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("replicas")) c.replicas = j["replicas"].get<int>();
    if (j.contains("m_min")) c.m_min = j["m_min"].get<int>();
    if (j.contains("m_max")) c.m_max = j["m_max"].get<int>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<double>();
    if (j.contains("n")) c.n = j["n"].get<int64_t>();
    if (j.contains("h_exp")) c.h_exp = j["h_exp"].get<int>();
    if (j.contains("parallelism")) c.parallelism = j["parallelism"].get<int>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("proxy_slack")) c.proxy_slack = j["proxy_slack"].get<double>();
    if (j.contains("memory_cap_mb")) c.memory_cap_mb = j["memory_cap_mb"].get<int64_t>();
    if (j.contains("points"))
      for (const auto& p : j["points"]) c.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (j.contains("ladder"))
      for (const auto& r : j["ladder"])
        c.ladder.push_back({r.at(0).get<double>(), r.at(1).get<int>()});
    if (j.contains("zero_ladder"))
      for (const auto& r : j["zero_ladder"]) c.zero_ladder.push_back(r.get<double>());
  } catch (const nlohmann::json::exception& e) {
    fail(Err::config_invalid, std::string("bad config: ") + e.what());
  }
  const char* kinds[] = {"verify-identities", "convergence",  "estimate-alpha",
                         "estimate-gamma",    "expectations", "occupation"};
  bool known = false;
  for (const char* k : kinds) known = known || c.kind == k;
  if (!known) fail(Err::config_invalid, "unknown kind '" + c.kind + "'");
  if (c.replicas < 1 || !(c.horizon > 0.0) || c.m_max < 0 || c.m_max > 14 || c.parallelism < 1)
    fail(Err::config_invalid, "replicas >= 1, horizon > 0, 0 <= m_max <= 14, parallelism >= 1");
  // Coarse memory guard for the walk/field allocations the run will make.
  double walk_mb = double(c.horizon * std::ldexp(1.0, 2 * c.m_max)) * c.proxy_slack * 8.0 / 1e6;
  if (walk_mb > double(c.memory_cap_mb))
    fail(Err::resource_exhausted, "level " + std::to_string(c.m_max) + " at horizon " +
                                      std::to_string(c.horizon) + " needs ~" +
                                      std::to_string(int64_t(walk_mb)) + " MB for walks");
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Err::io_error, "cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Err::config_invalid, std::string("config parse: ") + e.what());
  }
  return parse_config(j);
}

std::vector<LadderRung> default_ladder(Vec2 y, int m_max) {
  std::vector<LadderRung> out;
  for (int m = 5; m <= m_max; ++m) out.push_back({std::pow(2.0, -0.5 * double(m - 4)), m});
  if (out.empty()) out.push_back({std::max(0.5, 4.0 * std::ldexp(1.0, -m_max)), m_max});
  double ylen = y.norm();
  double d = out.back().delta;
  while (ylen > 0.0 && d > 0.7501 * ylen) {
    d *= 0.5;
    if (d < 4.0 * std::ldexp(1.0, -m_max))
      fail(Err::ladder_too_aggressive,
           "|y| = " + std::to_string(ylen) + " needs discs finer than level " +
               std::to_string(m_max) + " resolves");
    out.push_back({d, m_max});
  }
  return out;
}

namespace {

Metric gate(const std::string& suite, const std::string& name, double value, double bound,
            SuiteResult& s) {
  Metric m;
  m.suite = suite;
  m.metric = name;
  m.value = value;
  m.reference = bound;
  m.pass = value <= bound;
  if (!*m.pass) s.passed = false;
  s.metrics.push_back(m);
  return m;
}

// X(t, y): Riemann sum of log |W(t) - W(u) - y| on the walk mesh, with the
// rare exact lattice hits clamped to half a lattice spacing.
double x_integral(const PlanarWalk& proxy, double t, Vec2 y) {
  double h = proxy.space_unit();
  int64_t n = int64_t(std::floor(t / (h * h) + 1e-9));
  if (n > proxy.steps()) fail(Err::proxy_too_short, "x_integral horizon");
  double wx = double(proxy.x[size_t(n)]) * h, wy = double(proxy.y[size_t(n)]) * h;
  double clamp = 0.5 * h;
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double dx = wx - double(proxy.x[size_t(i)]) * h - y.x;
    double dy = wy - double(proxy.y[size_t(i)]) * h - y.y;
    double r = std::sqrt(dx * dx + dy * dy);
    sum += std::log(std::max(r, clamp));
  }
  return sum * h * h;
}

// ---------------------------------------------------------------------------

SuiteResult suite_verify(const ExperimentConfig& cfg) {
  SuiteResult s{"verify-identities", true, {}};
  int64_t n = cfg.n;
  int me = cfg.h_exp;
  double h = std::ldexp(1.0, -me);

  double worst_ito = 0.0, worst_strat = 0.0, worst_tm = 0.0, worst_regroup = 0.0;
  for (int i = 0; i < cfg.replicas; ++i) {
    uint64_t rs = derive_replica_seed(cfg.seed, uint64_t(i));
    PlanarWalk walk = direct_planar_walk(rs, me, n);
    int32_t half = 1;
    for (int64_t k = 0; k <= n; ++k) {
      half = std::max(half, std::abs(walk.x[size_t(k)]) + 1);
      half = std::max(half, std::abs(walk.y[size_t(k)]) + 1);
    }
    GridVectorField field =
        random_conservative_field(splitmix64(rs ^ 0x5157af3d11ULL), {0.0, 0.0}, h, half, 1.0);
    ItoDecomposition ito = discrete_ito(field, walk, n, ItoVariant::ito);
    ItoDecomposition strat = discrete_ito(field, walk, n, ItoVariant::stratonovich);
    ItoDecomposition tm = discrete_ito_tanaka_meyer(field, walk, n);
    worst_ito = std::max(worst_ito, std::abs(ito.residual) / ito.scale);
    worst_strat = std::max(worst_strat, std::abs(strat.residual) / strat.scale);
    worst_tm = std::max(worst_tm, std::abs(tm.residual) / tm.scale);
    worst_regroup = std::max(worst_regroup, std::abs(tm.correction - ito.correction) / ito.scale);
  }
  gate(s.name, "ito_residual_over_scale", worst_ito, 1e-10, s);
  gate(s.name, "stratonovich_residual_over_scale", worst_strat, 1e-10, s);
  gate(s.name, "tanaka_meyer_residual_over_scale", worst_tm, 1e-10, s);
  gate(s.name, "correction_regroup_over_scale", worst_regroup, 1e-12, s);

  // Tanaka–Rosen–Yor: exact mode closes; the quadratic-term regroupings agree.
  double worst_try = 0.0, worst_mu = 0.0, worst_center = 0.0;
  int try_seeds = std::min(cfg.replicas, 6);
  for (int i = 0; i < try_seeds; ++i) {
    uint64_t rs = derive_replica_seed(cfg.seed ^ 0x77aa11ULL, uint64_t(i));
    PlanarWalk walk = direct_planar_walk(rs, 5, 512);
    GridScalarSpec phi = make_trig_spec(rs ^ 0x1234, 3, 0.8, 1.0);
    TryDecomposition ex = discrete_try(phi, walk, {3, -2}, 512, TryMode::exact);
    worst_try = std::max(worst_try, std::abs(ex.residual) / ex.scale);
    TryDecomposition dr = discrete_try(phi, walk, {3, -2}, 300, TryMode::direct);
    worst_mu = std::max(worst_mu, std::abs(dr.quad_direct - dr.quad_mu_regroup) / dr.scale);
    worst_center =
        std::max(worst_center, std::abs(dr.term_laplace - dr.laplace_center) / dr.scale);
  }
  gate(s.name, "try_exact_residual_over_scale", worst_try, 1e-10, s);
  gate(s.name, "try_quad_mu_regroup_over_scale", worst_mu, 1e-10, s);
  gate(s.name, "try_laplace_regroup_over_scale", worst_center, 1e-10, s);

  // Counting identities at moderate scale.
  bool mass_ok = true, mu_ok = true, naive_ok = true, occ_ok = true;
  for (int i = 0; i < std::min(cfg.replicas, 5); ++i) {
    uint64_t rs = derive_replica_seed(cfg.seed ^ 0xbeefULL, uint64_t(i));
    PlanarWalk walk = direct_planar_walk(rs, 0, 2000);
    SiltField f = silt(walk, 2000);
    mass_ok = mass_ok && f.total_mass() == 2000LL * 2001 / 2;
    f.counts.for_each([&](uint64_t, const SiltValue& v) {
      mu_ok = mu_ok && (int64_t(v.mu[0]) + v.mu[1] + v.mu[2] + v.mu[3] == v.total);
    });
    SiltField fn = silt_naive(walk, 500);
    SiltField fi = silt(walk, 500);
    naive_ok = naive_ok && fn.counts.size() == fi.counts.size();
    fn.counts.for_each([&](uint64_t key, const SiltValue& v) {
      const SiltValue* w = fi.counts.find(key);
      naive_ok = naive_ok && w && w->total == v.total && w->mu == v.mu;
    });
    auto fl = [rs](GridPoint p) {
      return double(int32_t(splitmix64(pack_point(p.x, p.y) ^ rs) % 17)) - 8.0;
    };
    OccupationCheck oc = occupation_check(walk, double(1000), fl);
    occ_ok = occ_ok && oc.tables_equal && oc.lhs == oc.rhs_lattice;
  }
  gate(s.name, "silt_mass_identity_failures", mass_ok ? 0 : 1, 0, s);
  gate(s.name, "silt_mu_partition_failures", mu_ok ? 0 : 1, 0, s);
  gate(s.name, "silt_naive_mismatch", naive_ok ? 0 : 1, 0, s);
  gate(s.name, "occupation_identity_failures", occ_ok ? 0 : 1, 0, s);
  return s;
}

// ---------------------------------------------------------------------------

SuiteResult suite_expectations(const ExperimentConfig& cfg) {
  SuiteResult s{"expectations", true, {}};

  double worst_psi = 0.0;
  for (int k = 0; k < 50; ++k) {
    double u = 5.0 * double(k) / 49.0;
    double q = psi(u, PsiMode::quadrature);
    double c = psi(u, PsiMode::closed_form);
    worst_psi = std::max(worst_psi, std::abs(q - c));
    Metric m{"expectations", "psi_quadrature_minus_closed", std::nullopt, std::nullopt,
             std::nullopt,   std::nullopt,                  std::nullopt, u};
    m.value = q - c;
    m.reference = c;
    s.metrics.push_back(m);
  }
  gate(s.name, "psi_max_abs_diff", worst_psi, 1e-8, s);
  gate(s.name, "psi_displayed_values", std::abs(psi(1.0, PsiMode::closed_form) - 1.0) +
                                           std::abs(psi(2.0, PsiMode::closed_form) - 0.5),
       0.0, s);

  double worst_ei = 0.0;
  for (int k = 0; k < 16; ++k) {
    double x = -std::exp(std::log(0.01) + (std::log(50.0) - std::log(0.01)) * double(k) / 15.0);
    worst_ei = std::max(worst_ei, std::abs(exp_integral_neg(x) - ei_quadrature_oracle(x)));
  }
  gate(s.name, "ei_vs_quadrature", worst_ei, 1e-10, s);
  gate(s.name, "ei_decay_at_-50", std::abs(exp_integral_neg(-50.0)), 1e-20, s);

  double worst_dei = 0.0;
  for (int k = 0; k < 20; ++k) {
    double x = -0.01 - 9.99 * double(k) / 19.0;
    double e = 1e-5 * std::abs(x);
    double fd = (exp_integral_neg(x + e) - exp_integral_neg(x - e)) / (2.0 * e);
    double exact = std::exp(x) / x;
    worst_dei = std::max(worst_dei, std::abs(fd - exact) / std::abs(exact));
  }
  gate(s.name, "ei_derivative_fd_rel", worst_dei, 1e-6, s);

  double worst_prop = 0.0;
  uint64_t st = cfg.seed;
  for (int k = 0; k < 20; ++k) {
    st = splitmix64(st);
    double t = 0.1 + 2.9 * double(st >> 11) * 0x1.0p-53;
    st = splitmix64(st);
    double ay = -1.5 + 3.0 * double(st >> 11) * 0x1.0p-53;
    st = splitmix64(st);
    double by = -1.5 + 3.0 * double(st >> 11) * 0x1.0p-53;
    Vec2 y{ay, by};
    double ex = expected_x(t, y), eg = expected_gamma(t, y);
    worst_prop = std::max(worst_prop, std::abs(ex - kPi * eg) / std::max(1.0, std::abs(ex)));
  }
  gate(s.name, "ex_equals_pi_egamma", worst_prop, 1e-12, s);

  // The exact gap between the two branches at |y| = r is
  // (r^2/4pi)(2 + log 2t - C - 2 log r); at r = 1e-4, t = 1 that is 1.634e-8.
  // The gate checks the computed gap sits on the analytic value, i.e. the
  // branch switch introduces no numerical discontinuity of its own.
  double branch_gap = std::abs(expected_gamma(1.0, {1e-4, 0.0}) - expected_gamma(1.0, {0.0, 0.0}));
  double analytic_gap = 1e-8 / (4.0 * kPi) *
                        (2.0 + std::log(2.0) - kEulerGamma - 2.0 * std::log(1e-4));
  gate(s.name, "egamma_branch_gap_at_1e-4_vs_analytic", std::abs(branch_gap - analytic_gap), 1e-12,
       s);
  {
    Metric m{"expectations", "egamma_branch_gap_at_1e-4"};
    m.value = branch_gap;
    m.reference = analytic_gap;
    s.metrics.push_back(m);
  }
  {
    Metric m{"expectations", "egamma_t1_y0", std::nullopt, std::nullopt, 1.0,
             0.0,            0.0,            std::nullopt};
    m.value = expected_gamma(1.0, {0.0, 0.0});
    s.metrics.push_back(m);
  }

  double worst_nabla = 0.0;
  for (double delta : {0.3, 1.0}) {
    PhiDelta pd = phi_delta(delta);
    for (int k = 1; k <= 24; ++k) {
      double r = delta * 3.0 * double(k) / 24.0;
      double th = 2.0 * kPi * double(k) / 24.0;
      Vec2 x{r * std::cos(th), r * std::sin(th)};
      Vec2 a = nabla_phi_disc_average(x, delta);
      Vec2 b = pd.grad(x);
      worst_nabla = std::max(worst_nabla, (a - b).norm());
    }
  }
  gate(s.name, "nabla_phi_disc_average_vs_grad", worst_nabla, 1e-9, s);
  return s;
}

// ---------------------------------------------------------------------------

SuiteResult suite_convergence(const ExperimentConfig& cfg) {
  SuiteResult s{"convergence", true, {}};
  int M = cfg.m_max;
  double K = cfg.horizon;

  // Distance of embedded levels to the fine proxy; the per-level halving rate
  // of the sup distance should sit near 2^(-1/2).
  {
    int seeds = cfg.replicas;
    double slack = std::max(cfg.proxy_slack, 2.5);
    int64_t steps = int64_t(std::ceil(slack * K * std::ldexp(1.0, 2 * M))) + 64;
    auto dist = replica_map<std::vector<double>>(seeds, cfg.parallelism, [&](int i) {
      uint64_t rs = derive_replica_seed(cfg.seed, uint64_t(i));
      PlanarWalk fine = direct_planar_walk(rs, M, steps);
      std::vector<double> ds;
      for (int m = cfg.m_min; m <= M - 1; ++m) {
        int64_t need = int64_t(std::ceil(K * std::ldexp(1.0, 2 * m)));
        EmbeddingMap em = skorohod_embed(fine, m, need);
        ds.push_back(sup_distance(fine, em.embedded, K));
      }
      return ds;
    });
    // Per-level medians are reported; the gate is the median pooled over all
    // levels and seeds, which is stable at 20 seeds where per-level medians
    // wobble by +-0.15 around the 2^(-1/2) rate.
    std::vector<double> pooled;
    for (int m = cfg.m_min; m <= M - 2; ++m) {
      std::vector<double> dec;
      for (int i = 0; i < seeds; ++i) {
        size_t a = size_t(m - cfg.m_min);
        dec.push_back(std::log2(dist[size_t(i)][a] / dist[size_t(i)][a + 1]));
      }
      pooled.insert(pooled.end(), dec.begin(), dec.end());
      std::sort(dec.begin(), dec.end());
      Metric mm{"convergence", "sup_distance_log2_decrement", m, std::nullopt, K};
      mm.value = dec[dec.size() / 2];
      s.metrics.push_back(mm);
    }
    std::sort(pooled.begin(), pooled.end());
    double med = pooled.empty() ? 0.0 : pooled[pooled.size() / 2];
    Metric mm{"convergence", "sup_distance_log2_decrement_pooled_median", std::nullopt,
              std::nullopt, K};
    mm.value = med;
    mm.pass = med >= 0.3 && med <= 0.7;
    if (!*mm.pass) s.passed = false;
    s.metrics.push_back(mm);
  }

  // Direct-mode Tanaka–Rosen–Yor residual along the mesh ladder.
  {
    int seeds = std::min(cfg.replicas, 5);
    double t_try = 0.125;
    GridScalarSpec phi = make_gaussian_spec();
    int he_lo = 4, he_hi = std::min(8, M);
    std::vector<std::vector<double>> res(size_t(he_hi - he_lo + 1));
    for (int i = 0; i < seeds; ++i) {
      uint64_t rs = derive_replica_seed(cfg.seed ^ 0x1add1ULL, uint64_t(i));
      PlanarNestedFamily fam = build_nested_family(rs, he_hi, t_try * 1.01);
      for (int he = he_lo; he <= he_hi; ++he) {
        PlanarWalk walk = shrink_planar(fam, he);
        int64_t nh = int64_t(std::floor(t_try * std::ldexp(1.0, 2 * he) + 0.5));
        GridPoint y{int32_t(std::lround(0.25 * std::ldexp(1.0, he))),
                    int32_t(std::lround(0.25 * std::ldexp(1.0, he)))};
        TryDecomposition d = discrete_try(phi, walk, y, nh, TryMode::direct);
        res[size_t(he - he_lo)].push_back(std::abs(d.residual));
      }
    }
    std::vector<double> med;
    for (size_t k = 0; k < res.size(); ++k) {
      std::sort(res[k].begin(), res[k].end());
      med.push_back(res[k][res[k].size() / 2]);
      Metric mm{"convergence", "try_direct_residual_median", he_lo + int(k), std::nullopt, t_try};
      mm.value = med.back();
      s.metrics.push_back(mm);
    }
    for (size_t k = 0; k + 1 < med.size(); ++k) {
      Metric mm{"convergence", "try_direct_residual_ratio", he_lo + int(k), std::nullopt, t_try};
      mm.value = med[k] / med[k + 1];
      mm.pass = mm.value >= 1.5;
      if (!*mm.pass) s.passed = false;
      s.metrics.push_back(mm);
    }
  }

  // Mollified identity residual along the level ladder at fixed delta
  // (monitored with factor-2 slack between rungs, net decrease required).
  {
    int seeds = std::min(cfg.replicas, 3);
    int top = std::min(M, 8);
    double slack = cfg.proxy_slack;
    double t = std::min(0.5, K);
    Vec2 y{0.25, 0.0};
    double delta = 0.5;
    std::vector<std::vector<double>> res(size_t(top - 5 + 1));
    for (int i = 0; i < seeds; ++i) {
      uint64_t rs = derive_replica_seed(cfg.seed ^ 0x5e77aULL, uint64_t(i));
      int64_t steps = int64_t(std::ceil(slack * t * std::ldexp(1.0, 2 * top))) + 64;
      PlanarWalk proxy = direct_planar_walk(rs, top, steps);
      for (int m = 5; m <= top; ++m)
        res[size_t(m - 5)].push_back(std::abs(spec_try_terms(proxy, t, y, delta, m).residual));
    }
    std::vector<double> med;
    for (size_t k = 0; k < res.size(); ++k) {
      std::sort(res[k].begin(), res[k].end());
      med.push_back(res[k][res[k].size() / 2]);
      Metric mm{"convergence", "mollified_identity_residual_median", 5 + int(k), std::nullopt, t};
      mm.delta = delta;
      mm.value = med.back();
      s.metrics.push_back(mm);
    }
    bool ok = med.size() < 2 || med.back() <= med.front();
    for (size_t k = 0; k + 1 < med.size(); ++k) ok = ok && med[k + 1] <= 2.0 * med[k];
    gate(s.name, "mollified_identity_residual_monotone_slack2", ok ? 0 : 1, 0, s);
  }

  // Cauchy behaviour of the stochastic sums along levels (shared proxy).
  {
    int seeds = std::min(cfg.replicas, 5);
    int top = std::min(M, 8);
    double t1 = std::min(1.0, K);
    GridScalarSpec g = make_trig_spec(cfg.seed ^ 0xcafeULL, 3, 0.7, 1.0);
    std::vector<std::vector<double>> gaps(size_t(std::max(0, top - 2 - cfg.m_min + 1)));
    for (int i = 0; i < seeds; ++i) {
      uint64_t rs = derive_replica_seed(cfg.seed ^ 0x57c0ffeeULL, uint64_t(i));
      int64_t steps = int64_t(std::ceil(2.5 * t1 * std::ldexp(1.0, 2 * top))) + 64;
      PlanarWalk fine = direct_planar_walk(rs, top, steps);
      // Running stochastic sums per level at that level's mesh times.
      std::vector<std::vector<double>> sums;
      std::vector<int> levels;
      for (int m = cfg.m_min; m <= top; ++m) {
        int64_t nm = int64_t(std::ceil(t1 * std::ldexp(1.0, 2 * m)));
        PlanarWalk wm = (m == top && fine.steps() >= nm) ? fine : skorohod_embed(fine, m, nm).embedded;
        double h = std::ldexp(1.0, -m);
        int32_t half = 1;
        for (int64_t k = 0; k <= nm; ++k) {
          half = std::max(half, std::abs(wm.x[size_t(k)]) + 1);
          half = std::max(half, std::abs(wm.y[size_t(k)]) + 1);
        }
        GridVectorField fm = conservative_modify(g, {0.0, 0.0}, h, double(half) * h);
        std::vector<double> running(size_t(nm) + 1, 0.0);
        double acc = 0.0;
        for (int64_t r = 1; r <= nm; ++r) {
          GridPoint prev = wm.at(r - 1), next = wm.at(r);
          acc += h * (fm.at(1, prev.x, prev.y) * double(next.x - prev.x) +
                      fm.at(2, next.x, prev.y) * double(next.y - prev.y));
          running[size_t(r)] = acc;
        }
        sums.push_back(std::move(running));
        levels.push_back(m);
      }
      for (size_t a = 0; a + 2 < sums.size(); ++a) {
        int m = levels[a];
        int64_t na = int64_t(sums[a].size()) - 1;
        int64_t ratio = int64_t(1) << (2 * (levels[a + 2] - m));
        double gap = 0.0;
        for (int64_t r = 0; r <= na; ++r)
          gap = std::max(gap, std::abs(sums[a][size_t(r)] - sums[a + 2][size_t(r * ratio)]));
        gaps[a].push_back(gap);
      }
    }
    std::vector<double> med;
    for (size_t a = 0; a < gaps.size(); ++a) {
      if (gaps[a].empty()) continue;
      std::sort(gaps[a].begin(), gaps[a].end());
      med.push_back(gaps[a][gaps[a].size() / 2]);
      Metric mm{"convergence", "stochastic_sum_cauchy_gap", cfg.m_min + int(a), std::nullopt, t1};
      mm.value = med.back();
      s.metrics.push_back(mm);
    }
    bool ok = med.size() < 2 || med.back() <= med.front();
    for (size_t k = 0; k + 1 < med.size(); ++k) ok = ok && med[k + 1] <= 2.0 * med[k];
    gate(s.name, "stochastic_sum_cauchy_monotone_slack2", ok ? 0 : 1, 0, s);
  }

  // Zero-mean of the stochastic terms over replicas.
  {
    int N = cfg.replicas;
    GridScalarSpec g = make_trig_spec(cfg.seed ^ 0xfeedULL, 3, 0.7, 1.0);
    auto sums = replica_map<double>(N, cfg.parallelism, [&](int i) {
      uint64_t rs = derive_replica_seed(cfg.seed ^ 0x0feaab42ULL, uint64_t(i));
      int m = 6;
      int64_t nm = int64_t(std::ceil(std::min(1.0, K) * 4096.0));
      PlanarWalk w = direct_planar_walk(rs, m, nm);
      int32_t half = 1;
      for (int64_t k = 0; k <= nm; ++k) {
        half = std::max(half, std::abs(w.x[size_t(k)]) + 1);
        half = std::max(half, std::abs(w.y[size_t(k)]) + 1);
      }
      GridVectorField fm =
          conservative_modify(g, {0.0, 0.0}, std::ldexp(1.0, -m), double(half) * std::ldexp(1.0, -m));
      return stochastic_sum(fm, w, std::min(1.0, K));
    });
    MeanSe ms = mean_se(sums);
    Metric mm{"convergence", "stochastic_sum_replica_mean", 6, std::nullopt, std::min(1.0, K)};
    mm.value = ms.mean;
    mm.se = ms.se;
    mm.pass = std::abs(ms.mean) <= 3.0 * ms.se;
    if (!*mm.pass) s.passed = false;
    s.metrics.push_back(mm);

    auto tsums = replica_map<double>(N, cfg.parallelism, [&](int i) {
      uint64_t rs = derive_replica_seed(cfg.seed ^ 0x7a9b5c31ULL, uint64_t(i));
      PlanarWalk proxy = direct_planar_walk(rs, 5, 1024);
      return spec_try_terms(proxy, 1.0, {0.25, 0.0}, 0.5, 5).stochastic;
    });
    MeanSe ts = mean_se(tsums);
    Metric tmm{"convergence", "mollified_stochastic_replica_mean", 5, std::nullopt, 1.0};
    tmm.value = ts.mean;
    tmm.se = ts.se;
    tmm.pass = std::abs(ts.mean) <= 3.0 * ts.se;
    if (!*tmm.pass) s.passed = false;
    s.metrics.push_back(tmm);
  }
  return s;
}

// ---------------------------------------------------------------------------

void suite_estimate(const ExperimentConfig& cfg, bool want_gamma, RunReport& report) {
  SuiteResult s{want_gamma ? "estimate-gamma" : "estimate-alpha", true, {}};
  int M = cfg.m_max;
  double t = cfg.horizon;
  int64_t steps = int64_t(std::ceil(cfg.proxy_slack * t * std::ldexp(1.0, 2 * M))) + 64;

  std::vector<Vec2> points = cfg.points;
  if (points.empty()) points = {{0.5, 0.0}, {0.25, 0.0}, {0.1, 0.0}};
  std::vector<std::vector<LadderRung>> ladders;
  for (Vec2 y : points) ladders.push_back(cfg.ladder.empty() ? default_ladder(y, M) : cfg.ladder);
  std::vector<Vec2> zero_points;
  for (double r : cfg.zero_ladder) zero_points.push_back({r, 0.0});
  std::vector<std::vector<LadderRung>> zero_ladders;
  for (Vec2 y : zero_points) zero_ladders.push_back(default_ladder(y, M));

  struct Rep {
    std::vector<std::vector<double>> rungs;      // per point, per rung
    std::vector<double> alpha, gamma, xint;      // per point
    std::vector<double> zero_gamma;              // per zero-ladder point
  };
  auto reps = replica_map<Rep>(cfg.replicas, cfg.parallelism, [&](int i) {
    Rep r;
    uint64_t rs = derive_replica_seed(cfg.seed, uint64_t(i));
    PlanarWalk proxy = direct_planar_walk(rs, M, steps);
    for (size_t p = 0; p < points.size(); ++p) {
      std::vector<std::pair<double, int>> lad;
      for (const LadderRung& rr : ladders[p]) lad.push_back({rr.delta, rr.m});
      AlphaLadder al = alpha_estimate(proxy, t, points[p], lad);
      std::vector<double> vals;
      for (const RungEstimate& re : al.rungs) vals.push_back(re.value);
      r.rungs.push_back(vals);
      r.alpha.push_back(al.alpha_hat);
      r.gamma.push_back(gamma_from_alpha(al.alpha_hat, t, points[p]));
      r.xint.push_back(x_integral(proxy, t, points[p]));
    }
    for (size_t p = 0; p < zero_points.size(); ++p) {
      std::vector<std::pair<double, int>> lad;
      for (const LadderRung& rr : zero_ladders[p]) lad.push_back({rr.delta, rr.m});
      AlphaLadder al = alpha_estimate(proxy, t, zero_points[p], lad);
      r.zero_gamma.push_back(gamma_from_alpha(al.alpha_hat, t, zero_points[p]));
    }
    return r;
  });

  for (size_t p = 0; p < points.size(); ++p) {
    Vec2 y = points[p];
    EstimateReport er;
    er.quantity = want_gamma ? "gamma" : "alpha";
    er.t = t;
    er.y = y;
    er.replicas = cfg.replicas;
    for (size_t k = 0; k < ladders[p].size(); ++k) {
      std::vector<double> vals;
      for (const Rep& r : reps) vals.push_back(r.rungs[p][k]);
      MeanSe ms = mean_se(vals);
      er.ladder.push_back({ladders[p][k].delta, ladders[p][k].m, ms.mean, ms.se});
    }
    std::vector<double> alphas, gammas, xs;
    for (const Rep& r : reps) {
      alphas.push_back(r.alpha[p]);
      gammas.push_back(r.gamma[p]);
      xs.push_back(r.xint[p]);
    }
    MeanSe ma = mean_se(alphas), mg = mean_se(gammas), mx = mean_se(xs);
    er.mean = want_gamma ? mg.mean : ma.mean;
    er.se = want_gamma ? mg.se : ma.se;
    er.gamma = mg.mean;
    er.gamma_se = mg.se;
    double ref_gamma = expected_gamma(t, y);
    double ref_alpha = ref_gamma - t / kPi * std::log(y.norm());
    er.closed_form_reference = want_gamma ? ref_gamma : ref_alpha;
    report.estimates.push_back(er);

    if (want_gamma) {
      Metric m{"estimate-gamma", "gamma_mean_vs_closed_form", M, std::nullopt, t, y.x, y.y};
      m.value = mg.mean;
      m.se = mg.se;
      m.reference = ref_gamma;
      m.pass = std::abs(mg.mean - ref_gamma) <= 3.0 * mg.se;
      if (!*m.pass) s.passed = false;
      s.metrics.push_back(m);
    } else {
      Metric m{"estimate-alpha", "alpha_mean_vs_closed_form", M, std::nullopt, t, y.x, y.y};
      m.value = ma.mean;
      m.se = ma.se;
      m.reference = ref_alpha;
      m.pass = std::abs(ma.mean - ref_alpha) <= 3.0 * ma.se;
      if (!*m.pass) s.passed = false;
      s.metrics.push_back(m);
    }
    Metric mxm{"estimate", "x_integral_mean_vs_closed_form", M, std::nullopt, t, y.x, y.y};
    mxm.value = mx.mean;
    mxm.se = mx.se;
    mxm.reference = expected_x(t, y);
    mxm.pass = std::abs(mx.mean - expected_x(t, y)) <= 3.0 * mx.se;
    if (!*mxm.pass) s.passed = false;
    s.metrics.push_back(mxm);

    EstimateReport ex;
    ex.quantity = "x_integral";
    ex.t = t;
    ex.y = y;
    ex.replicas = cfg.replicas;
    ex.mean = mx.mean;
    ex.se = mx.se;
    ex.closed_form_reference = expected_x(t, y);
    report.estimates.push_back(ex);
  }

  if (want_gamma && !zero_points.empty()) {
    double ref0 = expected_gamma(t, {0.0, 0.0});
    double last_mean = 0.0, last_se = 0.0;
    for (size_t p = 0; p < zero_points.size(); ++p) {
      std::vector<double> vals;
      for (const Rep& r : reps) vals.push_back(r.zero_gamma[p]);
      MeanSe ms = mean_se(vals);
      Metric m{"estimate-gamma", "gamma_zero_trend", M, std::nullopt, t, zero_points[p].x,
               zero_points[p].y};
      m.value = ms.mean;
      m.se = ms.se;
      m.reference = expected_gamma(t, zero_points[p]);
      s.metrics.push_back(m);
      last_mean = ms.mean;
      last_se = ms.se;
    }
    Metric m{"estimate-gamma", "gamma_zero_limit_estimate", M, std::nullopt, t, 0.0, 0.0};
    m.value = last_mean;
    m.se = last_se;
    m.reference = ref0;
    m.pass = std::abs(last_mean - ref0) <= 3.0 * last_se;
    if (!*m.pass) s.passed = false;
    s.metrics.push_back(m);
  }
  report.suites.push_back(s);
}

// ---------------------------------------------------------------------------

SuiteResult suite_occupation(const ExperimentConfig& cfg) {
  SuiteResult s{"occupation", true, {}};
  int seeds = std::min(cfg.replicas, 10);
  int m = std::min(cfg.m_max, 6);
  double h = std::ldexp(1.0, -m);
  double t = std::min(cfg.horizon, 1.0);
  int64_t n = int64_t(std::llround(t / (h * h)));

  bool exact_ok = true;
  double worst_mass = 0.0;
  for (int i = 0; i < seeds; ++i) {
    uint64_t rs = derive_replica_seed(cfg.seed, uint64_t(i));
    PlanarWalk w = direct_planar_walk(rs, m, n);
    for (int fidx = 0; fidx < 3; ++fidx) {
      uint64_t fs = splitmix64(rs + uint64_t(fidx));
      auto f = [fs](GridPoint p) {
        return double(int32_t(splitmix64(pack_point(p.x, p.y) ^ fs) % 21)) - 10.0;
      };
      OccupationCheck oc = occupation_check(w, t, f);
      exact_ok = exact_ok && oc.tables_equal && oc.lhs == oc.rhs_lattice;
    }
    auto ones = [](GridPoint) { return 1.0; };
    OccupationCheck mass = occupation_check(w, t, ones);
    double expect = std::ldexp(1.0, -4 * m) * double(n) * double(n + 1) / 2.0;
    worst_mass = std::max(worst_mass, std::abs(mass.lhs - expect));
    exact_ok = exact_ok && mass.tables_equal && mass.lhs == mass.rhs_lattice;
  }
  gate(s.name, "occupation_exact_failures", exact_ok ? 0 : 1, 0, s);
  gate(s.name, "occupation_mass_abs_err", worst_mass, 1e-12, s);

  // Growth order of sup_x alpha_m: monitored against a generous m^2 gate.
  {
    double worst_ratio = 0.0;
    for (int lv = 3; lv <= std::min(cfg.m_max, 7); ++lv) {
      int64_t nl = int64_t(1) << (2 * lv);
      double hl = std::ldexp(1.0, -lv);
      double sup = 0.0;
      for (int i = 0; i < std::min(seeds, 3); ++i) {
        PlanarWalk wl = direct_planar_walk(derive_replica_seed(cfg.seed ^ 0x9d2ULL, uint64_t(i * 16 + lv)),
                                           lv, nl);
        sup = std::max(sup, double(silt_sup(wl, nl).sup_total) * hl * hl);
      }
      Metric mm{"occupation", "sup_alpha_over_m2", lv, nl, 1.0};
      mm.value = sup / (double(lv) * double(lv));
      s.metrics.push_back(mm);
      worst_ratio = std::max(worst_ratio, mm.value);
    }
    gate(s.name, "sup_alpha_growth_monitor", worst_ratio, 1.0, s);
  }

  // Weak-convergence probe: sum_x alpha_m lap(phi_delta) 2^-2m along levels
  // against the top available level.
  {
    PhiDelta pd = phi_delta(0.5);
    int top = std::min(cfg.m_max, 7);
    uint64_t rs = derive_replica_seed(cfg.seed ^ 0xa0b1c2d3ULL, 0);
    double slack = cfg.proxy_slack;
    int64_t fsteps = int64_t(std::ceil(slack * t * std::ldexp(1.0, 2 * top))) + 64;
    PlanarWalk fine = direct_planar_walk(rs, top, fsteps);
    Vec2 y{0.25, 0.0};
    auto level_value = [&](int lv) {
      int64_t nl = int64_t(std::llround(t * std::ldexp(1.0, 2 * lv)));
      PlanarWalk wl = lv == top ? fine : skorohod_embed(fine, lv, nl).embedded;
      SiltField f = silt(wl, nl);
      double hl = std::ldexp(1.0, -lv);
      double acc = 0.0;
      f.counts.for_each([&](uint64_t key, const SiltValue& v) {
        GridPoint p = unpack_point(key);
        acc += double(v.total) * pd.lap(Vec2{double(p.x) * hl - y.x, double(p.y) * hl - y.y});
      });
      return acc * hl * hl * hl * hl;
    };
    double ref = level_value(top);
    std::vector<double> gaps;
    for (int lv = 4; lv < top; ++lv) {
      double gap = std::abs(level_value(lv) - ref);
      gaps.push_back(gap);
      Metric mm{"occupation", "alpha_laplacian_gap_to_top", lv, std::nullopt, t, y.x, y.y, 0.5};
      mm.value = gap;
      s.metrics.push_back(mm);
    }
    bool ok = gaps.size() < 2 || gaps.back() <= gaps.front();
    gate(s.name, "alpha_laplacian_gap_net_decrease", ok ? 0 : 1, 0, s);
  }
  return s;
}

}  // namespace

RunReport run(const ExperimentConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config_echo = cfg.raw.is_null() ? nlohmann::json{{"kind", cfg.kind}} : cfg.raw;

  if (cfg.kind == "verify-identities") {
    report.suites.push_back(suite_verify(cfg));
  } else if (cfg.kind == "expectations") {
    report.suites.push_back(suite_expectations(cfg));
  } else if (cfg.kind == "convergence") {
    report.suites.push_back(suite_convergence(cfg));
  } else if (cfg.kind == "estimate-alpha") {
    suite_estimate(cfg, false, report);
  } else if (cfg.kind == "estimate-gamma") {
    suite_estimate(cfg, true, report);
  } else if (cfg.kind == "occupation") {
    report.suites.push_back(suite_occupation(cfg));
  } else {
    fail(Err::config_invalid, "unknown kind " + cfg.kind);
  }

  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void emit(const RunReport& report, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(Err::io_error, "cannot create " + out_dir);
  emit_json(report, out_dir + "/report.json");
  emit_csv(report, out_dir + "/report.csv");
}

}  // namespace siltlab
