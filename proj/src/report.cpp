#include "siltlab/report.hpp"

#include <cstdio>
#include <fstream>

#include "siltlab/errors.hpp"
#include "siltlab/formulas.hpp"

namespace siltlab {

bool RunReport::passed() const {
  for (const SuiteResult& s : suites)
    if (!s.passed) return false;
  return true;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json metric_to_json(const Metric& m) {
  nlohmann::json j{{"suite", m.suite}, {"metric", m.metric}, {"value", m.value}};
  if (m.m) j["m"] = *m.m;
  if (m.n) j["n"] = *m.n;
  if (m.t) j["t"] = *m.t;
  if (m.y1) j["y1"] = *m.y1;
  if (m.y2) j["y2"] = *m.y2;
  if (m.delta) j["delta"] = *m.delta;
  if (m.se) j["se"] = *m.se;
  if (m.reference) j["reference"] = *m.reference;
  if (m.pass) j["pass"] = *m.pass;
  return j;
}

nlohmann::json estimate_to_json(const EstimateReport& e) {
  nlohmann::json ladder = nlohmann::json::array();
  for (const EstimateRung& r : e.ladder)
    ladder.push_back({{"delta", r.delta}, {"m", r.m}, {"value", r.value}, {"se", r.se}});
  nlohmann::json j{{"quantity", e.quantity},
                   {"t", e.t},
                   {"y", {e.y.x, e.y.y}},
                   {"ladder", ladder},
                   {"replicas", e.replicas},
                   {"mean", e.mean},
                   {"se", e.se},
                   {"gamma", e.gamma},
                   {"gamma_se", e.gamma_se}};
  if (e.closed_form_reference) j["closed_form_reference"] = *e.closed_form_reference;
  return j;
}

}  // namespace

nlohmann::json report_to_json(const RunReport& report, bool include_meta) {
  nlohmann::json suites = nlohmann::json::array();
  for (const SuiteResult& s : report.suites) {
    nlohmann::json metrics = nlohmann::json::array();
    for (const Metric& m : s.metrics) metrics.push_back(metric_to_json(m));
    suites.push_back({{"name", s.name}, {"passed", s.passed}, {"metrics", metrics}});
  }
  nlohmann::json estimates = nlohmann::json::array();
  for (const EstimateReport& e : report.estimates) estimates.push_back(estimate_to_json(e));
  nlohmann::json j{{"config", report.config_echo},
                   {"suites", suites},
                   {"estimates", estimates},
                   {"passed", report.passed()}};
  if (include_meta) j["meta"] = {{"wall_ms", report.wall_ms}};
  return j;
}

void emit_json(const RunReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Err::io_error, "cannot open " + path);
  os << report_to_json(report).dump(2) << '\n';
}

void emit_csv(const RunReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Err::io_error, "cannot open " + path);
  os << "suite,metric,m,n,t,y1,y2,delta,value,se,reference\n";
  auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : ""; };
  auto opt_i64 = [](const std::optional<int64_t>& v) { return v ? std::to_string(*v) : ""; };
  auto opt_d = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  auto row = [&](const Metric& m) {
    os << m.suite << ',' << m.metric << ',' << opt_int(m.m) << ',' << opt_i64(m.n) << ','
       << opt_d(m.t) << ',' << opt_d(m.y1) << ',' << opt_d(m.y2) << ',' << opt_d(m.delta) << ','
       << fmt(m.value) << ',' << opt_d(m.se) << ',' << opt_d(m.reference) << '\n';
  };
  for (const SuiteResult& s : report.suites)
    for (const Metric& m : s.metrics) row(m);
  for (const EstimateReport& e : report.estimates) {
    for (const EstimateRung& r : e.ladder) {
      Metric m{"estimate", e.quantity + "_rung", r.m, std::nullopt, e.t,
               e.y.x,      e.y.y,               r.delta};
      m.value = r.value;
      m.se = r.se;
      row(m);
    }
    Metric m{"estimate", e.quantity, std::nullopt, std::nullopt, e.t, e.y.x, e.y.y, std::nullopt};
    m.value = e.mean;
    m.se = e.se;
    m.reference = e.closed_form_reference;
    row(m);
  }
}

nlohmann::json decomposition_to_json(const ItoDecomposition& d) {
  return {{"variant", d.variant == ItoVariant::ito ? "ito" : "stratonovich"},
          {"m", d.level},
          {"n", d.horizon},
          {"terms",
           {{"lhs", d.lhs},
            {"time_term", d.time_term},
            {"stochastic_sum", d.stochastic_sum},
            {"correction", d.correction}}},
          {"residual", d.residual},
          {"scale", d.scale}};
}

nlohmann::json decomposition_to_json(const TryDecomposition& d) {
  return {{"variant", d.mode == TryMode::exact ? "try_exact" : "try_direct"},
          {"m", d.level},
          {"n", d.horizon},
          {"y", {d.y.x, d.y.y}},
          {"terms",
           {{"lhs", d.lhs},
            {"term_path", d.term_path},
            {"term_stochastic", d.term_stochastic},
            {"term_laplace", d.term_laplace},
            {"quad_direct", d.quad_direct},
            {"quad_mu_regroup", d.quad_mu_regroup},
            {"laplace_center", d.laplace_center}}},
          {"residual", d.residual},
          {"scale", d.scale}};
}

}  // namespace siltlab
