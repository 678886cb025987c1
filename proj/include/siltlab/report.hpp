#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "siltlab/geometry.hpp"

namespace siltlab {

// One row of the long-format CSV: suite,metric,m,n,t,y1,y2,delta,value,se,reference.
struct Metric {
  std::string suite;
  std::string metric;
  std::optional<int> m;
  std::optional<int64_t> n;
  std::optional<double> t, y1, y2, delta;
  double value = 0.0;
  std::optional<double> se, reference;
  std::optional<bool> pass;  // present only for gated metrics
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::vector<Metric> metrics;
};

struct EstimateRung {
  double delta = 0.0;
  int m = 0;
  double value = 0.0;  // replica mean
  double se = 0.0;
};

struct EstimateReport {
  std::string quantity;  // alpha | gamma | x_integral
  double t = 0.0;
  Vec2 y{};
  std::vector<EstimateRung> ladder;
  int replicas = 0;
  double mean = 0.0;
  double se = 0.0;
  double gamma = 0.0;
  double gamma_se = 0.0;
  std::optional<double> closed_form_reference;
};

struct RunReport {
  nlohmann::json config_echo;
  std::vector<SuiteResult> suites;
  std::vector<EstimateReport> estimates;
  double wall_ms = 0.0;  // excluded from determinism comparisons

  bool passed() const;
};

// Full nested report; wall-clock metadata included only when include_meta.
nlohmann::json report_to_json(const RunReport& report, bool include_meta = true);

void emit_json(const RunReport& report, const std::string& path);
void emit_csv(const RunReport& report, const std::string& path);

// Decomposition report: {variant, m, n, terms: {...}, residual, scale}.
struct ItoDecomposition;
struct TryDecomposition;
nlohmann::json decomposition_to_json(const ItoDecomposition& d);
nlohmann::json decomposition_to_json(const TryDecomposition& d);

}  // namespace siltlab
