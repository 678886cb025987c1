#pragma once

#include <atomic>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "siltlab/geometry.hpp"
#include "siltlab/report.hpp"

namespace siltlab {

struct LadderRung {
  double delta = 0.0;
  int m = 0;
};

struct ExperimentConfig {
  std::string kind;  // verify-identities | convergence | estimate-alpha |
                     // estimate-gamma | expectations | occupation
  uint64_t seed = 20240801;
  int replicas = 20;
  int m_min = 3;
  int m_max = 8;
  double horizon = 1.0;
  std::vector<Vec2> points;
  std::vector<LadderRung> ladder;   // explicit rungs; empty = per-point default
  std::vector<double> zero_ladder;  // |y_k| sequence for the y -> 0 trend
  int64_t n = 4096;                 // identity-suite walk horizon
  int h_exp = 6;                    // identity-suite mesh exponent
  int parallelism = 1;
  std::string out_dir = "out";
  double proxy_slack = 2.0;
  int64_t memory_cap_mb = 4096;
  nlohmann::json raw;  // verbatim echo into every artifact
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// Default (delta, m) ladder for target y: diagonal coupling delta =
// 2^{-(m-4)/2} for m = 5..m_max, then extra top-level rungs with delta halved
// until the disc stays clear of the origin (delta <= 0.75 |y|).
std::vector<LadderRung> default_ladder(Vec2 y, int m_max);

RunReport run(const ExperimentConfig& cfg);

// Writes report.json and report.csv into out_dir (created if missing).
void emit(const RunReport& report, const std::string& out_dir);

// Independent quadrature route for Ei (integral definition of E1).
double ei_quadrature_oracle(double x);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_se(const std::vector<double>& xs);

// results[i] = fn(i) on `parallelism` threads; identical output for any
// thread count since replica i depends only on its index.
template <class T, class Fn>
std::vector<T> replica_map(int n, int parallelism, Fn&& fn) {
  std::vector<T> out(size_t(std::max(0, n)));
  if (parallelism <= 1) {
    for (int i = 0; i < n; ++i) out[size_t(i)] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    try {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        if (failed.load()) return;
        out[size_t(i)] = fn(i);
      }
    } catch (...) {
      std::scoped_lock lk(err_mutex);
      if (!first_error) first_error = std::current_exception();
      failed.store(true);
    }
  };
  std::vector<std::thread> pool;
  for (int p = 0; p < parallelism; ++p) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace siltlab
