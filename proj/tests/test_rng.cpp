#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "siltlab/rng.hpp"

using namespace siltlab;

TEST_CASE("signs are deterministic and in {-1,+1}") {
  CoinMatrix c(7);
  CHECK(c.sign_at(0, 1) == c.sign_at(0, 1));
  for (int64_t m = 0; m < 4; ++m)
    for (int64_t k = 1; k <= 1000; ++k) {
      int s = c.sign_at(m, k);
      CHECK((s == 1 || s == -1));
    }
  CoinMatrix c2(7);
  for (int64_t k = 1; k <= 200; ++k) CHECK(c.sign_at(3, k) == c2.sign_at(3, k));
}

TEST_CASE("law of large numbers: row mean near zero") {
  CoinMatrix c(20260808);
  for (int64_t m : {0, 5}) {
    int64_t sum = 0;
    for (int64_t k = 1; k <= 1000000; ++k) sum += c.sign_at(m, k);
    CHECK(std::abs(double(sum) / 1e6) < 0.005);
  }
}

TEST_CASE("row reader matches random access") {
  CoinMatrix c(99);
  CoinRow row(c, 4);
  for (int64_t k = 1; k <= 500; ++k) CHECK(row.next() == c.sign_at(4, k));
}

TEST_CASE("cross-row correlation is small") {
  CoinMatrix c(11);
  const int64_t n = 100000;
  for (auto [a, b] : {std::pair<int64_t, int64_t>{0, 1}, {2, 7}, {3, 4}}) {
    int64_t dot = 0;
    for (int64_t k = 1; k <= n; ++k) dot += c.sign_at(a, k) * c.sign_at(b, k);
    CHECK(std::abs(double(dot) / double(n)) < 0.01);
  }
}

TEST_CASE("replica seeds: distinct, deterministic, collision-free") {
  CHECK(derive_replica_seed(123, 0) != derive_replica_seed(123, 1));
  CHECK(derive_replica_seed(55, 9) == derive_replica_seed(55, 9));
  std::set<uint64_t> seen;
  for (uint64_t r = 0; r < 10000; ++r) seen.insert(derive_replica_seed(987654321, r));
  CHECK(seen.size() == 10000);
}

TEST_CASE("coordinate seeds differ from each other and the base") {
  uint64_t s = 424242;
  CHECK(derive_coordinate_seed(s, 0) != derive_coordinate_seed(s, 1));
  CHECK(derive_coordinate_seed(s, 0) != s);
}
