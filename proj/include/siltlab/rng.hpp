#pragma once

#include <cstdint>

namespace siltlab {

// SplitMix64 finalizer; the mixing primitive behind every stream here.
uint64_t splitmix64(uint64_t x);

// Infinite matrix of i.i.d. +-1 signs, addressed by (row m >= 0, step k >= 1).
// Counter-based: the sign at (m, k) is one bit of a keyed 64-bit word, so any
// entry can be read without generating its predecessors and rows never share
// generator state. Same (seed, m, k) always yields the same sign.
class CoinMatrix {
 public:
  explicit CoinMatrix(uint64_t base_seed) : base_seed_(base_seed) {}

  uint64_t base_seed() const { return base_seed_; }

  // 64 consecutive signs of row m, steps [64*block+1, 64*block+64].
  uint64_t word(int64_t m, int64_t block) const;

  // Sign in {-1,+1} at row m >= 0, step k >= 1.
  int sign_at(int64_t m, int64_t k) const {
    uint64_t w = word(m, (k - 1) >> 6);
    return ((w >> ((k - 1) & 63)) & 1) ? +1 : -1;
  }

 private:
  uint64_t base_seed_;
};

// Seed for Monte Carlo replica `replica`, derived from the experiment seed by
// a fixed avalanche chain. Injective in practice; reproducible everywhere.
uint64_t derive_replica_seed(uint64_t base_seed, uint64_t replica);

// Sub-seed for one coordinate of a planar construction (coord 0 or 1).
uint64_t derive_coordinate_seed(uint64_t seed, int coord);

// Sequential reader over one row of a CoinMatrix; caches the current word.
class CoinRow {
 public:
  CoinRow(const CoinMatrix& coins, int64_t m) : coins_(&coins), m_(m) {}

  // Next sign of the row, starting from step 1.
  int next() {
    if ((k_ & 63) == 0) word_ = coins_->word(m_, k_ >> 6);
    int s = ((word_ >> (k_ & 63)) & 1) ? +1 : -1;
    ++k_;
    return s;
  }

  int64_t consumed() const { return k_; }

 private:
  const CoinMatrix* coins_;
  int64_t m_;
  int64_t k_ = 0;  // zero-based count of signs already produced
  uint64_t word_ = 0;
};

}  // namespace siltlab
