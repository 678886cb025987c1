#include "siltlab/rng.hpp"

namespace siltlab {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t CoinMatrix::word(int64_t m, int64_t block) const {
  // Three avalanche rounds keyed by (seed, row, block). One word feeds 64
  // steps; adjacent blocks and rows come from unrelated keys.
  uint64_t h = splitmix64(base_seed_);
  h = splitmix64(h ^ (uint64_t(m) * 0xA24BAED4963EE407ULL));
  h = splitmix64(h ^ (uint64_t(block) * 0x9FB21C651E98DF25ULL));
  return h;
}

uint64_t derive_replica_seed(uint64_t base_seed, uint64_t replica) {
  return splitmix64(base_seed ^ splitmix64(replica + 0x165667B19E3779F9ULL));
}

uint64_t derive_coordinate_seed(uint64_t seed, int coord) {
  return splitmix64(seed ^ splitmix64(uint64_t(coord) + 0xD6E8FEB86659FD93ULL));
}

}  // namespace siltlab
