#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace siltlab {

// Open-addressing hash map from nonzero 64-bit keys to small value types.
// Fibonacci hashing + linear probing, load factor <= 0.5. Built for the hot
// counting loops where node-based maps dominate the profile.
template <typename V>
class FlatMap {
 public:
  explicit FlatMap(size_t initial_log2 = 10) { rehash(initial_log2); }

  V& operator[](uint64_t key) {
    if ((count_ + 1) * 2 > slots_.size()) rehash(log2_ + 1);
    size_t i = probe(key);
    if (slots_[i].key == 0) {
      slots_[i].key = key;
      slots_[i].val = V{};
      ++count_;
    }
    return slots_[i].val;
  }

  const V* find(uint64_t key) const {
    size_t i = probe(key);
    return slots_[i].key == 0 ? nullptr : &slots_[i].val;
  }

  size_t size() const { return count_; }

  template <class F>
  void for_each(F&& f) const {
    for (const Slot& s : slots_)
      if (s.key != 0) f(s.key, s.val);
  }

  void reserve_keys(size_t n) {
    size_t lg = log2_;
    while ((size_t(1) << lg) < 2 * n + 1) ++lg;
    if (lg > log2_) rehash(lg);
  }

 private:
  struct Slot {
    uint64_t key = 0;
    V val{};
  };

  size_t probe(uint64_t key) const {
    size_t mask = slots_.size() - 1;
    size_t i = size_t((key * 0x9E3779B97F4A7C15ULL) >> shift_);
    while (slots_[i].key != 0 && slots_[i].key != key) i = (i + 1) & mask;
    return i;
  }

  void rehash(size_t lg) {
    std::vector<Slot> old = std::move(slots_);
    log2_ = lg;
    shift_ = unsigned(64 - lg);
    slots_.assign(size_t(1) << lg, Slot{});
    for (const Slot& s : old) {
      if (s.key == 0) continue;
      size_t i = probe(s.key);
      slots_[i] = s;
    }
  }

  std::vector<Slot> slots_;
  size_t count_ = 0;
  size_t log2_ = 0;
  unsigned shift_ = 64;
};

}  // namespace siltlab
