#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "leanmon/error.hpp"
#include "leanmon/hashing.hpp"

namespace leanmon {

/// Two-way cuckoo hash map with fixed capacity: every key has one slot in
/// each of two halves. When an insert cannot settle within `max_kicks`
/// displacements, the entry left homeless is dropped and counted.
template <typename K, typename V, typename Digest = std::hash<K>>
class CuckooMap {
 public:
  explicit CuckooMap(std::size_t capacity, std::uint64_t seed = 0, std::size_t max_kicks = 64)
      : half_(capacity / 2),
        max_kicks_(max_kicks),
        h0_(make_hash_pair(seed, HashStream::Cuckoo, 0)),
        h1_(make_hash_pair(seed, HashStream::Cuckoo, 1)),
        slots_(2 * half_) {
    if (half_ == 0) throw ConfigError("cuckoo capacity must be at least 2");
  }

  [[nodiscard]] V* find(const K& key) {
    const std::uint64_t d = digest(key);
    for (std::size_t s : {slot0(d), slot1(d)}) {
      if (slots_[s] && slots_[s]->first == key) return &slots_[s]->second;
    }
    return nullptr;
  }
  [[nodiscard]] const V* find(const K& key) const { return const_cast<CuckooMap*>(this)->find(key); }

  /// Inserts or overwrites. Returns false if some entry (possibly this one)
  /// had to be dropped.
  bool insert(const K& key, const V& value) {
    if (V* v = find(key)) {
      *v = value;
      return true;
    }
    std::pair<K, V> cur{key, value};
    std::uint64_t d = digest(cur.first);
    std::size_t s = slot0(d);
    if (slots_[s]) {
      const std::size_t alt = slot1(d);
      if (!slots_[alt]) s = alt;
    }
    for (std::size_t kick = 0; kick <= max_kicks_; ++kick) {
      if (!slots_[s]) {
        slots_[s] = std::move(cur);
        ++size_;
        return true;
      }
      std::swap(cur, *slots_[s]);
      d = digest(cur.first);
      s = (s == slot0(d)) ? slot1(d) : slot0(d);
    }
    ++dropped_;
    return false;
  }

  bool erase(const K& key) {
    const std::uint64_t d = digest(key);
    for (std::size_t s : {slot0(d), slot1(d)}) {
      if (slots_[s] && slots_[s]->first == key) {
        slots_[s].reset();
        --size_;
        return true;
      }
    }
    return false;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& s : slots_) {
      if (s) f(s->first, s->second);
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] std::size_t capacity() const noexcept { return slots_.size(); }
  [[nodiscard]] std::uint64_t dropped() const noexcept { return dropped_; }

 private:
  std::uint64_t digest(const K& key) const { return mix64(Digest{}(key)); }
  std::size_t slot0(std::uint64_t d) const noexcept { return bucket(h0_, d, half_); }
  std::size_t slot1(std::uint64_t d) const noexcept { return half_ + bucket(h1_, d, half_); }

  std::size_t half_;
  std::size_t max_kicks_;
  HashPair h0_;
  HashPair h1_;
  std::vector<std::optional<std::pair<K, V>>> slots_;
  std::size_t size_ = 0;
  std::uint64_t dropped_ = 0;
};

}  // namespace leanmon
