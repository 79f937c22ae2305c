#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace bheisr {

// SplitMix64 finalizer. Used both as a generator step and as a mixing hash.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// Counter-based uniform stream keyed by a seed. Draw i depends only on
// (key, i), so a stream can be replayed or split without shared state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  // Uniform in [0, 1) with 53 random bits.
  double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  std::uint64_t draws() const noexcept { return counter_; }
  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Run seed -> per-user stream -> per-step stream. Adding users never shifts
// the draws of existing ones.
inline std::uint64_t user_seed(std::uint64_t run_seed, std::string_view user_id) noexcept {
  return combine_seed(run_seed, fnv1a(user_id));
}

inline RngStream step_stream(std::uint64_t run_seed, std::string_view user_id,
                             std::uint64_t step, std::uint64_t purpose = 0) noexcept {
  return RngStream(combine_seed(combine_seed(user_seed(run_seed, user_id), step), purpose));
}

// Fisher-Yates shuffle driven by an RngStream (portable, unlike std::shuffle).
template <class T>
void shuffle(std::vector<T>& values, RngStream& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace bheisr
