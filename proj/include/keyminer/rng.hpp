#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace keyminer {

// Seeded generator whose draws are identical on every platform.
// std::mt19937_64 is fully specified by the standard, but the standard
// distributions are not, so bounded draws are done here by rejection.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double unit();

  // First `count` entries of a seeded Fisher-Yates shuffle of `items`.
  // Prefixes are stable: sample(v, k) is a prefix of sample(v, k + 1) for the
  // same generator state.
  template <typename T>
  std::vector<T> sample(std::vector<T> items, std::size_t count) {
    if (count > items.size()) count = items.size();
    for (std::size_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::size_t>(below(items.size() - i));
      std::swap(items[i], items[j]);
    }
    items.resize(count);
    return items;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace keyminer
