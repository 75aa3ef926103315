#include "codevqa/core/random.hpp"

#include <algorithm>

namespace codevqa {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const auto index = static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(n));
  return std::min(index, n - 1);
}

std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace codevqa
