#include "unary_pricing/rng.hpp"

#include <algorithm>

namespace unary_pricing {

std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t i,
                          std::uint64_t j) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  h = mix64(h ^ i);
  return mix64(h ^ (j * 0xd1342543de82ef95ULL));
}

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t i, std::uint64_t j) {
  return Rng(derive_seed(seed, stream, i, j));
}

std::vector<std::uint64_t> sample_multinomial(std::span<const double> probs, std::uint64_t trials,
                                              Rng& rng) {
  std::vector<std::uint64_t> counts(probs.size(), 0);
  if (probs.empty()) return counts;
  double remaining_mass = 0.0;
  for (double p : probs) remaining_mass += p;
  std::uint64_t remaining = trials;
  for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
    if (remaining_mass <= 0.0) break;
    const double q = std::clamp(probs[i] / remaining_mass, 0.0, 1.0);
    std::uint64_t draw = 0;
    if (q >= 1.0) {
      draw = remaining;
    } else if (q > 0.0) {
      std::binomial_distribution<std::uint64_t> binom(remaining, q);
      draw = binom(rng);
    }
    counts[i] = draw;
    remaining -= draw;
    remaining_mass -= probs[i];
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace unary_pricing
