#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace unary_pricing {

using Rng = std::mt19937_64;

/// Stream tags keep the substreams of different consumers disjoint even when
/// they are handed the same user seed.
enum class Stream : std::uint64_t {
  mc_paths = 1,
  shots = 2,
  ae_depth = 3,
  ae_mc_baseline = 4,
  gan_init = 5,
  gan_critic = 6,
  gan_real = 7,
  gan_fake = 8,
  gan_evolve = 9,
  noise = 10,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed for (stream, i, j). Pure function of its
/// inputs, so a task's substream does not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t i = 0,
                          std::uint64_t j = 0) noexcept;

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t i = 0, std::uint64_t j = 0);

/// Multinomial draw of `trials` over `probs` via conditional binomials.
/// `probs` need not be exactly normalized; the last cell takes the remainder.
std::vector<std::uint64_t> sample_multinomial(std::span<const double> probs, std::uint64_t trials,
                                              Rng& rng);

}  // namespace unary_pricing
