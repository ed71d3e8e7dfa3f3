#pragma once

#include <cstdint>
#include <vector>

namespace unary_pricing {

/// Black-Scholes-Merton market: dS = r S dt + sigma S dW, European call struck at `strike`.
struct BsmParams {
  double s0 = 1.0;
  double r = 0.0;
  double sigma = 0.4;
  double t = 1.0;
  double strike = 1.0;

  /// Throws Error(invalid_params) unless s0 > 0, sigma > 0, t > 0, strike >= 0.
  void validate() const;
};

/// Mean and standard deviation of ln(S_T).
struct LogNormalParams {
  double mu_log = 0.0;
  double sigma_log = 0.0;
};

/// Bin prices (strictly increasing) with their probabilities (non-negative, sum 1).
class DiscreteDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  DiscreteDistribution(std::vector<double> prices, std::vector<double> probs);

  std::size_t size() const noexcept { return prices_.size(); }
  const std::vector<double>& prices() const noexcept { return prices_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  double max_price() const noexcept { return prices_.back(); }

 private:
  std::vector<double> prices_;
  std::vector<double> probs_;
};

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;

  bool operator==(const McResult&) const = default;
};

struct McOptions {
  /// 1 samples the exact terminal law; larger values walk an Euler scheme with
  /// that many time steps.
  std::uint32_t steps = 1;
};

inline constexpr double kDefaultCoverage = 0.997;

LogNormalParams lognormal_terminal_params(const BsmParams& params);

/// Equal-width price bins over the central `coverage` quantile range of the
/// terminal log-normal law. Bin value is the midpoint; mass is the CDF
/// difference over the bin, renormalized to 1.
DiscreteDistribution discretize(const BsmParams& params, std::size_t n,
                                double coverage = kDefaultCoverage);

/// Sum of p_i (s_i - K) over bins strictly above the strike.
double expected_payoff_discrete(const DiscreteDistribution& dist, double strike);

McResult mc_price(const BsmParams& params, std::uint64_t n_paths, std::uint64_t seed,
                  const McOptions& options = {});

/// Classical sampling baseline on a discrete distribution: the mean payoff of
/// `n_paths` i.i.d. bin draws.
McResult mc_price_discrete(const DiscreteDistribution& dist, double strike, std::uint64_t n_paths,
                           std::uint64_t seed);

}  // namespace unary_pricing
