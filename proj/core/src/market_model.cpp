#include "unary_pricing/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <boost/math/distributions/lognormal.hpp>

#include "unary_pricing/error.hpp"
#include "unary_pricing/rng.hpp"

namespace unary_pricing {
namespace {

constexpr std::uint64_t kPathBatch = 1u << 16;

// Running mean / M2 accumulator; batches are merged in index order so the
// result does not depend on how batches are scheduled.
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& other) {
    if (other.count == 0) return;
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(other.count);
    const double n = n_a + n_b;
    const double delta = other.mean - mean;
    mean += delta * n_b / n;
    m2 += other.m2 + delta * delta * n_a * n_b / n;
    count += other.count;
  }
};

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void BsmParams::validate() const {
  if (!finite(s0) || s0 <= 0.0) throw Error(Errc::invalid_params, "s0 must be > 0");
  if (!finite(r)) throw Error(Errc::invalid_params, "r must be finite");
  if (!finite(sigma) || sigma <= 0.0) throw Error(Errc::invalid_params, "sigma must be > 0");
  if (!finite(t) || t <= 0.0) throw Error(Errc::invalid_params, "t must be > 0");
  if (!finite(strike) || strike < 0.0) throw Error(Errc::invalid_params, "strike must be >= 0");
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> prices, std::vector<double> probs)
    : prices_(std::move(prices)), probs_(std::move(probs)) {
  if (prices_.empty()) throw Error(Errc::invalid_params, "distribution has no bins");
  if (prices_.size() != probs_.size()) {
    throw Error(Errc::invalid_params, "prices and probs differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < prices_.size(); ++i) {
    if (!finite(prices_[i])) throw Error(Errc::invalid_params, "non-finite price");
    if (i > 0 && !(prices_[i] > prices_[i - 1])) {
      throw Error(Errc::invalid_params, "prices must be strictly increasing");
    }
    if (!finite(probs_[i]) || probs_[i] < 0.0) {
      throw Error(Errc::invalid_params, "probabilities must be non-negative");
    }
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw Error(Errc::invalid_params,
                "probabilities sum to " + std::to_string(total) + ", expected 1");
  }
}

LogNormalParams lognormal_terminal_params(const BsmParams& params) {
  params.validate();
  return {std::log(params.s0) + (params.r - 0.5 * params.sigma * params.sigma) * params.t,
          params.sigma * std::sqrt(params.t)};
}

DiscreteDistribution discretize(const BsmParams& params, std::size_t n, double coverage) {
  const auto [mu_log, sigma_log] = lognormal_terminal_params(params);
  if (n < 2) throw Error(Errc::invalid_params, "bin count must be >= 2");
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw Error(Errc::invalid_params, "coverage must lie in (0, 1)");
  }

  const boost::math::lognormal_distribution<double> law(mu_log, sigma_log);
  const double tail = 0.5 * (1.0 - coverage);
  const double lo = boost::math::quantile(law, tail);
  const double hi = boost::math::quantile(boost::math::complement(law, tail));
  if (!finite(lo) || !finite(hi) || !(hi - lo > 1e-12 * hi)) {
    throw Error(Errc::degenerate_range, "quantile range collapsed");
  }

  const double width = (hi - lo) / static_cast<double>(n);
  std::vector<double> prices(n);
  std::vector<double> probs(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lo + width * static_cast<double>(i);
    const double b = (i + 1 == n) ? hi : lo + width * static_cast<double>(i + 1);
    prices[i] = 0.5 * (a + b);
    probs[i] = std::max(0.0, boost::math::cdf(law, b) - boost::math::cdf(law, a));
    total += probs[i];
  }
  if (!(total > 0.0)) throw Error(Errc::degenerate_range, "bins carry no probability mass");
  for (double& p : probs) p /= total;
  return DiscreteDistribution(std::move(prices), std::move(probs));
}

double expected_payoff_discrete(const DiscreteDistribution& dist, double strike) {
  double payoff = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double s = dist.prices()[i];
    if (s > strike) payoff += dist.probs()[i] * (s - strike);
  }
  return payoff;
}

McResult mc_price(const BsmParams& params, std::uint64_t n_paths, std::uint64_t seed,
                  const McOptions& options) {
  const auto [mu_log, sigma_log] = lognormal_terminal_params(params);
  if (n_paths < 2) throw Error(Errc::invalid_params, "n_paths must be >= 2");
  if (options.steps == 0) throw Error(Errc::invalid_params, "steps must be >= 1");

  const std::uint32_t steps = options.steps;
  const double dt = params.t / static_cast<double>(steps);
  const double sqrt_dt = std::sqrt(dt);

  Moments total;
  const std::uint64_t batches = (n_paths + kPathBatch - 1) / kPathBatch;
  for (std::uint64_t b = 0; b < batches; ++b) {
    Rng rng = make_rng(seed, Stream::mc_paths, b);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::uint64_t begin = b * kPathBatch;
    const std::uint64_t end = std::min(n_paths, begin + kPathBatch);
    Moments batch;
    for (std::uint64_t path = begin; path < end; ++path) {
      double s_t;
      if (steps == 1) {
        s_t = std::exp(mu_log + sigma_log * gauss(rng));
      } else {
        s_t = params.s0;
        for (std::uint32_t k = 0; k < steps; ++k) {
          s_t += s_t * (params.r * dt + params.sigma * sqrt_dt * gauss(rng));
          s_t = std::max(s_t, 0.0);
        }
      }
      batch.add(std::max(0.0, s_t - params.strike));
    }
    total.merge(batch);
  }

  const double variance = total.m2 / static_cast<double>(total.count - 1);
  return {total.mean, std::sqrt(variance / static_cast<double>(total.count)), n_paths, seed};
}

McResult mc_price_discrete(const DiscreteDistribution& dist, double strike, std::uint64_t n_paths,
                           std::uint64_t seed) {
  if (n_paths < 2) throw Error(Errc::invalid_params, "n_paths must be >= 2");
  Rng rng = make_rng(seed, Stream::mc_paths);
  const auto counts = sample_multinomial(dist.probs(), n_paths, rng);

  const double n = static_cast<double>(n_paths);
  double mean = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    mean += static_cast<double>(counts[i]) * std::max(0.0, dist.prices()[i] - strike);
  }
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double d = std::max(0.0, dist.prices()[i] - strike) - mean;
    ss += static_cast<double>(counts[i]) * d * d;
  }
  return {mean, std::sqrt(ss / (n - 1.0) / n), n_paths, seed};
}

}  // namespace unary_pricing
