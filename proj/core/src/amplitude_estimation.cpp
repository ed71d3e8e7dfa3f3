#include "unary_pricing/amplitude_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/minima.hpp>

#include "unary_pricing/error.hpp"
#include "unary_pricing/rng.hpp"

namespace unary_pricing {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double two_sided_z(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(Errc::invalid_params, "confidence must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> normal;
  return boost::math::quantile(boost::math::complement(normal, 0.5 * (1.0 - confidence)));
}

// n * log(x) with the 0 * log(0) = 0 convention.
double xlogy(double n, double x) {
  if (n == 0.0) return 0.0;
  return x > 0.0 ? n * std::log(x) : kNegInf;
}

double angle_of(double probability) { return std::asin(std::sqrt(std::clamp(probability, 0.0, 1.0))); }

double payoff_of(double alpha, double scale) {
  const double s = std::sin(alpha);
  return s * s * scale;
}

struct Search {
  std::span<const Observation> obs;
  double lo;
  double hi;

  double ll(double alpha) const { return log_likelihood(obs, alpha); }

  // Best grid point on [a, b] with spacing `step`; endpoints always included.
  double grid_argmax(double a, double b, double step, double& best_ll) const {
    const auto count = static_cast<std::size_t>(std::ceil((b - a) / step));
    double best = a;
    best_ll = ll(a);
    for (std::size_t k = 1; k <= count; ++k) {
      const double x = (k == count) ? b : a + step * static_cast<double>(k);
      const double v = ll(x);
      if (v > best_ll) {
        best_ll = v;
        best = x;
      }
    }
    return best;
  }

  // Walks away from `peak` in direction `dir` until the log-likelihood drops
  // below `floor`, then bisects the crossing.
  double region_edge(double peak, double dir, double step, double floor) const {
    const double limit = dir < 0 ? lo : hi;
    double inside = peak;
    for (;;) {
      double next = inside + dir * step;
      if ((dir < 0 && next <= limit) || (dir > 0 && next >= limit)) next = limit;
      if (ll(next) < floor) {
        double outside = next;
        for (int it = 0; it < 60 && std::abs(outside - inside) > 1e-13; ++it) {
          const double mid = 0.5 * (inside + outside);
          (ll(mid) < floor ? outside : inside) = mid;
        }
        return inside;
      }
      inside = next;
      if (inside == limit) return limit;
    }
  }
};

}  // namespace

AESchedule AESchedule::linear(std::uint32_t max_depth, std::uint64_t shots_per_depth,
                              std::uint32_t repeats) {
  AESchedule schedule;
  schedule.depths.resize(max_depth + 1);
  std::iota(schedule.depths.begin(), schedule.depths.end(), 0u);
  schedule.shots_per_depth = shots_per_depth;
  schedule.repeats = repeats;
  return schedule;
}

void AESchedule::validate() const {
  if (depths.empty() || depths.front() != 0) {
    throw Error(Errc::invalid_params, "schedule depths must start at 0");
  }
  for (std::size_t k = 1; k < depths.size(); ++k) {
    if (depths[k] <= depths[k - 1]) {
      throw Error(Errc::invalid_params, "schedule depths must be strictly increasing");
    }
  }
  if (shots_per_depth < 1) throw Error(Errc::invalid_params, "shots_per_depth must be >= 1");
  if (repeats < 1) throw Error(Errc::invalid_params, "repeats must be >= 1");
}

PricingCircuit::PricingCircuit(const DiscreteDistribution& dist, double strike, double angle_noise,
                               std::uint64_t noise_seed)
    : loader_(build_loader(perturb_splits(fit_loader(dist), angle_noise, noise_seed), dist.size())),
      payoff_(build_payoff(perturb_angles(payoff_angles(dist, strike), angle_noise, noise_seed))),
      q_(build_q(loader_, payoff_, dist.size())),
      mask_(strike_mask(dist, strike)),
      payoff_scale_(std::max(0.0, dist.max_price() - strike)) {}

UnaryState PricingCircuit::prepare(std::uint32_t m) const {
  StateVector amps = payoff_.matrix() * (loader_.matrix() * initial_state(bins()).amps());
  for (std::uint32_t k = 0; k < m; ++k) amps = q_.matrix() * amps;
  // Renormalize away rounding drift accumulated over deep circuits.
  amps /= amps.norm();
  return UnaryState(std::move(amps));
}

double PricingCircuit::hit_probability(std::uint32_t m) const {
  return ancilla_one_prob(prepare(m), mask_);
}

DepthSample run_depth(const PricingCircuit& circuit, std::uint32_t m, std::uint64_t shots,
                      std::uint64_t seed) {
  const UnaryState state = circuit.prepare(m);
  const auto counts = sample_shots(state, shots, seed);
  DepthSample sample{0, shots};
  for (std::size_t i = 0; i < circuit.bins(); ++i) {
    if (circuit.mask()[i]) sample.hits += counts[slot_index(i, 1)];
  }
  return sample;
}

Interval wilson_interval_z(double hits, double shots, double z) {
  if (!(shots > 0.0) || hits < 0.0 || hits > shots) {
    throw Error(Errc::invalid_params, "need 0 <= hits <= shots and shots > 0");
  }
  const double p = hits / shots;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / shots;
  const double center = (p + z2 / (2.0 * shots)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / shots + z2 / (4.0 * shots * shots)) / denom;
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (hits == 0.0) ci.lo = 0.0;
  if (hits == shots) ci.hi = 1.0;
  return ci;
}

Interval binomial_ci(double hits, double shots, double confidence) {
  return wilson_interval_z(hits, shots, two_sided_z(confidence));
}

double log_likelihood(std::span<const Observation> obs, double alpha) {
  double total = 0.0;
  for (const Observation& o : obs) {
    const double s = std::sin((2.0 * o.m + 1.0) * alpha);
    const double p = s * s;
    total += xlogy(o.hits, p) + xlogy(o.shots - o.hits, 1.0 - p);
  }
  return total;
}

std::vector<Observation> to_observations(std::span<const DepthRecord> records) {
  std::vector<Observation> obs;
  obs.reserve(records.size());
  for (const DepthRecord& r : records) {
    obs.push_back({r.m, static_cast<double>(r.hits), static_cast<double>(r.shots)});
  }
  return obs;
}

AngleEstimate recover_angle(std::span<const DepthRecord> records, const RecoveryOptions& options) {
  const auto obs = to_observations(records);
  return recover_angle(std::span<const Observation>(obs), options);
}

AngleEstimate recover_angle(std::span<const Observation> obs, const RecoveryOptions& options) {
  double hits0 = 0.0;
  double shots0 = 0.0;
  std::uint32_t max_m = 0;
  for (const Observation& o : obs) {
    if (!(o.shots > 0.0) || o.hits < 0.0 || o.hits > o.shots) {
      throw Error(Errc::invalid_params, "observation needs 0 <= hits <= shots, shots > 0");
    }
    if (o.m == 0) {
      hits0 += o.hits;
      shots0 += o.shots;
    }
    max_m = std::max(max_m, o.m);
  }
  if (shots0 == 0.0) throw Error(Errc::invalid_params, "records must include depth m = 0");
  if (!(options.grid_step > 0.0)) throw Error(Errc::invalid_params, "grid_step must be > 0");

  const Interval anchor = wilson_interval_z(hits0, shots0, options.anchor_z);
  const Search search{obs, angle_of(anchor.lo), angle_of(anchor.hi)};

  // Coarse pass resolves the fastest oscillation, sin^2((2 max_m + 1) alpha).
  const double period = std::numbers::pi / (2.0 * max_m + 1.0);
  const double coarse = std::min(1e-3, period / 64.0);
  double best_ll;
  double best = search.grid_argmax(search.lo, search.hi, coarse, best_ll);

  const double step = std::min(options.grid_step, coarse);
  best = search.grid_argmax(std::max(search.lo, best - coarse), std::min(search.hi, best + coarse),
                            step, best_ll);

  {
    const double a = std::max(search.lo, best - step);
    const double b = std::min(search.hi, best + step);
    if (b > a) {
      const auto [x, neg_ll] = boost::math::tools::brent_find_minima(
          [&](double alpha) { return -search.ll(alpha); }, a, b, 52);
      if (-neg_ll > best_ll) {
        best = x;
        best_ll = -neg_ll;
      }
    }
  }

  if (!std::isfinite(best_ll)) {
    throw Error(Errc::inconsistent_records, "no angle in the m = 0 branch has non-zero likelihood");
  }

  // Goodness of fit against the saturated model.
  double saturated = 0.0;
  for (const Observation& o : obs) {
    const double f = o.hits / o.shots;
    saturated += xlogy(o.hits, f) + xlogy(o.shots - o.hits, 1.0 - f);
  }
  const double deviance = std::max(0.0, 2.0 * (saturated - best_ll));
  const double dof = static_cast<double>(std::max<std::size_t>(obs.size(), 1));
  const double p_value = boost::math::cdf(
      boost::math::complement(boost::math::chi_squared_distribution<double>(dof), deviance));
  if (p_value < options.consistency_p_value) {
    throw Error(Errc::inconsistent_records,
                "records do not fit sin^2((2m+1) alpha) (deviance " + std::to_string(deviance) +
                    " on " + std::to_string(obs.size()) + " depths)");
  }

  const double z = two_sided_z(options.confidence);
  const double floor = best_ll - 0.5 * z * z;
  AngleEstimate estimate;
  estimate.alpha_hat = best;
  estimate.log_likelihood = best_ll;
  estimate.alpha_ci = {search.region_edge(best, -1.0, step, floor),
                       search.region_edge(best, +1.0, step, floor)};
  return estimate;
}

std::uint64_t oracle_calls(const AESchedule& schedule) {
  std::uint64_t calls = 0;
  for (std::uint32_t m : schedule.depths) {
    calls += static_cast<std::uint64_t>(schedule.repeats) * schedule.shots_per_depth * (2ull * m + 1);
  }
  return calls;
}

AEResult estimate_payoff(const DiscreteDistribution& dist, double strike,
                         const AESchedule& schedule, std::uint64_t seed,
                         const AEOptions& options) {
  schedule.validate();
  const PricingCircuit circuit(dist, strike, options.angle_noise, derive_seed(seed, Stream::noise));

  AEResult result;
  result.payoff_scale = circuit.payoff_scale();
  result.oracle_calls = oracle_calls(schedule);
  for (std::uint32_t m : schedule.depths) {
    DepthRecord record{m, 0, 0, {}};
    for (std::uint32_t r = 0; r < schedule.repeats; ++r) {
      const auto sample =
          run_depth(circuit, m, schedule.shots_per_depth, derive_seed(seed, Stream::ae_depth, m, r));
      record.hits += sample.hits;
      record.shots += sample.shots;
    }
    record.wilson = binomial_ci(static_cast<double>(record.hits), static_cast<double>(record.shots),
                                options.recovery.confidence);
    result.records.push_back(record);
  }

  const AngleEstimate angle = recover_angle(std::span<const DepthRecord>(result.records),
                                            options.recovery);
  result.alpha_hat = angle.alpha_hat;
  result.alpha_ci = angle.alpha_ci;
  if (circuit.degenerate()) {
    result.payoff_hat = 0.0;
    result.payoff_ci = {0.0, 0.0};
  } else {
    result.payoff_hat = payoff_of(angle.alpha_hat, result.payoff_scale);
    result.payoff_ci = {payoff_of(angle.alpha_ci.lo, result.payoff_scale),
                        payoff_of(angle.alpha_ci.hi, result.payoff_scale)};
  }
  return result;
}

ConvergenceTable convergence_study(const DiscreteDistribution& dist, double strike,
                                   std::uint32_t max_depth, std::uint64_t shots,
                                   std::uint32_t repeats, std::uint64_t seed,
                                   const AEOptions& options) {
  if (max_depth < 1) throw Error(Errc::invalid_params, "max_depth must be >= 1");
  if (repeats < 1) throw Error(Errc::invalid_params, "repeats must be >= 1");
  const bool noiseless = shots == 0;
  const PricingCircuit circuit(dist, strike, options.angle_noise, derive_seed(seed, Stream::noise));

  ConvergenceTable table;
  table.exact_payoff = expected_payoff_discrete(dist, strike);

  // observations[r][m]: the measurement of repeat r at depth m, shared by all
  // prefixes that include m.
  std::vector<std::vector<Observation>> observations(repeats);
  for (std::uint32_t r = 0; r < repeats; ++r) {
    for (std::uint32_t m = 0; m <= max_depth; ++m) {
      if (noiseless) {
        observations[r].push_back({m, circuit.hit_probability(m) * kNoiselessShots, kNoiselessShots});
      } else {
        const auto s = run_depth(circuit, m, shots, derive_seed(seed, Stream::ae_depth, m, r));
        observations[r].push_back({m, static_cast<double>(s.hits), static_cast<double>(s.shots)});
      }
    }
  }

  const double effective_shots = noiseless ? kNoiselessShots : static_cast<double>(shots);
  for (std::uint32_t m = 0; m <= max_depth; ++m) {
    ConvergenceRow row;
    row.depth = m;
    row.m = m;
    row.oracle_calls =
        static_cast<std::uint64_t>(effective_shots) * (static_cast<std::uint64_t>(m) + 1) * (m + 1);

    std::vector<double> estimates(repeats);
    double mc_abs = 0.0;
    for (std::uint32_t r = 0; r < repeats; ++r) {
      const std::span<const Observation> prefix(observations[r].data(), m + 1);
      const AngleEstimate angle = recover_angle(prefix, options.recovery);
      estimates[r] = circuit.degenerate() ? 0.0 : payoff_of(angle.alpha_hat, circuit.payoff_scale());
      if (!noiseless) {
        const McResult mc = mc_price_discrete(dist, strike, row.oracle_calls,
                                              derive_seed(seed, Stream::ae_mc_baseline, m, r));
        mc_abs += std::abs(mc.estimate - table.exact_payoff);
      }
    }
    const double n = static_cast<double>(repeats);
    row.payoff_mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
    double ss = 0.0;
    double abs_err = 0.0;
    for (double e : estimates) {
      ss += (e - row.payoff_mean) * (e - row.payoff_mean);
      abs_err += std::abs(e - table.exact_payoff);
    }
    row.payoff_std = repeats > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.abs_error = abs_err / n;
    row.mc_error = mc_abs / n;
    table.rows.push_back(row);
  }
  return table;
}

double ConvergenceTable::ae_slope() const {
  std::vector<double> x, y;
  for (const auto& row : rows) {
    x.push_back(static_cast<double>(row.oracle_calls));
    y.push_back(row.abs_error);
  }
  return log_log_slope(x, y);
}

double ConvergenceTable::mc_slope() const {
  std::vector<double> x, y;
  for (const auto& row : rows) {
    x.push_back(static_cast<double>(row.oracle_calls));
    y.push_back(row.mc_error);
  }
  return log_log_slope(x, y);
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "x and y differ in length");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw Error(Errc::invalid_params, "need two positive points for a slope");
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (!(denom > 0.0)) throw Error(Errc::invalid_params, "x values are all equal");
  return (nn * sxy - sx * sy) / denom;
}

}  // namespace unary_pricing
