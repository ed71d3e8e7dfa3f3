#pragma once

// Phase-estimation-free amplitude estimation on the unary pricing circuit.
//
// For amplification depth m the circuit prepares Q^m P D |init>, whose masked
// ancilla-1 probability is sin^2((2m+1) alpha) with sin^2(alpha) the payoff
// probability a. Measurements at several depths are combined by maximum
// likelihood over alpha; the m = 0 measurement fixes the branch.

#include <cstdint>
#include <span>
#include <vector>

#include "unary_pricing/market_model.hpp"
#include "unary_pricing/unary_circuit.hpp"

namespace unary_pricing {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  double width() const noexcept { return hi - lo; }
};

struct AESchedule {
  std::vector<std::uint32_t> depths;
  std::uint64_t shots_per_depth = 100;
  std::uint32_t repeats = 50;

  /// depths = 0, 1, ..., max_depth.
  static AESchedule linear(std::uint32_t max_depth, std::uint64_t shots_per_depth = 100,
                           std::uint32_t repeats = 50);

  /// Throws Error(invalid_params) unless depths start at 0 and strictly
  /// increase, and shots/repeats are positive.
  void validate() const;
};

/// Measurements at one amplification depth, pooled over repeats.
struct DepthRecord {
  std::uint32_t m = 0;
  std::uint64_t hits = 0;
  std::uint64_t shots = 0;
  /// Wilson interval on the hit probability at this depth alone.
  Interval wilson;

  double frequency() const noexcept {
    return shots ? static_cast<double>(hits) / static_cast<double>(shots) : 0.0;
  }
};

/// Likelihood input. Counts are real-valued so that noiseless (infinite-shot)
/// frequencies can be fed in with a nominal weight.
struct Observation {
  std::uint32_t m = 0;
  double hits = 0.0;
  double shots = 0.0;
};

struct RecoveryOptions {
  /// Level of the reported likelihood-ratio interval.
  double confidence = 0.95;
  /// Width, in standard normal quantiles, of the m = 0 Wilson interval that
  /// restricts the search to one branch.
  double anchor_z = 5.0;
  double grid_step = 1e-5;
  /// Records whose goodness-of-fit p-value falls below this are rejected.
  double consistency_p_value = 1e-12;
};

struct AngleEstimate {
  double alpha_hat = 0.0;
  Interval alpha_ci;
  double log_likelihood = 0.0;
};

struct AEResult {
  std::vector<DepthRecord> records;
  double alpha_hat = 0.0;
  Interval alpha_ci;
  double payoff_hat = 0.0;
  Interval payoff_ci;
  /// s_max - K, or 0 for a degenerate strike.
  double payoff_scale = 0.0;
  std::uint64_t oracle_calls = 0;
};

struct AEOptions {
  RecoveryOptions recovery;
  /// Standard deviation of the hardware angle noise; 0 is the ideal circuit.
  double angle_noise = 0.0;
};

/// D, P and Q for one pricing problem, plus the readout mask.
class PricingCircuit {
 public:
  PricingCircuit(const DiscreteDistribution& dist, double strike, double angle_noise = 0.0,
                 std::uint64_t noise_seed = 0);

  std::size_t bins() const noexcept { return loader_.bins(); }
  const CircuitUnitary& loader() const noexcept { return loader_; }
  const CircuitUnitary& payoff() const noexcept { return payoff_; }
  const CircuitUnitary& q() const noexcept { return q_; }
  const std::vector<bool>& mask() const noexcept { return mask_; }
  double payoff_scale() const noexcept { return payoff_scale_; }
  bool degenerate() const noexcept { return payoff_scale_ == 0.0; }

  /// Q^m P D |init>.
  UnaryState prepare(std::uint32_t m) const;
  /// Masked ancilla-1 probability of prepare(m).
  double hit_probability(std::uint32_t m) const;

 private:
  CircuitUnitary loader_;
  CircuitUnitary payoff_;
  CircuitUnitary q_;
  std::vector<bool> mask_;
  double payoff_scale_ = 0.0;
};

struct DepthSample {
  std::uint64_t hits = 0;
  std::uint64_t shots = 0;
};

DepthSample run_depth(const PricingCircuit& circuit, std::uint32_t m, std::uint64_t shots,
                      std::uint64_t seed);

/// Wilson score interval for a binomial proportion.
Interval binomial_ci(double hits, double shots, double confidence);
Interval wilson_interval_z(double hits, double shots, double z);

/// Sum over observations of the binomial log-likelihood with success
/// probability sin^2((2m+1) alpha), dropping the combinatorial constant.
double log_likelihood(std::span<const Observation> obs, double alpha);

/// Grid maximum-likelihood estimate of alpha in [0, pi/2]. Requires at least
/// one m = 0 observation. Throws Error(inconsistent_records) when no angle in
/// the anchored branch explains the data.
AngleEstimate recover_angle(std::span<const Observation> obs, const RecoveryOptions& options = {});
AngleEstimate recover_angle(std::span<const DepthRecord> records,
                            const RecoveryOptions& options = {});

std::vector<Observation> to_observations(std::span<const DepthRecord> records);

/// Applications of D and P: each shot at depth m costs 2m + 1.
std::uint64_t oracle_calls(const AESchedule& schedule);

AEResult estimate_payoff(const DiscreteDistribution& dist, double strike,
                         const AESchedule& schedule, std::uint64_t seed,
                         const AEOptions& options = {});

struct ConvergenceRow {
  std::size_t depth = 0;
  std::uint32_t m = 0;
  /// Oracle calls spent by one estimate that uses depths 0..m.
  std::uint64_t oracle_calls = 0;
  double payoff_mean = 0.0;
  double payoff_std = 0.0;
  double abs_error = 0.0;
  /// Mean absolute error of classical sampling with n_paths = oracle_calls.
  double mc_error = 0.0;
};

struct ConvergenceTable {
  double exact_payoff = 0.0;
  std::vector<ConvergenceRow> rows;

  double ae_slope() const;
  double mc_slope() const;
};

/// Nominal shot weight used when shots == 0 (noiseless statevector frequencies).
inline constexpr double kNoiselessShots = 1e8;

/// For every prefix 0..M of the linear schedule, `repeats` independent
/// estimates with `shots` per depth. shots == 0 feeds exact frequencies.
ConvergenceTable convergence_study(const DiscreteDistribution& dist, double strike,
                                   std::uint32_t max_depth, std::uint64_t shots,
                                   std::uint32_t repeats, std::uint64_t seed,
                                   const AEOptions& options = {});

/// Least-squares slope of log(y) against log(x), skipping non-positive points.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace unary_pricing
