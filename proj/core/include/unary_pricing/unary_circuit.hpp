#pragma once

// Exact 2n-mode model of the unary pricing circuit. Slot 2*i carries bin i
// with the ancilla in |0>, slot 2*i+1 bin i with the ancilla in |1>.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unary_pricing/market_model.hpp"

namespace unary_pricing {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using OperatorMatrix = Eigen::MatrixXcd;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kUnitaryTolerance = 1e-12;

constexpr std::size_t slot_index(std::size_t bin, int ancilla) noexcept {
  return 2 * bin + static_cast<std::size_t>(ancilla);
}

/// Bin that receives the photon before loading: floor((n - 1) / 2).
constexpr std::size_t initial_bin(std::size_t n) noexcept { return (n - 1) / 2; }

class UnaryState {
 public:
  /// Throws Error(invalid_n) on odd/short vectors, Error(invalid_params) if
  /// the norm deviates from 1 by more than kNormTolerance.
  explicit UnaryState(StateVector amps);

  std::size_t bins() const noexcept { return static_cast<std::size_t>(amps_.size()) / 2; }
  const StateVector& amps() const noexcept { return amps_; }
  Complex amp(std::size_t bin, int ancilla) const { return amps_(slot_index(bin, ancilla)); }

  /// |amp|^2 for each of the 2n slots.
  std::vector<double> slot_probabilities() const;
  double norm_squared() const { return amps_.squaredNorm(); }

 private:
  StateVector amps_;
};

UnaryState initial_state(std::size_t n);

/// Split probabilities of the n-1 beam splitters, in application order (see
/// loader_schedule). A split p keeps fraction p of the incoming intensity on
/// the source bin and sends 1-p outward.
struct LoaderParams {
  std::vector<double> splits;
};

/// One splitter of the loading mesh, spreading amplitude from `source` to the
/// adjacent bin `target`.
struct SplitterGate {
  std::size_t source = 0;
  std::size_t target = 0;
  std::size_t layer = 0;

  bool operator==(const SplitterGate&) const = default;
};

/// Center-outward schedule: layer 0 splits the initial bin to its right
/// neighbour; layer k >= 1 extends the left branch by one bin and the right
/// branch by one bin, as far as each edge allows. Depth is floor((n+1)/2).
std::vector<SplitterGate> loader_schedule(std::size_t n);
std::size_t loader_depth(std::size_t n);

struct PayoffAngles {
  std::vector<double> thetas;
  /// Set when the strike is at or above the largest price: every angle is 0
  /// and the payoff is identically zero.
  bool degenerate_strike = false;
};

enum class OperatorKind { loader, payoff, s_psi, s_0, q, custom };

std::string_view label(OperatorKind kind) noexcept;

class CircuitUnitary {
 public:
  /// Throws Error(invalid_params) if the matrix is not square of even size or
  /// fails the unitarity check at kUnitaryTolerance.
  CircuitUnitary(OperatorMatrix matrix, OperatorKind kind);

  const OperatorMatrix& matrix() const noexcept { return matrix_; }
  OperatorKind kind() const noexcept { return kind_; }
  std::string_view label() const noexcept { return unary_pricing::label(kind_); }
  std::size_t bins() const noexcept { return static_cast<std::size_t>(matrix_.rows()) / 2; }

  /// U|psi>, renormalized to remove rounding drift.
  UnaryState apply(const UnaryState& state) const;
  CircuitUnitary adjoint() const;

 private:
  OperatorMatrix matrix_;
  OperatorKind kind_;
};

/// max_ij |(U^H U - I)_ij|
double unitarity_error(const OperatorMatrix& u);

/// Back-solves the splits so that build_loader(fit_loader(d)) maps the initial
/// state onto amplitudes sqrt(p_i) on the ancilla-0 slots.
LoaderParams fit_loader(const DiscreteDistribution& dist);
LoaderParams fit_loader(const std::vector<double>& probs);

CircuitUnitary build_loader(const LoaderParams& params, std::size_t n);

/// theta_i = arcsin(sqrt((s_i - K) / (s_max - K))) for s_i > K, else 0.
PayoffAngles payoff_angles(const DiscreteDistribution& dist, double strike);

CircuitUnitary build_payoff(const PayoffAngles& angles);

/// diag(+1, -1, +1, -1, ...): flips the sign of every ancilla-1 slot.
CircuitUnitary build_s_psi(std::size_t n);

/// Identity except -1 on the slot of the initial state.
CircuitUnitary build_s_0(std::size_t n);

/// Q = P D S_0 D^H P^H S_psi.
CircuitUnitary build_q(const CircuitUnitary& loader, const CircuitUnitary& payoff, std::size_t n);

/// Bins strictly above the strike.
std::vector<bool> strike_mask(const DiscreteDistribution& dist, double strike);

/// Probability of detecting the photon on an ancilla-1 slot of a masked bin.
double ancilla_one_prob(const UnaryState& state, const std::vector<bool>& mask);

/// Multinomial detection counts over the 2n slots; counts sum to `shots`.
std::vector<std::uint64_t> sample_shots(const UnaryState& state, std::uint64_t shots,
                                        std::uint64_t seed);

/// Gaussian perturbation of the hardware angles, emulating imprecise phase
/// settings. Splits are perturbed in the mixing angle acos(sqrt(p)).
LoaderParams perturb_splits(const LoaderParams& params, double sigma, std::uint64_t seed);
PayoffAngles perturb_angles(const PayoffAngles& angles, double sigma, std::uint64_t seed);

}  // namespace unary_pricing
