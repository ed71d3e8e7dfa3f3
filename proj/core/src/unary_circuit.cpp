#include "unary_pricing/unary_circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "unary_pricing/error.hpp"
#include "unary_pricing/rng.hpp"

namespace unary_pricing {
namespace {

void require_bins(std::size_t n) {
  if (n < 2) throw Error(Errc::invalid_n, "bin count must be >= 2, got " + std::to_string(n));
}

OperatorMatrix identity(std::size_t n) {
  const auto dim = static_cast<Eigen::Index>(2 * n);
  return OperatorMatrix::Identity(dim, dim);
}

// Left-multiplies `u` by the splitter acting on (source, target) x ancilla.
// In (source, target) order the block is [[sqrt p, sqrt(1-p)], [sqrt(1-p), -sqrt p]].
void apply_splitter(OperatorMatrix& u, const SplitterGate& gate, double p) {
  const double keep = std::sqrt(p);
  const double pass = std::sqrt(1.0 - p);
  for (int anc = 0; anc < 2; ++anc) {
    const auto s = static_cast<Eigen::Index>(slot_index(gate.source, anc));
    const auto t = static_cast<Eigen::Index>(slot_index(gate.target, anc));
    const Eigen::RowVectorXcd row_s = u.row(s);
    const Eigen::RowVectorXcd row_t = u.row(t);
    u.row(s) = keep * row_s + pass * row_t;
    u.row(t) = pass * row_s - keep * row_t;
  }
}

double checked_ratio(double part, double whole) {
  if (!(whole > 0.0)) return 1.0;
  return std::clamp(part / whole, 0.0, 1.0);
}

}  // namespace

UnaryState::UnaryState(StateVector amps) : amps_(std::move(amps)) {
  if (amps_.size() < 4 || amps_.size() % 2 != 0) {
    throw Error(Errc::invalid_n, "state needs 2n amplitudes with n >= 2");
  }
  const double norm = amps_.squaredNorm();
  if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
    throw Error(Errc::invalid_params, "state norm " + std::to_string(norm) + " is not 1");
  }
}

std::vector<double> UnaryState::slot_probabilities() const {
  std::vector<double> probs(static_cast<std::size_t>(amps_.size()));
  for (Eigen::Index k = 0; k < amps_.size(); ++k) probs[static_cast<std::size_t>(k)] = std::norm(amps_(k));
  return probs;
}

UnaryState initial_state(std::size_t n) {
  require_bins(n);
  StateVector amps = StateVector::Zero(static_cast<Eigen::Index>(2 * n));
  amps(static_cast<Eigen::Index>(slot_index(initial_bin(n), 0))) = 1.0;
  return UnaryState(std::move(amps));
}

std::vector<SplitterGate> loader_schedule(std::size_t n) {
  require_bins(n);
  const std::size_t c = initial_bin(n);
  std::vector<SplitterGate> gates;
  gates.reserve(n - 1);
  gates.push_back({c, c + 1, 0});
  for (std::size_t layer = 1; gates.size() < n - 1; ++layer) {
    if (layer <= c) gates.push_back({c - layer + 1, c - layer, layer});
    if (c + layer + 1 < n) gates.push_back({c + layer, c + layer + 1, layer});
  }
  return gates;
}

std::size_t loader_depth(std::size_t n) { return loader_schedule(n).back().layer + 1; }

std::string_view label(OperatorKind kind) noexcept {
  switch (kind) {
    case OperatorKind::loader: return "D";
    case OperatorKind::payoff: return "P";
    case OperatorKind::s_psi: return "S_psi";
    case OperatorKind::s_0: return "S_0";
    case OperatorKind::q: return "Q";
    case OperatorKind::custom: return "U";
  }
  return "U";
}

double unitarity_error(const OperatorMatrix& u) {
  const OperatorMatrix defect = u.adjoint() * u - OperatorMatrix::Identity(u.rows(), u.cols());
  return defect.cwiseAbs().maxCoeff();
}

CircuitUnitary::CircuitUnitary(OperatorMatrix matrix, OperatorKind kind)
    : matrix_(std::move(matrix)), kind_(kind) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 4 || matrix_.rows() % 2 != 0) {
    throw Error(Errc::dimension_mismatch, "operator must be 2n x 2n with n >= 2");
  }
  const double err = unitarity_error(matrix_);
  if (!(err < kUnitaryTolerance)) {
    throw Error(Errc::invalid_params,
                std::string(unary_pricing::label(kind_)) + " is not unitary (defect " +
                    std::to_string(err) + ")");
  }
}

UnaryState CircuitUnitary::apply(const UnaryState& state) const {
  if (static_cast<Eigen::Index>(state.amps().size()) != matrix_.cols()) {
    throw Error(Errc::dimension_mismatch, "state and operator sizes differ");
  }
  // Both factors are unit up to rounding; strip the drift so long chains of
  // applications stay valid states.
  StateVector out = matrix_ * state.amps();
  out /= out.norm();
  return UnaryState(std::move(out));
}

CircuitUnitary CircuitUnitary::adjoint() const { return {matrix_.adjoint(), kind_}; }

LoaderParams fit_loader(const DiscreteDistribution& dist) { return fit_loader(dist.probs()); }

LoaderParams fit_loader(const std::vector<double>& probs) {
  const std::size_t n = probs.size();
  require_bins(n);
  const std::size_t c = initial_bin(n);

  // Mass that must still pass through bin j while the branch is spreading:
  // right of centre it is the tail sum from j, left of centre the head sum to j.
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;) tail[j] = tail[j + 1] + probs[j];
  std::vector<double> head(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) head[j] = (j ? head[j - 1] : 0.0) + probs[j];

  LoaderParams params;
  for (const SplitterGate& gate : loader_schedule(n)) {
    double p;
    if (gate.layer == 0) {
      p = checked_ratio(head[c], head[c] + tail[c + 1]);
    } else if (gate.target > gate.source) {
      p = checked_ratio(probs[gate.source], tail[gate.source]);
    } else {
      p = checked_ratio(probs[gate.source], head[gate.source]);
    }
    params.splits.push_back(p);
  }
  return params;
}

CircuitUnitary build_loader(const LoaderParams& params, std::size_t n) {
  require_bins(n);
  if (params.splits.size() != n - 1) {
    throw Error(Errc::invalid_length, "loader needs " + std::to_string(n - 1) + " splits, got " +
                                          std::to_string(params.splits.size()));
  }
  for (double p : params.splits) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::invalid_params, "split outside [0, 1]");
  }
  OperatorMatrix u = identity(n);
  const auto gates = loader_schedule(n);
  for (std::size_t k = 0; k < gates.size(); ++k) apply_splitter(u, gates[k], params.splits[k]);
  return {std::move(u), OperatorKind::loader};
}

PayoffAngles payoff_angles(const DiscreteDistribution& dist, double strike) {
  PayoffAngles angles;
  angles.thetas.assign(dist.size(), 0.0);
  const double range = dist.max_price() - strike;
  if (!(range > 0.0)) {
    angles.degenerate_strike = true;
    return angles;
  }
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double excess = dist.prices()[i] - strike;
    if (excess > 0.0) angles.thetas[i] = std::asin(std::sqrt(std::min(1.0, excess / range)));
  }
  return angles;
}

CircuitUnitary build_payoff(const PayoffAngles& angles) {
  const std::size_t n = angles.thetas.size();
  require_bins(n);
  OperatorMatrix u = identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = angles.thetas[i];
    if (!(theta >= 0.0 && theta <= std::numbers::pi / 2)) {
      throw Error(Errc::invalid_params, "payoff angle outside [0, pi/2]");
    }
    const auto a0 = static_cast<Eigen::Index>(slot_index(i, 0));
    const auto a1 = static_cast<Eigen::Index>(slot_index(i, 1));
    u(a0, a0) = std::cos(theta);
    u(a0, a1) = -std::sin(theta);
    u(a1, a0) = std::sin(theta);
    u(a1, a1) = std::cos(theta);
  }
  return {std::move(u), OperatorKind::payoff};
}

CircuitUnitary build_s_psi(std::size_t n) {
  require_bins(n);
  OperatorMatrix u = identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a1 = static_cast<Eigen::Index>(slot_index(i, 1));
    u(a1, a1) = -1.0;
  }
  return {std::move(u), OperatorKind::s_psi};
}

CircuitUnitary build_s_0(std::size_t n) {
  require_bins(n);
  OperatorMatrix u = identity(n);
  const auto k = static_cast<Eigen::Index>(slot_index(initial_bin(n), 0));
  u(k, k) = -1.0;
  return {std::move(u), OperatorKind::s_0};
}

CircuitUnitary build_q(const CircuitUnitary& loader, const CircuitUnitary& payoff, std::size_t n) {
  if (loader.bins() != n || payoff.bins() != n) {
    throw Error(Errc::dimension_mismatch, "loader/payoff do not act on " + std::to_string(n) +
                                              " bins");
  }
  const OperatorMatrix& d = loader.matrix();
  const OperatorMatrix& p = payoff.matrix();
  const OperatorMatrix a = p * d;
  OperatorMatrix q = a * build_s_0(n).matrix() * a.adjoint();
  // Right-multiplying by S_psi negates the ancilla-1 columns.
  for (std::size_t i = 0; i < n; ++i) q.col(static_cast<Eigen::Index>(slot_index(i, 1))) *= -1.0;
  return {std::move(q), OperatorKind::q};
}

std::vector<bool> strike_mask(const DiscreteDistribution& dist, double strike) {
  std::vector<bool> mask(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) mask[i] = dist.prices()[i] > strike;
  return mask;
}

double ancilla_one_prob(const UnaryState& state, const std::vector<bool>& mask) {
  if (mask.size() != state.bins()) {
    throw Error(Errc::dimension_mismatch, "mask length differs from bin count");
  }
  double prob = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) prob += std::norm(state.amp(i, 1));
  }
  return prob;
}

std::vector<std::uint64_t> sample_shots(const UnaryState& state, std::uint64_t shots,
                                        std::uint64_t seed) {
  if (shots < 1) throw Error(Errc::invalid_params, "shots must be >= 1");
  Rng rng = make_rng(seed, Stream::shots);
  const auto probs = state.slot_probabilities();
  return sample_multinomial(probs, shots, rng);
}

LoaderParams perturb_splits(const LoaderParams& params, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) return params;
  Rng rng = make_rng(seed, Stream::noise, 0);
  std::normal_distribution<double> gauss(0.0, sigma);
  LoaderParams out = params;
  for (double& p : out.splits) {
    const double c = std::cos(std::acos(std::sqrt(std::clamp(p, 0.0, 1.0))) + gauss(rng));
    p = std::clamp(c * c, 0.0, 1.0);
  }
  return out;
}

PayoffAngles perturb_angles(const PayoffAngles& angles, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) return angles;
  Rng rng = make_rng(seed, Stream::noise, 1);
  std::normal_distribution<double> gauss(0.0, sigma);
  PayoffAngles out = angles;
  for (double& theta : out.thetas) {
    theta = std::clamp(theta + gauss(rng), 0.0, std::numbers::pi / 2);
  }
  return out;
}

}  // namespace unary_pricing
