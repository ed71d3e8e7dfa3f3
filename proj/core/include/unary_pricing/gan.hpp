#pragma once

// Hybrid Wasserstein GAN that loads a distribution into the unary circuit.
// The generator is the splitter mesh itself, trained without gradients by an
// evolutionary loop; the critic is a small dense network trained by gradient
// ascent on E[f(real)] - E[f(fake)] with clipped weights.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unary_pricing/unary_circuit.hpp"

namespace unary_pricing {

using Distribution = std::vector<double>;
using Batch = std::vector<Distribution>;
using Genome = std::vector<double>;
using Population = std::vector<Genome>;

/// Splitter mesh with mixing angles phi_k (split p_k = cos^2 phi_k).
struct GeneratorAnsatz {
  std::size_t n = 0;
  Genome params;
  /// Detected photons per fake sample; 0 returns exact probabilities.
  std::uint64_t shot_budget = 0;

  void validate() const;
};

LoaderParams splits_from_angles(std::span<const double> angles);
Genome angles_from_splits(const LoaderParams& params);

/// Bin occupation probabilities (ancilla 0) after loading, or their empirical
/// frequencies over shot_budget detections.
Distribution generate_distribution(const GeneratorAnsatz& ansatz, std::uint64_t seed);

/// Euclidean distance between two distributions.
double l2_norm(std::span<const double> fake, std::span<const double> real);

enum class Activation { tanh, softplus };

class CriticNet {
 public:
  /// layer_sizes = {input, hidden..., 1}. All weights start at zero.
  CriticNet(std::vector<std::size_t> layer_sizes, double clip_bound,
            Activation activation = Activation::tanh);

  /// Weights uniform in [-clip_bound, clip_bound], biases zero.
  static CriticNet random(std::vector<std::size_t> layer_sizes, double clip_bound,
                          std::uint64_t seed, Activation activation = Activation::tanh);

  std::size_t input_size() const noexcept { return sizes_.front(); }
  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  double clip_bound() const noexcept { return clip_bound_; }
  Activation activation() const noexcept { return activation_; }

  /// Hidden layers apply the activation, the output layer is linear.
  double score(std::span<const double> x) const;

  /// mean score(real) - mean score(fake)
  double objective(const Batch& real, const Batch& fake) const;

  /// Gradient of objective() with respect to parameters(), by backpropagation.
  Eigen::VectorXd objective_gradient(const Batch& real, const Batch& fake) const;

  /// Weights then bias of each layer, flattened column-major.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);
  std::size_t parameter_count() const;

  /// Largest absolute parameter, weights and biases alike.
  double max_abs_weight() const;
  void clip();

 private:
  struct Layer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
  };

  void accumulate_gradient(std::span<const double> x, double sign, Eigen::VectorXd& grad) const;
  Eigen::VectorXd activate(const Eigen::VectorXd& z) const;
  Eigen::VectorXd activation_slope(const Eigen::VectorXd& z) const;

  std::vector<std::size_t> sizes_;
  std::vector<Layer> layers_;
  double clip_bound_;
  Activation activation_;
};

double critic_score(const CriticNet& net, std::span<const double> dist);

/// One ascent step of size `lr` on the Wasserstein critic objective, followed
/// by weight clipping.
CriticNet critic_update(CriticNet net, const Batch& real, const Batch& fake, double lr);

struct TrainConfig {
  std::size_t population_size = 30;
  double elite_fraction = 0.2;
  std::size_t tournament_size = 3;
  double mutation_std = 0.05;
  double crossover_rate = 0.5;
  std::size_t critic_steps_per_generation = 5;
  double critic_learning_rate = 2.0;
  std::size_t generations = 100;
  std::uint64_t seed = 0;

  std::vector<std::size_t> critic_hidden = {32, 16};
  double clip_bound = 0.1;
  Activation critic_activation = Activation::tanh;
  /// Std of the Gaussian jitter applied to real samples before renormalizing.
  double real_jitter = 0.01;
  std::uint64_t shot_budget = 0;

  void validate() const;
};

/// Selection, crossover and mutation. Fitness is higher-is-better.
Population evolve_generation(const Population& population, std::span<const double> fitness,
                             const TrainConfig& config, std::uint64_t seed);

struct GenerationLog {
  std::size_t generation = 0;
  /// Best l2 to the target over every individual evaluated so far.
  double l2 = 0.0;
  /// Best l2 within this generation's population.
  double l2_current = 0.0;
  double e_real = 0.0;
  double e_fake = 0.0;
  Genome best_params;
};

struct GanHistory {
  std::vector<GenerationLog> generations;
  Genome best_params;
  double best_l2 = 0.0;

  /// generation,l2,e_real,e_fake
  void write_csv(std::ostream& out) const;
};

GanHistory train_gan(std::span<const double> target, const TrainConfig& config);

/// Best parameters as a small JSON document: {"n":..,"angles":[..],"splits":[..],"l2":..}.
void write_params(std::ostream& out, const GanHistory& history, std::size_t n);
GeneratorAnsatz read_params(std::istream& in);

/// Normal target with equal-width bins over the central `coverage` mass.
Distribution normal_target(std::size_t n, double coverage = 0.997);

}  // namespace unary_pricing
