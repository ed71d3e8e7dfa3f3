#include "unary_pricing/gan.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "unary_pricing/error.hpp"
#include "unary_pricing/rng.hpp"

namespace unary_pricing {
namespace {

double mean(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

Distribution jittered(std::span<const double> target, double sigma, Rng& rng) {
  Distribution x(target.begin(), target.end());
  if (sigma > 0.0) {
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& v : x) v = std::max(0.0, v + gauss(rng));
  }
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  if (total > 0.0) {
    for (double& v : x) v /= total;
  } else {
    x.assign(target.begin(), target.end());
  }
  return x;
}

std::size_t tournament(std::span<const double> fitness, std::size_t size, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, fitness.size() - 1);
  std::size_t best = pick(rng);
  for (std::size_t k = 1; k < size; ++k) {
    const std::size_t challenger = pick(rng);
    if (fitness[challenger] > fitness[best]) best = challenger;
  }
  return best;
}

}  // namespace

void GeneratorAnsatz::validate() const {
  if (n < 2) throw Error(Errc::invalid_n, "generator needs n >= 2");
  if (params.size() != n - 1) {
    throw Error(Errc::invalid_length, "generator needs n - 1 angles");
  }
  for (double a : params) {
    if (!std::isfinite(a)) throw Error(Errc::invalid_params, "non-finite generator angle");
  }
}

LoaderParams splits_from_angles(std::span<const double> angles) {
  LoaderParams params;
  params.splits.reserve(angles.size());
  for (double phi : angles) {
    const double c = std::cos(phi);
    params.splits.push_back(std::clamp(c * c, 0.0, 1.0));
  }
  return params;
}

Genome angles_from_splits(const LoaderParams& params) {
  Genome angles;
  angles.reserve(params.splits.size());
  for (double p : params.splits) angles.push_back(std::acos(std::sqrt(std::clamp(p, 0.0, 1.0))));
  return angles;
}

Distribution generate_distribution(const GeneratorAnsatz& ansatz, std::uint64_t seed) {
  ansatz.validate();
  const CircuitUnitary loader = build_loader(splits_from_angles(ansatz.params), ansatz.n);
  const UnaryState state = loader.apply(initial_state(ansatz.n));

  Distribution dist(ansatz.n);
  if (ansatz.shot_budget == 0) {
    for (std::size_t i = 0; i < ansatz.n; ++i) dist[i] = std::norm(state.amp(i, 0));
    return dist;
  }
  const auto counts = sample_shots(state, ansatz.shot_budget, seed);
  const double shots = static_cast<double>(ansatz.shot_budget);
  for (std::size_t i = 0; i < ansatz.n; ++i) {
    dist[i] = static_cast<double>(counts[slot_index(i, 0)]) / shots;
  }
  return dist;
}

double l2_norm(std::span<const double> fake, std::span<const double> real) {
  if (fake.size() != real.size()) throw Error(Errc::dimension_mismatch, "l2 of unequal lengths");
  double ss = 0.0;
  for (std::size_t i = 0; i < fake.size(); ++i) ss += (real[i] - fake[i]) * (real[i] - fake[i]);
  return std::sqrt(ss);
}

CriticNet::CriticNet(std::vector<std::size_t> layer_sizes, double clip_bound, Activation activation)
    : sizes_(std::move(layer_sizes)), clip_bound_(clip_bound), activation_(activation) {
  if (sizes_.size() < 2 || sizes_.back() != 1) {
    throw Error(Errc::invalid_params, "critic layers must end in a single output");
  }
  if (std::find(sizes_.begin(), sizes_.end(), 0u) != sizes_.end()) {
    throw Error(Errc::invalid_params, "critic layer of width 0");
  }
  if (!(clip_bound_ > 0.0)) throw Error(Errc::invalid_params, "clip_bound must be > 0");
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(sizes_[l]);
    const auto cols = static_cast<Eigen::Index>(sizes_[l - 1]);
    layers_.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)});
  }
}

CriticNet CriticNet::random(std::vector<std::size_t> layer_sizes, double clip_bound,
                            std::uint64_t seed, Activation activation) {
  CriticNet net(std::move(layer_sizes), clip_bound, activation);
  Rng rng = make_rng(seed, Stream::gan_critic);
  std::uniform_real_distribution<double> uniform(-clip_bound, clip_bound);
  for (Layer& layer : net.layers_) {
    for (Eigen::Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = uniform(rng);
  }
  return net;
}

Eigen::VectorXd CriticNet::activate(const Eigen::VectorXd& z) const {
  if (activation_ == Activation::tanh) return z.array().tanh();
  // log(1 + e^z) without overflow for large z.
  return z.array().max(0.0) + (-z.array().abs()).exp().log1p();
}

Eigen::VectorXd CriticNet::activation_slope(const Eigen::VectorXd& z) const {
  if (activation_ == Activation::tanh) return 1.0 - z.array().tanh().square();
  return 1.0 / (1.0 + (-z.array()).exp());
}

double CriticNet::score(std::span<const double> x) const {
  if (x.size() != sizes_.front()) {
    throw Error(Errc::dimension_mismatch, "critic input has wrong length");
  }
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weight * a + layers_[l].bias;
    a = (l + 1 < layers_.size()) ? activate(z) : z;
  }
  return a(0);
}

double CriticNet::objective(const Batch& real, const Batch& fake) const {
  if (real.empty() || fake.empty()) throw Error(Errc::invalid_params, "empty critic batch");
  double r = 0.0;
  for (const auto& x : real) r += score(x);
  double f = 0.0;
  for (const auto& x : fake) f += score(x);
  return r / static_cast<double>(real.size()) - f / static_cast<double>(fake.size());
}

void CriticNet::accumulate_gradient(std::span<const double> x, double sign,
                                    Eigen::VectorXd& grad) const {
  // acts[l] feeds layer l; pre[l] is layer l's pre-activation.
  std::vector<Eigen::VectorXd> acts;
  std::vector<Eigen::VectorXd> pre;
  acts.reserve(layers_.size() + 1);
  pre.reserve(layers_.size());
  acts.emplace_back(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    pre.push_back(layers_[l].weight * acts.back() + layers_[l].bias);
    acts.push_back((l + 1 < layers_.size()) ? activate(pre.back()) : pre.back());
  }

  // Offsets of each layer's block inside the flat parameter vector.
  std::vector<Eigen::Index> offset(layers_.size());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offset[l] = pos;
    pos += layers_[l].weight.size() + layers_[l].bias.size();
  }

  Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, sign);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const Eigen::VectorXd& input = acts[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offset[l], layer.weight.rows(), layer.weight.cols());
    gw.noalias() += delta * input.transpose();
    grad.segment(offset[l] + layer.weight.size(), layer.bias.size()) += delta;
    if (l > 0) {
      delta = (layer.weight.transpose() * delta).array() * activation_slope(pre[l - 1]).array();
    }
  }
}

Eigen::VectorXd CriticNet::objective_gradient(const Batch& real, const Batch& fake) const {
  if (real.empty() || fake.empty()) throw Error(Errc::invalid_params, "empty critic batch");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count()));
  const double wr = 1.0 / static_cast<double>(real.size());
  const double wf = -1.0 / static_cast<double>(fake.size());
  for (const auto& x : real) {
    if (x.size() != input_size()) throw Error(Errc::dimension_mismatch, "real sample length");
    accumulate_gradient(x, wr, grad);
  }
  for (const auto& x : fake) {
    if (x.size() != input_size()) throw Error(Errc::dimension_mismatch, "fake sample length");
    accumulate_gradient(x, wf, grad);
  }
  return grad;
}

std::size_t CriticNet::parameter_count() const {
  std::size_t count = 0;
  for (const Layer& layer : layers_) {
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return count;
}

Eigen::VectorXd CriticNet::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (const Layer& layer : layers_) {
    flat.segment(pos, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    pos += layer.weight.size();
    flat.segment(pos, layer.bias.size()) = layer.bias;
    pos += layer.bias.size();
  }
  return flat;
}

void CriticNet::set_parameters(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw Error(Errc::dimension_mismatch, "parameter vector has wrong length");
  }
  Eigen::Index pos = 0;
  for (Layer& layer : layers_) {
    Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) =
        flat.segment(pos, layer.weight.size());
    pos += layer.weight.size();
    layer.bias = flat.segment(pos, layer.bias.size());
    pos += layer.bias.size();
  }
}

double CriticNet::max_abs_weight() const {
  double m = 0.0;
  for (const Layer& layer : layers_) {
    m = std::max({m, layer.weight.cwiseAbs().maxCoeff(), layer.bias.cwiseAbs().maxCoeff()});
  }
  return m;
}

void CriticNet::clip() {
  for (Layer& layer : layers_) {
    layer.weight = layer.weight.cwiseMax(-clip_bound_).cwiseMin(clip_bound_);
    layer.bias = layer.bias.cwiseMax(-clip_bound_).cwiseMin(clip_bound_);
  }
}

double critic_score(const CriticNet& net, std::span<const double> dist) { return net.score(dist); }

CriticNet critic_update(CriticNet net, const Batch& real, const Batch& fake, double lr) {
  const Eigen::VectorXd grad = net.objective_gradient(real, fake);
  net.set_parameters(net.parameters() + lr * grad);
  net.clip();
  return net;
}

void TrainConfig::validate() const {
  if (population_size < 2) throw Error(Errc::invalid_params, "population_size must be >= 2");
  if (!(elite_fraction > 0.0 && elite_fraction < 1.0)) {
    throw Error(Errc::invalid_params, "elite_fraction must lie in (0, 1)");
  }
  if (tournament_size < 1) throw Error(Errc::invalid_params, "tournament_size must be >= 1");
  if (!(mutation_std >= 0.0)) throw Error(Errc::invalid_params, "mutation_std must be >= 0");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw Error(Errc::invalid_params, "crossover_rate must lie in [0, 1]");
  }
  if (generations < 1) throw Error(Errc::invalid_params, "generations must be >= 1");
  if (!(critic_learning_rate > 0.0)) {
    throw Error(Errc::invalid_params, "critic_learning_rate must be > 0");
  }
  if (!(clip_bound > 0.0)) throw Error(Errc::invalid_params, "clip_bound must be > 0");
  if (!(real_jitter >= 0.0)) throw Error(Errc::invalid_params, "real_jitter must be >= 0");
}

Population evolve_generation(const Population& population, std::span<const double> fitness,
                             const TrainConfig& config, std::uint64_t seed) {
  if (population.size() != config.population_size || fitness.size() != population.size()) {
    throw Error(Errc::dimension_mismatch, "population/fitness size differs from config");
  }
  const std::size_t size = population.size();
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

  const auto elites = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(config.elite_fraction * static_cast<double>(size))), 1,
      size - 1);

  Population next;
  next.reserve(size);
  for (std::size_t k = 0; k < elites; ++k) next.push_back(population[order[k]]);

  Rng rng = make_rng(seed, Stream::gan_evolve);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (next.size() < size) {
    const Genome& mother = population[tournament(fitness, config.tournament_size, rng)];
    const Genome& father = population[tournament(fitness, config.tournament_size, rng)];
    Genome child = mother;
    if (unit(rng) < config.crossover_rate) {
      for (std::size_t g = 0; g < child.size(); ++g) {
        if (unit(rng) < 0.5) child[g] = father[g];
      }
    }
    if (config.mutation_std > 0.0) {
      std::normal_distribution<double> gauss(0.0, config.mutation_std);
      for (double& gene : child) gene += gauss(rng);
    }
    next.push_back(std::move(child));
  }
  return next;
}

GanHistory train_gan(std::span<const double> target, const TrainConfig& config) {
  config.validate();
  const std::size_t n = target.size();
  if (n < 2) throw Error(Errc::invalid_n, "target needs n >= 2 bins");
  const double total = std::accumulate(target.begin(), target.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw Error(Errc::invalid_params, "target must sum to 1");

  std::vector<std::size_t> sizes{n};
  sizes.insert(sizes.end(), config.critic_hidden.begin(), config.critic_hidden.end());
  sizes.push_back(1);
  CriticNet critic =
      CriticNet::random(sizes, config.clip_bound, config.seed, config.critic_activation);

  Population population(config.population_size, Genome(n - 1));
  {
    Rng rng = make_rng(config.seed, Stream::gan_init);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi / 2);
    for (Genome& genome : population) {
      for (double& gene : genome) gene = angle(rng);
    }
  }

  GanHistory history;
  history.best_l2 = std::numeric_limits<double>::infinity();
  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    Batch fakes;
    fakes.reserve(population.size());
    for (std::size_t i = 0; i < population.size(); ++i) {
      fakes.push_back(generate_distribution({n, population[i], config.shot_budget},
                                            derive_seed(config.seed, Stream::gan_fake, gen, i)));
    }

    Batch reals;
    for (std::size_t step = 0; step < config.critic_steps_per_generation; ++step) {
      Rng rng = make_rng(config.seed, Stream::gan_real, gen, step);
      reals.clear();
      for (std::size_t k = 0; k < population.size(); ++k) {
        reals.push_back(jittered(target, config.real_jitter, rng));
      }
      critic = critic_update(std::move(critic), reals, fakes, config.critic_learning_rate);
    }
    if (reals.empty()) {
      Rng rng = make_rng(config.seed, Stream::gan_real, gen, 0);
      for (std::size_t k = 0; k < population.size(); ++k) {
        reals.push_back(jittered(target, config.real_jitter, rng));
      }
    }

    std::vector<double> fitness(population.size());
    std::vector<double> real_scores;
    for (const auto& x : reals) real_scores.push_back(critic.score(x));

    GenerationLog log;
    log.generation = gen;
    log.l2_current = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < population.size(); ++i) {
      fitness[i] = critic.score(fakes[i]);
      const double l2 = l2_norm(fakes[i], target);
      log.l2_current = std::min(log.l2_current, l2);
      if (l2 < history.best_l2) {
        history.best_l2 = l2;
        history.best_params = population[i];
      }
    }
    log.l2 = history.best_l2;
    log.e_real = mean(real_scores);
    log.e_fake = mean(fitness);
    log.best_params = history.best_params;
    history.generations.push_back(std::move(log));

    if (gen + 1 < config.generations) {
      population = evolve_generation(population, fitness, config,
                                     derive_seed(config.seed, Stream::gan_evolve, gen));
    }
  }
  return history;
}

void GanHistory::write_csv(std::ostream& out) const {
  out << "generation,l2,e_real,e_fake\n";
  const auto old_precision = out.precision(17);
  for (const GenerationLog& g : generations) {
    out << g.generation << ',' << g.l2 << ',' << g.e_real << ',' << g.e_fake << '\n';
  }
  out.precision(old_precision);
}

void write_params(std::ostream& out, const GanHistory& history, std::size_t n) {
  nlohmann::json doc;
  doc["n"] = n;
  doc["angles"] = history.best_params;
  doc["splits"] = splits_from_angles(history.best_params).splits;
  doc["l2"] = history.best_l2;
  out << doc.dump(2) << '\n';
}

GeneratorAnsatz read_params(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_params, std::string("generator parameter file: ") + e.what());
  }
  if (!doc.contains("n") || !doc.contains("angles")) {
    throw Error(Errc::invalid_params, "generator parameter file needs \"n\" and \"angles\"");
  }
  GeneratorAnsatz ansatz;
  ansatz.n = doc.at("n").get<std::size_t>();
  ansatz.params = doc.at("angles").get<Genome>();
  ansatz.validate();
  return ansatz;
}

Distribution normal_target(std::size_t n, double coverage) {
  if (n < 2) throw Error(Errc::invalid_n, "target needs n >= 2 bins");
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw Error(Errc::invalid_params, "coverage must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> normal;
  const double hi = boost::math::quantile(boost::math::complement(normal, 0.5 * (1.0 - coverage)));
  const double width = 2.0 * hi / static_cast<double>(n);
  Distribution probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = -hi + width * static_cast<double>(i);
    probs[i] = boost::math::cdf(normal, a + width) - boost::math::cdf(normal, a);
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace unary_pricing
