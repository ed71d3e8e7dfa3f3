#pragma once

// Experiment configuration and the four pipelines behind `unary_price`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "unary_pricing/amplitude_estimation.hpp"
#include "unary_pricing/gan.hpp"
#include "unary_pricing/market_model.hpp"

namespace unary_pricing::cli {

enum class Mode { price, converge, gan_train, mc_baseline };

/// Bad or missing configuration; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string mode;  // empty until set by file or flag
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  BsmParams market;

  // Distribution source, first match wins: explicit prices/probs, a trained
  // generator file, or the discretized log-normal.
  std::size_t n_bins = 0;
  double coverage = kDefaultCoverage;
  std::vector<double> prices;
  std::vector<double> probs;
  std::string params_file;

  std::vector<std::uint32_t> depths = AESchedule::linear(50).depths;
  std::uint64_t shots = 100;
  std::uint32_t repeats = 50;
  double confidence = 0.95;
  double angle_noise = 0.0;

  TrainConfig gan;
  std::string gan_target = "lognormal";

  std::uint64_t mc_paths = 100'000;
  std::uint32_t mc_steps = 1;

  Mode parsed_mode() const;
  /// Throws ConfigError naming the first missing or invalid field.
  void validate() const;
};

/// Keys of every field, in reference-page order.
std::vector<std::string> config_keys();

/// Apply `key=value`; throws ConfigError on unknown keys or bad values.
void set_field(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string get_field(const ExperimentConfig& config, const std::string& key);

/// Reads an INI file whose [section] key = value pairs form dotted keys.
ExperimentConfig load_config(const std::filesystem::path& file);

/// Resolved configuration as INI; loading it reproduces the run.
void write_config(std::ostream& out, const ExperimentConfig& config);

/// Markdown table of every key, its default and meaning.
void write_reference(std::ostream& out);

DiscreteDistribution build_distribution(const ExperimentConfig& config);

/// Runs the selected pipeline and writes results.csv, summary.json,
/// manifest.json and config.ini (plus best_params.json for gan-train) into
/// config.output_dir. Returns a one-line human summary.
std::string run(const ExperimentConfig& config, const std::vector<std::string>& command_line);

/// Full command-line entry point; returns the process exit status.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace unary_pricing::cli
