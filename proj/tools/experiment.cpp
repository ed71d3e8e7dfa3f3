#include "experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "unary_pricing/error.hpp"

namespace unary_pricing::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("field '" + key + "': cannot read '" + value + "' as " + want);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  if (trim(s).empty()) return parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) parts.push_back(trim(item));
  return parts;
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    bad_value(key, raw, std::is_integral_v<T> ? "a non-negative integer" : "a number");
  }
  return value;
}

// Shortest representation that reads back to the same value.
template <class T>
std::string format_number(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void parse_into(const std::string& key, const std::string& s, double& out) {
  out = parse_number<double>(key, s);
}
void parse_into(const std::string& key, const std::string& s, std::uint64_t& out) {
  out = parse_number<std::uint64_t>(key, s);
}
void parse_into(const std::string& key, const std::string& s, std::uint32_t& out) {
  out = parse_number<std::uint32_t>(key, s);
}
void parse_into(const std::string&, const std::string& s, std::string& out) { out = trim(s); }
void parse_into(const std::string& key, const std::string& s, std::vector<double>& out) {
  out.clear();
  for (const auto& item : split_list(s)) out.push_back(parse_number<double>(key, item));
}
void parse_into(const std::string& key, const std::string& s, std::vector<std::size_t>& out) {
  out.clear();
  for (const auto& item : split_list(s)) out.push_back(parse_number<std::size_t>(key, item));
}
// Comma list whose items may be ranges, e.g. "0..50" or "0,1,2,4..8".
void parse_into(const std::string& key, const std::string& s, std::vector<std::uint32_t>& out) {
  out.clear();
  for (const auto& item : split_list(s)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_number<std::uint32_t>(key, item));
      continue;
    }
    const auto lo = parse_number<std::uint32_t>(key, item.substr(0, dots));
    const auto hi = parse_number<std::uint32_t>(key, item.substr(dots + 2));
    if (hi < lo) bad_value(key, item, "an increasing range");
    for (auto m = lo; m <= hi; ++m) out.push_back(m);
  }
}
void parse_into(const std::string& key, const std::string& s, Activation& out) {
  const auto v = trim(s);
  if (v == "tanh") {
    out = Activation::tanh;
  } else if (v == "softplus") {
    out = Activation::softplus;
  } else {
    bad_value(key, s, "tanh or softplus");
  }
}

std::string format_value(double v) { return format_number(v); }
std::string format_value(std::uint64_t v) { return format_number(v); }
std::string format_value(std::uint32_t v) { return format_number(v); }
std::string format_value(const std::string& v) { return v; }
std::string format_value(Activation a) { return a == Activation::tanh ? "tanh" : "softplus"; }
template <class T>
std::string format_value(const std::vector<T>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_number(v[k]);
  return out;
}
std::string format_value(const std::vector<std::uint32_t>& v) {
  bool contiguous = v.size() > 2;
  for (std::size_t k = 1; contiguous && k < v.size(); ++k) contiguous = v[k] == v[k - 1] + 1;
  if (contiguous) return format_number(v.front()) + ".." + format_number(v.back());
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_number(v[k]);
  return out;
}

struct Field {
  std::string key;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class Access>
Field field(std::string key, std::string help, Access access) {
  return {key, std::move(help),
          [access, key](ExperimentConfig& c, const std::string& v) { parse_into(key, v, access(c)); },
          [access](const ExperimentConfig& c) { return format_value(access(c)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      field("run.mode", "price, converge, gan-train or mc-baseline (required)",
            [](auto& c) -> auto& { return c.mode; }),
      field("run.seed", "master seed for every random stream", [](auto& c) -> auto& { return c.seed; }),
      field("run.output_dir", "directory receiving the run artifacts",
            [](auto& c) -> auto& { return c.output_dir; }),
      field("market.s0", "spot price", [](auto& c) -> auto& { return c.market.s0; }),
      field("market.r", "risk-free rate", [](auto& c) -> auto& { return c.market.r; }),
      field("market.sigma", "volatility", [](auto& c) -> auto& { return c.market.sigma; }),
      field("market.t", "maturity in years", [](auto& c) -> auto& { return c.market.t; }),
      field("market.strike", "call strike K", [](auto& c) -> auto& { return c.market.strike; }),
      field("distribution.n_bins",
            "number of price bins; required unless prices/probs or params_file supply it",
            [](auto& c) -> auto& { return c.n_bins; }),
      field("distribution.coverage", "central probability mass spanned by the bins",
            [](auto& c) -> auto& { return c.coverage; }),
      field("distribution.prices", "explicit bin prices, comma separated (overrides the market model)",
            [](auto& c) -> auto& { return c.prices; }),
      field("distribution.probs", "explicit bin probabilities matching distribution.prices",
            [](auto& c) -> auto& { return c.probs; }),
      field("distribution.params_file",
            "generator parameters from gan-train (best_params.json) loaded on the market grid",
            [](auto& c) -> auto& { return c.params_file; }),
      field("ae.depths", "amplification depths, e.g. 0..50 or 0,1,2,4", [](auto& c) -> auto& { return c.depths; }),
      field("ae.shots", "shots per depth per repeat", [](auto& c) -> auto& { return c.shots; }),
      field("ae.repeats", "independent repeats", [](auto& c) -> auto& { return c.repeats; }),
      field("ae.confidence", "confidence level of reported intervals",
            [](auto& c) -> auto& { return c.confidence; }),
      field("ae.angle_noise", "std of Gaussian noise on every circuit angle (0 = ideal)",
            [](auto& c) -> auto& { return c.angle_noise; }),
      field("gan.target", "lognormal (market model) or normal", [](auto& c) -> auto& { return c.gan_target; }),
      field("gan.population_size", "individuals per generation",
            [](auto& c) -> auto& { return c.gan.population_size; }),
      field("gan.elite_fraction", "fraction copied unchanged", [](auto& c) -> auto& { return c.gan.elite_fraction; }),
      field("gan.tournament_size", "tournament size for parent selection",
            [](auto& c) -> auto& { return c.gan.tournament_size; }),
      field("gan.mutation_std", "Gaussian mutation std on every gene (radians)",
            [](auto& c) -> auto& { return c.gan.mutation_std; }),
      field("gan.crossover_rate", "probability a child mixes two parents",
            [](auto& c) -> auto& { return c.gan.crossover_rate; }),
      field("gan.critic_steps", "critic updates per generation",
            [](auto& c) -> auto& { return c.gan.critic_steps_per_generation; }),
      field("gan.critic_learning_rate", "critic gradient ascent step",
            [](auto& c) -> auto& { return c.gan.critic_learning_rate; }),
      field("gan.generations", "training generations", [](auto& c) -> auto& { return c.gan.generations; }),
      field("gan.critic_hidden", "hidden layer widths", [](auto& c) -> auto& { return c.gan.critic_hidden; }),
      field("gan.clip_bound", "critic weight clipping bound", [](auto& c) -> auto& { return c.gan.clip_bound; }),
      field("gan.critic_activation", "tanh or softplus",
            [](auto& c) -> auto& { return c.gan.critic_activation; }),
      field("gan.real_jitter", "std of the jitter on real samples",
            [](auto& c) -> auto& { return c.gan.real_jitter; }),
      field("gan.shot_budget", "detections per fake sample (0 = exact probabilities)",
            [](auto& c) -> auto& { return c.gan.shot_budget; }),
      field("mc.n_paths", "Monte Carlo paths", [](auto& c) -> auto& { return c.mc_paths; }),
      field("mc.steps", "time steps per path (1 = exact terminal law)",
            [](auto& c) -> auto& { return c.mc_steps; }),
  };
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown field '" + key + "'");
}

// Turns a module Error raised while validating into a field diagnostic.
template <class F>
void check_section(const std::string& section, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw ConfigError("section [" + section + "]: " + e.what());
  }
}

void ensure(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string csv(double v) { return format_number(v); }

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
}

json interval(const Interval& i) { return json::array({i.lo, i.hi}); }

std::vector<std::string> run_price(const ExperimentConfig& config, const fs::path& dir, json& summary) {
  const auto dist = build_distribution(config);
  const AESchedule schedule{config.depths, config.shots, config.repeats};
  AEOptions options;
  options.recovery.confidence = config.confidence;
  options.angle_noise = config.angle_noise;
  const auto res = estimate_payoff(dist, config.market.strike, schedule, config.seed, options);

  std::ofstream out(dir / "results.csv");
  out << "m,hits,shots,frequency,wilson_lo,wilson_hi\n";
  for (const auto& r : res.records) {
    out << r.m << ',' << r.hits << ',' << r.shots << ',' << csv(r.frequency()) << ','
        << csv(r.wilson.lo) << ',' << csv(r.wilson.hi) << '\n';
  }
  const double discount = std::exp(-config.market.r * config.market.t);
  summary["n_bins"] = dist.size();
  summary["payoff_hat"] = res.payoff_hat;
  summary["payoff_ci"] = interval(res.payoff_ci);
  summary["price_hat"] = discount * res.payoff_hat;
  summary["price_ci"] = json::array({discount * res.payoff_ci.lo, discount * res.payoff_ci.hi});
  summary["alpha_hat"] = res.alpha_hat;
  summary["alpha_ci"] = interval(res.alpha_ci);
  summary["oracle_calls"] = res.oracle_calls;
  summary["exact_discrete_payoff"] = expected_payoff_discrete(dist, config.market.strike);
  return {"results.csv"};
}

std::vector<std::string> run_converge(const ExperimentConfig& config, const fs::path& dir,
                                      json& summary) {
  for (std::size_t k = 0; k < config.depths.size(); ++k) {
    ensure(config.depths[k] == k, "field 'ae.depths': converge needs the linear schedule 0..M");
  }
  ensure(config.depths.size() >= 2, "field 'ae.depths': converge needs at least depths 0..1");
  const auto dist = build_distribution(config);
  AEOptions options;
  options.recovery.confidence = config.confidence;
  options.angle_noise = config.angle_noise;
  const auto table = convergence_study(dist, config.market.strike, config.depths.back(), config.shots,
                                       config.repeats, config.seed, options);

  std::ofstream out(dir / "results.csv");
  out << "depth,m,oracle_calls,payoff_mean,payoff_std,abs_error,mc_error\n";
  for (const auto& r : table.rows) {
    out << r.depth << ',' << r.m << ',' << r.oracle_calls << ',' << csv(r.payoff_mean) << ','
        << csv(r.payoff_std) << ',' << csv(r.abs_error) << ',' << csv(r.mc_error) << '\n';
  }
  summary["n_bins"] = dist.size();
  summary["exact_discrete_payoff"] = table.exact_payoff;
  summary["payoff_hat"] = table.rows.back().payoff_mean;
  summary["payoff_std"] = table.rows.back().payoff_std;
  summary["oracle_calls"] = table.rows.back().oracle_calls;
  summary["ae_slope"] = table.ae_slope();
  summary["mc_slope"] = table.mc_slope();
  summary["std_ratio_first_last"] =
      table.rows.back().payoff_std > 0 ? table.rows.front().payoff_std / table.rows.back().payoff_std : 0.0;
  return {"results.csv"};
}

std::vector<std::string> run_gan(const ExperimentConfig& config, const fs::path& dir, json& summary) {
  const Distribution target =
      config.gan_target == "normal"
          ? normal_target(config.n_bins, config.coverage)
          : discretize(config.market, config.n_bins, config.coverage).probs();
  TrainConfig train = config.gan;
  train.seed = config.seed;
  const auto history = train_gan(target, train);

  std::ofstream csv_out(dir / "results.csv");
  history.write_csv(csv_out);
  std::ofstream params_out(dir / "best_params.json");
  write_params(params_out, history, config.n_bins);

  summary["target"] = config.gan_target;
  summary["target_probs"] = target;
  summary["l2_final"] = history.best_l2;
  summary["generations"] = history.generations.size();
  return {"results.csv", "best_params.json"};
}

std::vector<std::string> run_mc(const ExperimentConfig& config, const fs::path& dir, json& summary) {
  const auto res = mc_price(config.market, config.mc_paths, config.seed, {config.mc_steps});
  std::ofstream out(dir / "results.csv");
  out << "n_paths,seed,estimate,std_error\n";
  out << res.n_paths << ',' << res.seed << ',' << csv(res.estimate) << ',' << csv(res.std_error) << '\n';
  const double discount = std::exp(-config.market.r * config.market.t);
  summary["payoff_hat"] = res.estimate;
  summary["std_error"] = res.std_error;
  summary["price_hat"] = discount * res.estimate;
  summary["n_paths"] = res.n_paths;
  return {"results.csv"};
}

}  // namespace

Mode ExperimentConfig::parsed_mode() const {
  if (mode == "price") return Mode::price;
  if (mode == "converge") return Mode::converge;
  if (mode == "gan-train") return Mode::gan_train;
  if (mode == "mc-baseline") return Mode::mc_baseline;
  if (mode.empty()) throw ConfigError("missing required field 'run.mode'");
  throw ConfigError("field 'run.mode': unknown mode '" + mode + "'");
}

void ExperimentConfig::validate() const {
  const Mode m = parsed_mode();
  check_section("market", [&] { market.validate(); });
  ensure(coverage > 0.0 && coverage < 1.0, "field 'distribution.coverage' must lie in (0, 1)");
  ensure(prices.size() == probs.size(),
         "fields 'distribution.prices' and 'distribution.probs' differ in length");

  const bool explicit_dist = !prices.empty();
  switch (m) {
    case Mode::price:
    case Mode::converge:
      ensure(explicit_dist || n_bins > 0 || !params_file.empty(),
             "missing required field 'distribution.n_bins'");
      check_section("ae", [&] { AESchedule{depths, shots, repeats}.validate(); });
      ensure(confidence > 0.0 && confidence < 1.0, "field 'ae.confidence' must lie in (0, 1)");
      ensure(angle_noise >= 0.0, "field 'ae.angle_noise' must be >= 0");
      break;
    case Mode::gan_train:
      ensure(n_bins >= 2, n_bins == 0 ? "missing required field 'distribution.n_bins'"
                                      : "field 'distribution.n_bins' must be >= 2");
      ensure(gan_target == "lognormal" || gan_target == "normal",
             "field 'gan.target' must be lognormal or normal");
      check_section("gan", [&] { gan.validate(); });
      break;
    case Mode::mc_baseline:
      ensure(mc_paths >= 2, "field 'mc.n_paths' must be >= 2");
      ensure(mc_steps >= 1, "field 'mc.steps' must be >= 1");
      break;
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_field(ExperimentConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, value);
}

std::string get_field(const ExperimentConfig& config, const std::string& key) {
  return find_field(key).get(config);
}

ExperimentConfig load_config(const fs::path& file) {
  if (!fs::exists(file)) throw ConfigError(file.string() + ": no such file");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(file.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(file.string() + ": key '" + section + "' must sit inside a [section]");
    }
    for (const auto& [key, value] : body) {
      set_field(config, section + "." + key, value.data());
    }
  }
  return config;
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const auto s = f.key.substr(0, dot);
    if (s != section) {
      out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
}

void write_reference(std::ostream& out) {
  const ExperimentConfig defaults;
  out << "# unary_price configuration reference\n\n"
      << "Config files are INI: `[section]` headers followed by `key = value` lines; `;` starts a\n"
      << "comment. Every key can also be given on the command line as `section.key=value`, which\n"
      << "overrides the file. `--mode`, `--seed` and `--out` override `run.mode`, `run.seed` and\n"
      << "`run.output_dir`. Lists are comma separated; `ae.depths` also accepts ranges `a..b`.\n\n"
      << "| key | default | meaning |\n|---|---|---|\n";
  for (const auto& f : fields()) {
    const auto value = f.get(defaults);
    out << "| `" << f.key << "` | " << (value.empty() ? "" : "`" + value + "`") << " | " << f.help << " |\n";
  }
}

DiscreteDistribution build_distribution(const ExperimentConfig& config) {
  if (!config.prices.empty()) return {config.prices, config.probs};
  if (config.params_file.empty()) return discretize(config.market, config.n_bins, config.coverage);

  std::ifstream in(config.params_file);
  if (!in) throw ConfigError("field 'distribution.params_file': cannot open " + config.params_file);
  const auto ansatz = read_params(in);
  if (config.n_bins != 0 && config.n_bins != ansatz.n) {
    throw ConfigError("field 'distribution.n_bins' is " + std::to_string(config.n_bins) +
                      " but the generator file has n = " + std::to_string(ansatz.n));
  }
  const auto grid = discretize(config.market, ansatz.n, config.coverage);
  return {grid.prices(), generate_distribution(ansatz, 0)};
}

std::string run(const ExperimentConfig& config, const std::vector<std::string>& command_line) {
  config.validate();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);

  json summary;
  summary["mode"] = config.mode;
  summary["seed"] = config.seed;
  std::vector<std::string> outputs;
  switch (config.parsed_mode()) {
    case Mode::price: outputs = run_price(config, dir, summary); break;
    case Mode::converge: outputs = run_converge(config, dir, summary); break;
    case Mode::gan_train: outputs = run_gan(config, dir, summary); break;
    case Mode::mc_baseline: outputs = run_mc(config, dir, summary); break;
  }
  write_json(dir / "summary.json", summary);

  {
    std::ofstream out(dir / "config.ini");
    write_config(out, config);
  }
  json resolved = json::object();
  for (const auto& f : fields()) resolved[f.key] = f.get(config);
  outputs.insert(outputs.end(), {"summary.json", "config.ini", "manifest.json"});
  write_json(dir / "manifest.json", {{"tool", "unary_price"},
                                     {"version", UNARY_PRICING_VERSION},
                                     {"mode", config.mode},
                                     {"seed", config.seed},
                                     {"config", resolved},
                                     {"rerun", "unary_price --config config.ini"},
                                     {"command_line", command_line},
                                     {"outputs", outputs}});

  std::ostringstream line;
  line << config.mode << ": ";
  if (summary.contains("l2_final")) {
    line << "l2 " << summary["l2_final"].get<double>();
  } else if (summary.contains("std_error")) {
    line << "payoff " << summary["payoff_hat"].get<double>() << " +/- " << summary["std_error"].get<double>();
  } else {
    line << "payoff " << summary["payoff_hat"].get<double>();
    if (summary.contains("payoff_ci")) {
      line << " [" << summary["payoff_ci"][0].get<double>() << ", " << summary["payoff_ci"][1].get<double>() << "]";
    }
  }
  line << " -> " << dir.string();
  return line.str();
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Option pricing on a unary-encoded circuit simulator"};
  std::string config_file, mode, output_dir;
  std::uint64_t seed = 0;
  bool print_defaults = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_file, "INI configuration file");
  auto* mode_opt = app.add_option("--mode", mode, "price | converge | gan-train | mc-baseline");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* out_opt = app.add_option("--out", output_dir, "output directory");
  app.add_flag("--print-defaults", print_defaults, "print the configuration reference and exit");
  app.add_option("overrides", overrides, "section.key=value overrides");
  app.set_version_flag("--version", UNARY_PRICING_VERSION);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e, out, err);
    return status == 0 ? 0 : 2;
  }
  if (print_defaults) {
    write_reference(out);
    return 0;
  }

  std::vector<std::string> command_line(argv, argv + argc);
  ExperimentConfig config;
  try {
    if (!config_file.empty()) config = load_config(config_file);
    for (const auto& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("override '" + item + "' is not key=value");
      set_field(config, trim(item.substr(0, eq)), item.substr(eq + 1));
    }
    if (*mode_opt) config.mode = mode;
    if (*seed_opt) config.seed = seed;
    if (*out_opt) config.output_dir = output_dir;
    config.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    out << run(config, command_line) << '\n';
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace unary_pricing::cli
