#pragma once

// JSON specs, named presets and experiment configuration.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fiberlab/actions.hpp"
#include "fiberlab/driving.hpp"
#include "fiberlab/fiber.hpp"

namespace fiberlab {

class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t max_horizon = 10'000'000;

struct SystemPreset {
  std::string name;
  MarkovChainSpec driving;
  FiberSystemSpec fiber;
};

inline AlphabetPtr binary_fiber_alphabet() { return make_alphabet({"0", "1"}); }

inline std::optional<SystemPreset> find_preset(std::string_view name) {
  if (name == "z2-uniform")
    return SystemPreset{"z2-uniform", z2_uniform_driving(), FiberSystemSpec::uniform(ActionKind::z2, binary_fiber_alphabet())};
  if (name == "f2-markov")
    return SystemPreset{"f2-markov", f2_markov_driving(), FiberSystemSpec::uniform(ActionKind::f2, binary_fiber_alphabet())};
  if (name == "free-monoid-uniform")
    return SystemPreset{"free-monoid-uniform", binary_uniform_driving(),
                        FiberSystemSpec::uniform(ActionKind::free_monoid, binary_fiber_alphabet())};
  return std::nullopt;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"free-monoid-uniform", "z2-uniform", "f2-markov"};
  return names;
}

namespace detail {

inline AlphabetPtr alphabet_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw config_error("alphabet must be an array");
  std::vector<std::string> symbols;
  for (const auto& s : j) symbols.push_back(s.is_string() ? s.get<std::string>() : s.dump());
  return make_alphabet(std::move(symbols));
}

inline SystemPreset preset_or_throw(const std::string& name) {
  auto p = find_preset(name);
  if (!p) throw config_error("unknown preset '" + name + "'");
  return std::move(*p);
}

}  // namespace detail

// {"alphabet": [...], "pi": [...], "Pi": [[...], ...]}
inline MarkovChainSpec driving_from_json(const nlohmann::json& j) {
  try {
    if (j.is_string()) return detail::preset_or_throw(j.get<std::string>()).driving;
    return MarkovChainSpec(detail::alphabet_from_json(j.at("alphabet")), j.at("pi").get<std::vector<double>>(),
                           j.at("Pi").get<std::vector<std::vector<double>>>());
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid driving spec: ") + e.what());
  }
}

inline nlohmann::json driving_to_json(const MarkovChainSpec& spec) {
  return {{"alphabet", spec.alphabet().symbols()}, {"pi", spec.pi()}, {"Pi", spec.transition_matrix()}};
}

// {"action": "z2", "alphabet": [...], "p": [...]}
inline FiberSystemSpec fiber_from_json(const nlohmann::json& j) {
  try {
    if (j.is_string()) return detail::preset_or_throw(j.get<std::string>()).fiber;
    return FiberSystemSpec(parse_action(j.at("action").get<std::string>()), detail::alphabet_from_json(j.at("alphabet")),
                           j.at("p").get<std::vector<double>>());
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid fiber spec: ") + e.what());
  }
}

inline nlohmann::json fiber_to_json(const FiberSystemSpec& spec) {
  return {{"action", std::string(action_name(spec.action()))}, {"alphabet", spec.alphabet().symbols()}, {"p", spec.p()}};
}

struct ExperimentConfig {
  std::string preset;  // empty for custom systems
  MarkovChainSpec driving;
  FiberSystemSpec fiber;
  std::vector<std::size_t> horizons;
  std::vector<std::size_t> block_lengths;
  std::vector<std::uint64_t> seeds;
  std::optional<double> tolerance;
  std::string output_path;
  std::string format;

  std::size_t max_horizon_requested() const { return horizons.empty() ? 0 : horizons.back(); }
};

inline ExperimentConfig config_from_preset(const std::string& name) {
  auto p = detail::preset_or_throw(name);
  ExperimentConfig c{p.name, std::move(p.driving), std::move(p.fiber), {100'000}, {8}, {1}, std::nullopt, {}, "csv"};
  return c;
}

// Checks that do not depend on the subcommand.
inline void validate(const ExperimentConfig& c) {
  try {
    check_compatible(c.fiber, c.driving);
  } catch (const std::exception& e) {
    throw config_error(e.what());
  }
  if (c.horizons.empty()) throw config_error("at least one horizon is required");
  for (std::size_t i = 0; i < c.horizons.size(); ++i) {
    if (c.horizons[i] > max_horizon) throw config_error("horizon exceeds the cap of 10^7");
    if (i > 0 && c.horizons[i] <= c.horizons[i - 1]) throw config_error("horizons must be strictly ascending");
  }
  if (c.block_lengths.empty()) throw config_error("at least one block length is required");
  for (std::size_t k : c.block_lengths)
    if (k == 0) throw config_error("block lengths must be positive");
  if (c.seeds.empty()) throw config_error("at least one seed is required");
  if (c.tolerance && !(*c.tolerance >= 0.0)) throw config_error("tolerance must be non-negative");
  if (c.format != "csv" && c.format != "json") throw config_error("format must be csv or json");
}

// Throws config_error when the codebook family for block length k would
// exceed the enumeration cap.
inline void check_block_cap(const ExperimentConfig& c, std::size_t k) {
  if (!bounded_power(c.driving.size() * c.fiber.size(), k, enumeration_cap))
    throw config_error("block length " + std::to_string(k) + " exceeds the |Theta x Lambda|^k <= 2^24 cap");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  try {
    ExperimentConfig c = j.contains("preset") ? config_from_preset(j.at("preset").get<std::string>())
                                              : config_from_preset("free-monoid-uniform");
    if (!j.contains("preset") && !(j.contains("driving") && j.contains("fiber")))
      throw config_error("config needs a preset or both driving and fiber");
    if (!j.contains("preset")) c.preset.clear();
    if (j.contains("driving")) {
      c.driving = driving_from_json(j.at("driving"));
      if (!j.at("driving").is_string()) c.preset.clear();
    }
    if (j.contains("fiber")) {
      c.fiber = fiber_from_json(j.at("fiber"));
      if (!j.at("fiber").is_string()) c.preset.clear();
    }
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    if (j.contains("block_lengths")) c.block_lengths = j.at("block_lengths").get<std::vector<std::size_t>>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
    if (j.contains("output")) {
      const auto& o = j.at("output");
      if (o.contains("path")) c.output_path = o.at("path").get<std::string>();
      if (o.contains("format")) c.format = o.at("format").get<std::string>();
    }
    validate(c);
    return c;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace fiberlab
