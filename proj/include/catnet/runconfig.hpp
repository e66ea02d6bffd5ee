#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "catnet/dataset.hpp"
#include "catnet/trainer.hpp"

namespace catnet {

// Bad user input (spec/config files, CLI usage). Maps to exit code 1;
// everything else maps to 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Synthetic dataset description plus the group split that accompanies it.
struct GenSpecConfig {
  SyntheticSpec spec;
  double train_fraction = 0.8;
  double validation_fraction = 0.0;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
};

GenSpecConfig parse_gen_spec(const nlohmann::json& j);
nlohmann::json gen_spec_to_json(const GenSpecConfig& cfg);

struct RunConfig {
  std::string dataset_path;                 // exclusive with `synthetic`
  std::optional<GenSpecConfig> synthetic;
  std::size_t initial_classes = 0;
  std::size_t increment = 0;
  std::size_t num_increments = 0;
  std::vector<std::uint32_t> class_order;   // empty means identity order
  RunOptions options;

  // Identity order is filled in once the dataset's class count is known.
  TaskSchedule bind_schedule(std::size_t dataset_classes) const;
};

RunConfig parse_run_config(const nlohmann::json& j);

// Canonical form: defaults filled, keys sorted, numbers in shortest
// round-trip form. Identical configs digest identically regardless of
// formatting or omitted defaults.
nlohmann::json canonical_run_config(const RunConfig& cfg);
std::string config_digest(const RunConfig& cfg);

std::string mode_name(Mode mode, std::size_t stream_index);
std::string method_name(Method method);

nlohmann::json load_json_file(const std::string& path);

}  // namespace catnet
