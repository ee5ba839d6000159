#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxyforge/complexity.hpp"
#include "proxyforge/dataset.hpp"
#include "proxyforge/trainer.hpp"

namespace proxyforge {

/// Everything one `train` or `eval` run needs. Parsed from a flat JSON
/// object; see README for the key list.
struct ExperimentConfig {
  std::string preset;             // loss preset, empty when none
  std::string experiment = "desk";
  DatasetConfig dataset{};
  TrainConfig train{};
  std::uint64_t seed = 0;
};

/// Names accepted by the "preset" key.
std::vector<std::string> loss_preset_names();
/// Names accepted by the "experiment" key.
std::vector<std::string> experiment_names();

/// Applies defaults, then the experiment preset, then the loss preset, then
/// explicit keys. `seed_override` replaces the "seed" key. Throws ConfigError
/// on unknown keys, wrong types, invalid enum values or a missing seed.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         std::optional<std::uint64_t> seed_override = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override = {});

/// Reads a JSON document, mapping I/O and syntax failures to ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

struct ComplexityGrid {
  std::vector<SweepSpec> sweeps;
};

ComplexityGrid parse_complexity_grid(const nlohmann::json& doc,
                                     std::optional<std::uint64_t> seed_override = {});

}  // namespace proxyforge
