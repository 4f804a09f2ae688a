#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "crosslight/estimation.hpp"
#include "crosslight/scenario.hpp"

namespace crosslight {

/// Reads a scenario file, applies `key=value` overrides (dotted keys, values in config syntax
/// or bare words) and validates the result. Unknown keys are errors.
ScenarioConfig parse_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});
ScenarioConfig parse_config_text(std::string_view text, std::string_view source,
                                 std::span<const std::string> overrides = {},
                                 const std::filesystem::path& base_dir = {});

// Applies CROSSLIGHT_SEED when set.
void apply_seed_env(ScenarioConfig& cfg);
std::uint64_t parse_seed(std::string_view text, std::string_view source);

using FitPair = std::array<std::optional<FitResult>, 2>;
FitPair read_params_text(std::string_view text, std::string_view source);
FitPair read_params_file(const std::filesystem::path& path);

std::string thresholds_report(const Pair& thresholds, double kappa, int calibration_cycles);
Pair read_thresholds_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace crosslight
