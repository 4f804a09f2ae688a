#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "crosslight/intersection.hpp"

namespace crosslight {

// Defaults used when a config omits a key.
namespace defaults {
inline constexpr double dt_s = 1.0;
inline constexpr double cycle_time_s = 60.0;
inline constexpr double horizon_s = 1800.0;
inline constexpr double min_green_s = 0.0;
inline constexpr double saturation_vph = 1800.0;
inline constexpr double f = 0.7;
inline constexpr double attack_start_s = 420.0;
inline constexpr double noise_window_s = 420.0;
inline constexpr double monitor_g = 1.0;
inline constexpr int residual_window = 3;
inline constexpr double kappa = 3.0;
inline constexpr int calibration_cycles = 20;
inline constexpr int warmup_cycles = 5;
inline constexpr double residual_factor = 1.5;
inline constexpr double residual_window_start_s = 300.0;
inline constexpr double residual_window_end_s = 420.0;
}  // namespace defaults

enum class ArrivalMode { deterministic, poisson };
enum class DetectorKind { none, model_based, threshold, both };
enum class DeltaRule { carryover, literal };

struct PairConfig {
    double intensity_vph = 700.0;
    double saturation_vph = defaults::saturation_vph;
    double k = 0.004;
    double beta = 0.5;
    double lambda = 0.0;
    double initial_queue = 0.0;
    double initial_occupancy = 0.0;
    double initial_green_s = 30.0;
    bool operator==(const PairConfig&) const = default;
};

struct NoiseSettings {
    double process_power_frac = 0.0;
    double meas_power_frac = 0.0;
    double calibration_window_s = defaults::noise_window_s;
    bool operator==(const NoiseSettings&) const = default;
};

struct AttackSettings {
    bool enabled = false;
    double start_time_s = defaults::attack_start_s;
    int target_pair = 0;  // zero-based; configs use 1 and 2
    bool falsify_reference = false;
    bool operator==(const AttackSettings&) const = default;
};

struct DetectorSettings {
    DetectorKind kind = DetectorKind::none;
    double g = defaults::monitor_g;
    int window = defaults::residual_window;
    double kappa = defaults::kappa;
    int calibration_cycles = defaults::calibration_cycles;
    int warmup_cycles = defaults::warmup_cycles;
    double residual_factor = defaults::residual_factor;
    double residual_window_start_s = defaults::residual_window_start_s;
    double residual_window_end_s = defaults::residual_window_end_s;
    std::optional<Pair> thresholds;
    bool retrain = false;
    bool operator==(const DetectorSettings&) const = default;
};

struct MitigationSettings {
    bool enabled = false;
    bool operator==(const MitigationSettings&) const = default;
};

struct ScenarioConfig {
    double horizon_s = defaults::horizon_s;
    double dt_s = defaults::dt_s;
    double cycle_time_s = defaults::cycle_time_s;
    double f = defaults::f;
    double min_green_s = defaults::min_green_s;
    double alpha = 0.0;
    std::array<PairConfig, 2> pairs{};
    ArrivalMode arrival_mode = ArrivalMode::poisson;
    DeltaRule delta_rule = DeltaRule::carryover;
    NoiseSettings noise;
    AttackSettings attack;
    DetectorSettings detector;
    MitigationSettings mitigation;
    std::uint64_t seed = 1;

    long long steps() const;
    long long steps_per_cycle() const;
    bool operator==(const ScenarioConfig&) const = default;
};

// Throws ConfigError with a dotted key path on the first violated invariant.
void validate(const ScenarioConfig& cfg);

bool uses_residual(DetectorKind k);
bool uses_threshold(DetectorKind k);

}  // namespace crosslight
