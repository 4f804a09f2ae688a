#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "crosslight/scenario.hpp"

namespace crosslight {

enum class Stream : std::uint64_t { arrivals_pair1 = 0, arrivals_pair2 = 1, process = 2, measurement = 3, training = 4 };

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, Stream stream);

int poisson_arrivals(double intensity, double dt, std::mt19937_64& rng);
double calibrate_noise(std::span<const double> reference, double power_frac);

// Alarm bits in StepRecord::alarms.
inline constexpr unsigned kResidualAlarm = 1u;
inline constexpr unsigned kThresholdAlarmPair1 = 2u;
inline constexpr unsigned kThresholdAlarmPair2 = 4u;
// Clamp bits in StepRecord::clamp_flags, shifted by pair index.
inline constexpr unsigned kQueueClamp = 1u;
inline constexpr unsigned kOccupancyClamp = 4u;
inline constexpr unsigned kMeasClamp = 16u;

struct StepRecord {
    long long step = 0;
    double t = 0.0;
    Pair q{}, o_true{}, o_meas{}, o_reported{};
    Pair z{}, green{};
    std::array<int, 2> delta{};
    Pair arrivals{}, departures{}, clamp{};
    Pair y{}, y_literal{};
    Pair u{}, r{};
    double r_norm = 0.0;
    unsigned alarms = 0;
    unsigned clamp_flags = 0;
    bool operator==(const StepRecord&) const = default;
};

struct CycleRecord {
    int cycle = 0;  // 1-based, closes at t_end
    double t_end = 0.0;
    Pair reference{}, closing{}, delta_o{};
    Pair z_before{}, z_after{};
    std::array<int, 2> delta_next{};
    bool armed = false;
    std::array<bool, 2> threshold_alarm{};
    bool residual_alarm = false;
    bool mitigation = false;
    bool equal_split = false;
    bool operator==(const CycleRecord&) const = default;
};

struct NoiseLevels {
    Pair process_sd{};
    Pair meas_sd{};
};

struct TraceLog {
    std::vector<StepRecord> steps;
    std::vector<CycleRecord> cycles;
    // run metadata, not part of the CSV
    double residual_tol = 0.0;
    std::optional<Pair> thresholds;
    NoiseLevels noise;
};

struct MetricsReport {
    int target_pair = 0;
    std::optional<double> detection_latency_s;
    std::optional<double> detection_time_s;
    double false_positive_rate = 0.0;
    int benign_cycles = 0;
    int alarmed_benign_cycles = 0;
    double peak_queue = 0.0;
    double steady_state_queue = 0.0;
    double queue_at_end = 0.0;
    std::optional<double> queue_at_detection;
    std::optional<double> peak_queue_after_detection;
    double green_time_at_end = 0.0;
    std::optional<double> occupancy_saturation_time;
    bool operator==(const MetricsReport&) const = default;
};

struct RunOutput {
    TraceLog trace;
    MetricsReport metrics;
};

// Per-channel noise sds from a noise-free, attack-free pilot over the calibration window.
NoiseLevels resolve_noise(const ScenarioConfig& cfg);

// Per-pair thresholds trained on a separate benign run.
Pair train_thresholds(const ScenarioConfig& cfg, const NoiseLevels& noise);
std::vector<double> benign_training_series(const ScenarioConfig& cfg, const NoiseLevels& noise, int pair);

TraceLog simulate(const ScenarioConfig& cfg, const NoiseLevels& noise, const std::optional<Pair>& thresholds,
                  long long steps);

RunOutput run_scenario(const ScenarioConfig& cfg);
MetricsReport compute_metrics(const TraceLog& trace, const ScenarioConfig& cfg);

struct SweepItem {
    bool ok = false;
    bool numeric_fault = false;
    std::string error;
    MetricsReport metrics;
};

std::vector<SweepItem> sweep(const std::vector<ScenarioConfig>& configs, unsigned workers);

}  // namespace crosslight
