#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "crosslight/harness.hpp"

namespace crosslight {

inline constexpr int kSchemaVersion = 1;

nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

struct RunInfo {
    std::uint64_t seed = 0;
    double residual_tol = 0.0;  // emitted as null when infinite
    std::optional<Pair> thresholds;
    NoiseLevels noise;
};

nlohmann::json run_report(const MetricsReport& m, const RunInfo& info);

struct SweepEntry {
    std::string label;  // grid point, e.g. "noise.meas_power_frac=0.00015"
    std::uint64_t seed = 0;
    SweepItem item;
};

// Items in input order plus per-label aggregates (in first-appearance order).
nlohmann::json sweep_report(const std::vector<SweepEntry>& entries);

std::string dump_report(const nlohmann::json& j);

}  // namespace crosslight
