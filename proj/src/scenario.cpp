#include "crosslight/scenario.hpp"

#include <cmath>
#include <string>

#include "crosslight/detectors.hpp"
#include "crosslight/errors.hpp"

namespace crosslight {

namespace {

bool is_multiple(double a, double b) {
    const double r = a / b;
    return std::abs(r - std::round(r)) < 1e-9 && std::round(r) >= 1.0;
}

void check(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(key + ": " + msg);
}

void check_finite(double v, const std::string& key) { check(std::isfinite(v), key, "must be finite"); }

}  // namespace

long long ScenarioConfig::steps() const { return std::llround(horizon_s / dt_s); }
long long ScenarioConfig::steps_per_cycle() const { return std::llround(cycle_time_s / dt_s); }

bool uses_residual(DetectorKind k) { return k == DetectorKind::model_based || k == DetectorKind::both; }
bool uses_threshold(DetectorKind k) { return k == DetectorKind::threshold || k == DetectorKind::both; }

void validate(const ScenarioConfig& c) {
    check_finite(c.dt_s, "dt_s");
    check(c.dt_s > 0.0, "dt_s", "must be positive");
    check_finite(c.cycle_time_s, "cycle_time_s");
    check(c.cycle_time_s > 0.0, "cycle_time_s", "must be positive");
    check(is_multiple(c.cycle_time_s, c.dt_s), "cycle_time_s", "must be a whole multiple of dt_s");
    check_finite(c.horizon_s, "horizon_s");
    check(is_multiple(c.horizon_s, c.cycle_time_s), "horizon_s", "must be a whole multiple of cycle_time_s");
    check_finite(c.f, "f");
    check(c.f >= 0.0, "f", "must be nonnegative");
    check_finite(c.min_green_s, "min_green_s");
    check(c.min_green_s >= 0.0, "min_green_s", "must be nonnegative");
    if (2.0 * c.min_green_s > c.cycle_time_s)
        throw CycleBudgetError("min_green_s: twice the minimum green exceeds the cycle time");
    check(c.alpha >= 0.0 && c.alpha <= 1.0, "alpha", "must lie in [0,1]");

    for (int i = 0; i < 2; ++i) {
        const PairConfig& p = c.pairs[i];
        const std::string s = "pair" + std::to_string(i + 1) + ".";
        for (auto [v, k] : {std::pair{p.intensity_vph, "intensity_vph"}, {p.saturation_vph, "saturation_vph"},
                            {p.k, "k"}, {p.beta, "beta"}, {p.lambda, "lambda"}, {p.initial_queue, "initial_queue"},
                            {p.initial_occupancy, "initial_occupancy"}, {p.initial_green_s, "initial_green_s"}})
            check_finite(v, s + k);
        check(p.intensity_vph >= 0.0, s + "intensity_vph", "must be nonnegative");
        check(p.saturation_vph > 0.0, s + "saturation_vph", "must be positive");
        check(p.initial_queue >= 0.0, s + "initial_queue", "must be nonnegative");
        check(p.initial_occupancy >= 0.0 && p.initial_occupancy <= 1.0, s + "initial_occupancy",
              "must lie in [0,1]");
        check(p.initial_green_s >= c.min_green_s, s + "initial_green_s", "must be at least min_green_s");
    }
    check(c.pairs[0].initial_green_s + c.pairs[1].initial_green_s <= c.cycle_time_s, "pair1.initial_green_s",
          "initial green times exceed cycle_time_s");

    check(c.noise.process_power_frac >= 0.0 && std::isfinite(c.noise.process_power_frac),
          "noise.process_power_frac", "must be a nonnegative number");
    check(c.noise.meas_power_frac >= 0.0 && std::isfinite(c.noise.meas_power_frac), "noise.meas_power_frac",
          "must be a nonnegative number");
    check(c.noise.calibration_window_s >= c.dt_s && c.noise.calibration_window_s <= c.horizon_s,
          "noise.calibration_window_s", "must lie in [dt_s, horizon_s]");

    check(c.attack.start_time_s >= 0.0 && !std::isnan(c.attack.start_time_s), "attack.start_time_s",
          "must be nonnegative");
    check(c.attack.target_pair == 0 || c.attack.target_pair == 1, "attack.target_pair", "must be 1 or 2");

    const DetectorSettings& d = c.detector;
    check(d.window >= 1, "detector.window", "must be at least 1");
    check(d.kappa >= 0.0 && std::isfinite(d.kappa), "detector.kappa", "must be nonnegative");
    check(d.calibration_cycles >= 2, "detector.calibration_cycles", "must be at least 2");
    check(d.warmup_cycles >= 0, "detector.warmup_cycles", "must be nonnegative");
    check(d.residual_factor > 0.0 && std::isfinite(d.residual_factor), "detector.residual_factor",
          "must be positive");
    check(d.residual_window_start_s >= 0.0 && d.residual_window_start_s < d.residual_window_end_s &&
              d.residual_window_end_s <= c.horizon_s,
          "detector.residual_window_end_s", "residual window must satisfy 0 <= start < end <= horizon_s");
    if (d.thresholds) {
        check(std::isfinite((*d.thresholds)[0]) && std::isfinite((*d.thresholds)[1]), "detector.thresholds",
              "must be finite");
    }
    try {
        ApproxModel m;
        m.dt = c.dt_s;
        make_monitor(m, monitor_gain(d.g, m), Eigen::Vector2d::Zero());
    } catch (const NotHurwitz& e) {
        throw ConfigError("detector.g: " + std::string(e.what()));
    } catch (const ConfigError& e) {
        throw ConfigError("detector.g: " + std::string(e.what()));
    }
}

}  // namespace crosslight
