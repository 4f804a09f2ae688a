#include "crosslight/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <json.hpp>

#include "crosslight/attack.hpp"
#include "crosslight/detectors.hpp"
#include "crosslight/errors.hpp"

namespace crosslight {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
    return splitmix64(seed + (static_cast<std::uint64_t>(stream) + 1) * 0x9E3779B97F4A7C15ULL);
}

int poisson_arrivals(double intensity, double dt, std::mt19937_64& rng) {
    if (!(intensity >= 0.0) || !(dt > 0.0)) throw PreconditionError("poisson_arrivals needs I >= 0 and dt > 0");
    const double mean = intensity * dt / kSecondsPerHour;
    if (mean == 0.0) return 0;
    std::poisson_distribution<int> dist(mean);
    return dist(rng);
}

double calibrate_noise(std::span<const double> reference, double power_frac) {
    if (reference.empty()) throw CalibrationError("noise calibration needs a non-empty reference");
    if (power_frac < 0.0) throw CalibrationError("noise power fraction must be nonnegative");
    if (power_frac == 0.0) return 0.0;
    double ms = 0.0;
    for (double v : reference) ms += v * v;
    ms /= static_cast<double>(reference.size());
    if (ms == 0.0) throw CalibrationError("reference signal is identically zero");
    return std::sqrt(power_frac * ms);
}

namespace {

class NoiseSource {
public:
    NoiseSource(std::uint64_t seed, Pair sd) : rng_(seed), sd_(sd) {}
    Pair draw() {
        Pair out{};
        for (int i = 0; i < 2; ++i)
            if (sd_[i] > 0.0) out[i] = sd_[i] * normal_(rng_);
        return out;
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    Pair sd_;
};

std::string snapshot(const IntersectionState& s, const ControlState& c) {
    nlohmann::json j;
    j["step"] = s.step;
    j["sim_time"] = s.sim_time();
    for (int i = 0; i < 2; ++i) {
        const ArmState& a = s.pairs[i];
        j["pairs"].push_back({{"queue_len", a.queue_len},
                              {"occupancy", a.occupancy},
                              {"intensity", a.intensity},
                              {"saturation_flow", a.saturation_flow},
                              {"delta", a.delta},
                              {"green", c.green[i]}});
    }
    return j.dump();
}

IntersectionState initial_state(const ScenarioConfig& cfg) {
    IntersectionState s;
    s.dt = cfg.dt_s;
    s.alpha = cfg.alpha;
    for (int i = 0; i < 2; ++i) {
        const PairConfig& p = cfg.pairs[i];
        ArmState& a = s.pairs[i];
        a.queue_len = p.initial_queue;
        a.occupancy = p.initial_occupancy;
        a.intensity = p.intensity_vph;
        a.saturation_flow = p.saturation_vph;
        a.k = p.k;
        a.beta = p.beta;
        a.lambda = p.lambda;
        a.delta = update_delta(a, p.intensity_vph);
        if (cfg.delta_rule == DeltaRule::carryover && p.initial_queue > 0.0) a.delta = 1;
    }
    return s;
}

ScenarioConfig benign_twin(ScenarioConfig cfg) {
    cfg.attack.enabled = false;
    cfg.detector.kind = DetectorKind::none;
    cfg.mitigation.enabled = false;
    return cfg;
}

}  // namespace

TraceLog simulate(const ScenarioConfig& cfg, const NoiseLevels& noise, const std::optional<Pair>& thresholds,
                  long long steps) {
    const long long spc = cfg.steps_per_cycle();
    const double dt = cfg.dt_s;
    const int target = cfg.attack.target_pair;
    const bool residual_on = uses_residual(cfg.detector.kind);
    const bool threshold_on = uses_threshold(cfg.detector.kind);
    if (threshold_on && !thresholds) throw StateError("threshold detector enabled without trained thresholds");

    IntersectionState state = initial_state(cfg);
    ControlState controls;
    controls.green = {cfg.pairs[0].initial_green_s, cfg.pairs[1].initial_green_s};
    controls.cycle_time = cfg.cycle_time_s;
    controls.f = cfg.f;
    controls.min_green = cfg.min_green_s;
    const Pair intensity{cfg.pairs[0].intensity_vph, cfg.pairs[1].intensity_vph};
    const Pair saturation{cfg.pairs[0].saturation_vph, cfg.pairs[1].saturation_vph};

    std::mt19937_64 arrival_rng[2] = {std::mt19937_64(derive_seed(cfg.seed, Stream::arrivals_pair1)),
                                      std::mt19937_64(derive_seed(cfg.seed, Stream::arrivals_pair2))};
    NoiseSource process(derive_seed(cfg.seed, Stream::process), noise.process_sd);
    NoiseSource measurement(derive_seed(cfg.seed, Stream::measurement), noise.meas_sd);

    // t = 0 sensor reading
    Pair meas{};
    const Pair nu0 = measurement.draw();
    for (int i = 0; i < 2; ++i) meas[i] = std::clamp(state.pairs[i].occupancy + nu0[i], 0.0, 1.0);
    Pair reported = meas;

    ReplayAttackState attacker;
    if (cfg.attack.enabled) {
        attacker.start_time = cfg.attack.start_time_s;
        attacker.target_pair = target;
        attacker = record(attacker, meas[target]);
        reported[target] = inject(attacker, meas[target], 0.0);
    }

    ApproxModel model;
    model.dt = dt;
    MonitorState monitor = make_monitor(model, monitor_gain(cfg.detector.g, model), {reported[0], reported[1]});
    double calib_max = 0.0;
    std::optional<ResidualAlarm> residual_alarm;

    std::array<ThresholdDetectorState, 2> detectors{};
    if (threshold_on)
        for (int i = 0; i < 2; ++i) {
            detectors[i].thrsh = (*thresholds)[i];
            detectors[i].trained = true;
            detectors[i].zeta = normalizing_factor(cfg.cycle_time_s, intensity);
        }

    TraceLog trace;
    trace.thresholds = thresholds;
    trace.noise = noise;
    trace.residual_tol = std::numeric_limits<double>::infinity();
    trace.steps.reserve(static_cast<std::size_t>(steps));

    Pair reference{};
    Pair cycle_arrivals{};
    std::array<bool, 2> queue_seen{};
    bool residual_in_cycle = false;
    bool mitigation_latched = false;

    for (long long s = 0; s < steps; ++s) {
        try {
            const long long phase = s % spc;
            if (phase == 0) {
                reference = cfg.attack.falsify_reference ? reported : meas;
                cycle_arrivals = {0.0, 0.0};
                for (int i = 0; i < 2; ++i) queue_seen[i] = state.pairs[i].queue_len > 0.0;
                residual_in_cycle = false;
            }

            const Pair green = green_in_step(controls, static_cast<double>(phase) * dt, dt);
            Pair arrivals{};
            if (cfg.arrival_mode == ArrivalMode::poisson) {
                for (int i = 0; i < 2; ++i) arrivals[i] = poisson_arrivals(intensity[i], dt, arrival_rng[i]);
            } else {
                arrivals = fluid_arrivals(state);
            }
            const StepResult step = step_dynamics(state, green, arrivals, process.draw());
            const Observation obs = observe(state, step, measurement.draw());
            const double t1 = step.next.sim_time();

            meas = obs.occupancy_meas;
            reported = meas;
            if (cfg.attack.enabled) {
                attacker = record(attacker, meas[target]);
                reported[target] = inject(attacker, meas[target], t1);
            }

            const Eigen::Vector2d y = approx_observe(model, {reported[0], reported[1]}, Eigen::Vector2d::Zero(),
                                                     Eigen::Vector2d::Zero());
            monitor = monitor_step(model, monitor, y, dt);
            const double rn = monitor.residual.norm();

            StepRecord rec;
            rec.step = s + 1;
            rec.t = t1;
            rec.z = controls.green;
            rec.green = green;
            rec.arrivals = arrivals;
            rec.departures = step.departures;
            rec.clamp = step.clamp_correction;
            rec.y = obs.dispatched;
            rec.y_literal = obs.dispatched_literal;
            const Eigen::Vector2d u = input_approx(intensity, dt, saturation, green);
            for (int i = 0; i < 2; ++i) {
                rec.q[i] = step.next.pairs[i].queue_len;
                rec.o_true[i] = step.next.pairs[i].occupancy;
                rec.delta[i] = state.pairs[i].delta;
                rec.u[i] = u(i);
                rec.r[i] = monitor.residual(i);
                if (step.queue_clamped[i]) rec.clamp_flags |= kQueueClamp << i;
                if (step.occupancy_clamped[i]) rec.clamp_flags |= kOccupancyClamp << i;
                if (obs.meas_clamped[i]) rec.clamp_flags |= kMeasClamp << i;
            }
            rec.o_meas = meas;
            rec.o_reported = reported;
            rec.r_norm = rn;

            if (residual_on) {
                const double ws = cfg.detector.residual_window_start_s;
                const double we = cfg.detector.residual_window_end_s;
                if (t1 >= ws && t1 < we) calib_max = std::max(calib_max, rn);
                if (t1 >= we) {
                    if (!residual_alarm) {
                        trace.residual_tol = cfg.detector.residual_factor * calib_max;
                        residual_alarm.emplace(trace.residual_tol, cfg.detector.window);
                    }
                    if (residual_alarm->push(rn)) {
                        rec.alarms |= kResidualAlarm;
                        residual_in_cycle = true;
                    }
                }
            }

            state = step.next;
            for (int i = 0; i < 2; ++i) {
                cycle_arrivals[i] += arrivals[i];
                if (state.pairs[i].queue_len > 0.0) queue_seen[i] = true;
            }

            if ((s + 1) % spc == 0) {
                CycleRecord cyc;
                cyc.cycle = static_cast<int>((s + 1) / spc);
                cyc.t_end = t1;
                cyc.reference = reference;
                cyc.closing = reported;
                for (int i = 0; i < 2; ++i) cyc.delta_o[i] = reported[i] - reference[i];
                cyc.z_before = controls.green;
                cyc.armed = cyc.cycle > cfg.detector.warmup_cycles;
                cyc.residual_alarm = residual_in_cycle;
                bool alarm = residual_in_cycle;
                if (threshold_on && cyc.armed) {
                    for (int i = 0; i < 2; ++i) {
                        cyc.threshold_alarm[i] = threshold_detect(detectors[i], cyc.delta_o[i]);
                        if (cyc.threshold_alarm[i]) {
                            rec.alarms |= kThresholdAlarmPair1 << i;
                            alarm = true;
                        }
                    }
                }
                if (alarm && cfg.mitigation.enabled) mitigation_latched = true;
                if (mitigation_latched) {
                    const Mitigation m = mitigate(cfg.cycle_time_s, intensity);
                    controls.green = m.green;
                    cyc.equal_split = m.equal_split;
                } else {
                    controls = control_update(controls, cyc.delta_o);
                }
                cyc.mitigation = mitigation_latched;
                cyc.z_after = controls.green;
                for (int i = 0; i < 2; ++i) {
                    ArmState& arm = state.pairs[i];
                    int d = update_delta(arm, cycle_arrivals[i] * kSecondsPerHour / cfg.cycle_time_s);
                    if (cfg.delta_rule == DeltaRule::carryover && queue_seen[i]) d = 1;
                    arm.delta = d;
                    cyc.delta_next[i] = d;
                }
                trace.cycles.push_back(cyc);
            }
            trace.steps.push_back(rec);
        } catch (const NumericFault& e) {
            throw ScenarioError(std::string(e.what()) + " at step " + std::to_string(s + 1), s + 1,
                                snapshot(state, controls), true);
        } catch (const ScenarioError&) {
            throw;
        } catch (const Error& e) {
            throw ScenarioError(std::string(e.what()) + " at step " + std::to_string(s + 1), s + 1,
                                snapshot(state, controls), false);
        }
    }
    return trace;
}

NoiseLevels resolve_noise(const ScenarioConfig& cfg) {
    NoiseLevels out;
    if (cfg.noise.process_power_frac == 0.0 && cfg.noise.meas_power_frac == 0.0) return out;
    ScenarioConfig pilot = benign_twin(cfg);
    const long long n = std::llround(cfg.noise.calibration_window_s / cfg.dt_s);
    const TraceLog trace = simulate(pilot, NoiseLevels{}, std::nullopt, n);
    for (int i = 0; i < 2; ++i) {
        std::vector<double> ref;
        ref.reserve(trace.steps.size());
        for (const auto& r : trace.steps) ref.push_back(r.o_true[i]);
        out.process_sd[i] = calibrate_noise(ref, cfg.noise.process_power_frac);
        out.meas_sd[i] = calibrate_noise(ref, cfg.noise.meas_power_frac);
    }
    return out;
}

std::vector<double> benign_training_series(const ScenarioConfig& cfg, const NoiseLevels& noise, int pair) {
    ScenarioConfig train = benign_twin(cfg);
    train.seed = derive_seed(cfg.seed, Stream::training);
    const int warm = cfg.detector.warmup_cycles;
    const long long n = (warm + cfg.detector.calibration_cycles) * cfg.steps_per_cycle();
    const TraceLog trace = simulate(train, noise, std::nullopt, n);
    std::vector<double> out;
    for (const auto& c : trace.cycles)
        if (c.cycle > warm) out.push_back(c.delta_o[pair]);
    return out;
}

Pair train_thresholds(const ScenarioConfig& cfg, const NoiseLevels& noise) {
    Pair out{};
    for (int i = 0; i < 2; ++i) out[i] = threshold_train(benign_training_series(cfg, noise, i), cfg.detector.kappa);
    return out;
}

RunOutput run_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    const NoiseLevels noise = resolve_noise(cfg);
    std::optional<Pair> thresholds;
    if (uses_threshold(cfg.detector.kind)) {
        if (cfg.detector.thresholds && !cfg.detector.retrain)
            thresholds = cfg.detector.thresholds;
        else
            thresholds = train_thresholds(cfg, noise);
    }
    RunOutput out;
    out.trace = simulate(cfg, noise, thresholds, cfg.steps());
    out.metrics = compute_metrics(out.trace, cfg);
    return out;
}

MetricsReport compute_metrics(const TraceLog& trace, const ScenarioConfig& cfg) {
    MetricsReport m;
    const int p = cfg.attack.target_pair;
    m.target_pair = p;
    const double start = cfg.attack.enabled ? cfg.attack.start_time_s : std::numeric_limits<double>::infinity();
    const double warm_end = cfg.detector.warmup_cycles * cfg.cycle_time_s;

    double sum = 0.0;
    long long count = 0;
    for (const auto& r : trace.steps) {
        m.peak_queue = std::max(m.peak_queue, r.q[p]);
        if (r.t > warm_end && r.t <= start) {
            sum += r.q[p];
            ++count;
        }
        if (!m.occupancy_saturation_time && r.o_true[p] >= 1.0) m.occupancy_saturation_time = r.t;
        if (!m.detection_time_s && r.alarms != 0 && r.t >= start) {
            m.detection_time_s = r.t;
            m.detection_latency_s = r.t - start;
            m.queue_at_detection = r.q[p];
        }
        if (m.detection_time_s)
            m.peak_queue_after_detection = std::max(m.peak_queue_after_detection.value_or(0.0), r.q[p]);
    }
    m.steady_state_queue = count > 0 ? sum / static_cast<double>(count) : 0.0;
    if (!trace.steps.empty()) {
        m.queue_at_end = trace.steps.back().q[p];
        m.green_time_at_end = trace.steps.back().z[p];
    }

    // alarms per cycle over armed cycles that close before the attack starts
    std::vector<bool> alarmed(trace.cycles.size() + 1, false);
    for (const auto& r : trace.steps) {
        if (r.alarms == 0) continue;
        const auto c = static_cast<std::size_t>(std::ceil(r.t / cfg.cycle_time_s - 1e-9));
        if (c < alarmed.size()) alarmed[c] = true;
    }
    for (const auto& c : trace.cycles) {
        if (c.cycle <= cfg.detector.warmup_cycles || c.t_end >= start) continue;
        ++m.benign_cycles;
        if (alarmed[static_cast<std::size_t>(c.cycle)]) ++m.alarmed_benign_cycles;
    }
    m.false_positive_rate =
        m.benign_cycles > 0 ? static_cast<double>(m.alarmed_benign_cycles) / m.benign_cycles : 0.0;
    return m;
}

std::vector<SweepItem> sweep(const std::vector<ScenarioConfig>& configs, unsigned workers) {
    std::vector<SweepItem> out(configs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            SweepItem& item = out[i];
            try {
                item.metrics = run_scenario(configs[i]).metrics;
                item.ok = true;
            } catch (const ScenarioError& e) {
                item.error = e.what();
                item.numeric_fault = e.numeric();
            } catch (const NumericFault& e) {
                item.error = e.what();
                item.numeric_fault = true;
            } catch (const std::exception& e) {
                item.error = e.what();
            }
        }
    };
    workers = std::max(1u, workers);
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace crosslight
