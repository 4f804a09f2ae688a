#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "crosslight/detectors.hpp"
#include "crosslight/errors.hpp"
#include "crosslight/harness.hpp"

using namespace crosslight;

TEST(InputApprox, Examples) {
    EXPECT_EQ(input_approx({0.0, 0.0}, 1.0, {1800.0, 1800.0}, {0.0, 0.0}), Eigen::Vector2d::Zero());
    const Eigen::Vector2d u = input_approx({700.0, 700.0}, 1.0, {1800.0, 1800.0}, {0.5, 0.5});
    EXPECT_NEAR(u(0), 700.0 / 3600.0 - 0.25, 1e-15);
    EXPECT_NEAR(u(0), -0.0556, 5e-5);
}

TEST(InputApprox, SignFlipsAtBalance) {
    // I·dt = S·z at z = 700/1800
    const double z = 700.0 / 1800.0;
    EXPECT_GT(input_approx({700.0, 700.0}, 1.0, {1800.0, 1800.0}, {z * 0.99, 0.0})(0), 0.0);
    EXPECT_LT(input_approx({700.0, 700.0}, 1.0, {1800.0, 1800.0}, {z * 1.01, 0.0})(0), 0.0);
    EXPECT_THROW(input_approx({-1.0, 0.0}, 1.0, {1800.0, 1800.0}, {0.0, 0.0}), PreconditionError);
}

TEST(ApproxStep, Examples) {
    ApproxModel m;
    m.dt = 2.0;
    const Eigen::Vector2d o(0.4, 0.4);
    EXPECT_EQ(approx_step(m, o, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()), o);
    const Eigen::Vector2d next = approx_step(m, o, {0.01, 0.0}, Eigen::Vector2d::Zero());
    EXPECT_NEAR(next(0) - 0.4, 3.0 * 0.01 * 2.0, 1e-15);
    EXPECT_EQ(next(1), 0.4);
    const Eigen::Vector2d same = approx_step(m, o, {0.02, 0.02}, Eigen::Vector2d::Zero());
    EXPECT_EQ(same(0), same(1));
    EXPECT_EQ(approx_step(m, o, {1.0, -1.0}, Eigen::Vector2d::Zero()), Eigen::Vector2d(1.0, 0.0));
}

TEST(ApproxObserve, Examples) {
    ApproxModel m;
    const Eigen::Vector2d y = approx_observe(m, {0.4, 0.2}, {0.3, 0.3}, Eigen::Vector2d::Zero());
    EXPECT_DOUBLE_EQ(y(0), 1.0);
    EXPECT_DOUBLE_EQ(y(1), 0.5);
    EXPECT_EQ(approx_observe(m, {0.8, 0.4}, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()), 2.0 * y);
}

TEST(MonitorGain, HurwitzBoundary) {
    ApproxModel m;
    const Eigen::Matrix2d g = monitor_gain(1.0);
    const Eigen::Vector2cd ev = (m.A + g * m.C).eigenvalues();
    EXPECT_NEAR(ev(0).real(), -1.5, 1e-12);
    EXPECT_NEAR(ev(1).real(), -1.5, 1e-12);
    EXPECT_THROW(monitor_gain(0.4), NotHurwitz);
    EXPECT_THROW(monitor_gain(0.2), NotHurwitz);
    EXPECT_NEAR(1.0 - 2.5 * 0.2, 0.5, 1e-15);
    EXPECT_NO_THROW(monitor_gain(0.41));
}

TEST(MonitorStep, SteadyStateSolvesLinearSystem) {
    ApproxModel m;
    m.dt = 0.1;
    const Eigen::Matrix2d g = monitor_gain(1.0);
    MonitorState s = make_monitor(m, g, Eigen::Vector2d::Zero());
    const Eigen::Vector2d y(1.0, 1.0);
    for (int k = 0; k < 2000; ++k) s = monitor_step(m, s, y, m.dt);
    const Eigen::Vector2d expect = (m.A + g * m.C).colPivHouseholderQr().solve(g * y);
    EXPECT_NEAR(s.omega(0), expect(0), 1e-12);
    EXPECT_NEAR(s.omega(0), 2.0 / 3.0, 1e-12);
}

TEST(MonitorStep, StabilityGuard) {
    ApproxModel m;
    m.dt = 2.0;  // 2·|1 − 2.5| = 3
    EXPECT_THROW(make_monitor(m, monitor_gain(1.0), Eigen::Vector2d::Zero()), ConfigError);
    ApproxModel ok;
    MonitorState s = make_monitor(ok, monitor_gain(1.0), Eigen::Vector2d::Zero());
    EXPECT_THROW(monitor_step(ok, s, Eigen::Vector2d::Ones(), 1.4), ConfigError);
}

TEST(MonitorStep, MatchedObserverDecays) {
    for (double dt : {0.1, 0.01}) {
        ApproxModel m;
        m.dt = dt;
        MonitorState s = make_monitor(m, monitor_gain(1.0, m), Eigen::Vector2d(0.5, 0.5));
        Eigen::Vector2d x(0.2, 0.7);
        const Eigen::Vector2d u(0.01, 0.0);
        double r0 = 0.0;
        for (int k = 0; k < static_cast<int>(std::lround(3.0 / dt)); ++k) {
            s = monitor_step(m, s, m.C * x, dt, u);
            if (k == 0) r0 = s.residual.norm();
            ASSERT_LE(s.residual.norm(), r0 * std::exp(-1.5 * k * dt) * (1.0 + 1e-9) + 1e-15);
            x = x + dt * (m.A * x + m.B * u);
        }
    }
}

TEST(MonitorStep, ResidualUsesCurrentEstimate) {
    ApproxModel m;
    MonitorState s = make_monitor(m, monitor_gain(1.0), Eigen::Vector2d(0.4, 0.4));
    s = monitor_step(m, s, Eigen::Vector2d(1.0, 1.0), 1.0);
    EXPECT_NEAR(s.residual(0), 0.0, 1e-15);
}

TEST(ResidualDecision, WindowAndTolerance) {
    const std::vector<double> r = {0.1, 2.0, 2.0, 0.1, 2.0, 2.0, 2.0, 0.1};
    EXPECT_FALSE(residual_decision(r, std::numeric_limits<double>::infinity(), 1));
    EXPECT_EQ(first_alarm(r, 1.0, 1), 1u);
    EXPECT_EQ(first_alarm(r, 1.0, 3), 6u);
    EXPECT_FALSE(residual_decision(r, 1.0, 4));
    EXPECT_FALSE(residual_decision(r, 2.0, 1));
}

TEST(ThresholdTrain, Examples) {
    const std::vector<double> zeros(20, 0.0);
    EXPECT_EQ(threshold_train(zeros, 3.0), 0.0);
    const std::vector<double> spread = {-0.02, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    EXPECT_NEAR(threshold_train(spread, 3.0), -0.05, 1e-15);
    EXPECT_THROW(threshold_train(std::vector<double>{0.1}, 3.0), TrainingError);
}

TEST(ThresholdTrain, BelowEveryTrainingSample) {
    const std::vector<double> s = {0.01, -0.03, 0.02, 0.005, -0.01};
    const double t = threshold_train(s, 3.0);
    for (double v : s) EXPECT_LT(t, v);
}

TEST(ThresholdDetect, StrictAndPure) {
    ThresholdDetectorState s;
    EXPECT_THROW(threshold_detect(s, -1.0), StateError);
    s.thrsh = -0.05;
    s.trained = true;
    EXPECT_FALSE(threshold_detect(s, -0.05));
    EXPECT_TRUE(threshold_detect(s, -0.0500001));
    EXPECT_EQ(threshold_detect(s, -0.2), threshold_detect(s, -0.2));
    const std::vector<double> zeros(5, 0.0);
    const auto z = train_detector(zeros, 3.0, 60.0, {700.0, 400.0});
    EXPECT_FALSE(threshold_detect(z, 0.0));
    EXPECT_TRUE(threshold_detect(z, -1e-12));
    EXPECT_DOUBLE_EQ(z.zeta, 60.0 / 1100.0);
}

TEST(Mitigate, Examples) {
    EXPECT_EQ(mitigate(60.0, {700.0, 700.0}).green, (Pair{30.0, 30.0}));
    EXPECT_EQ(mitigate(60.0, {900.0, 300.0}).green, (Pair{45.0, 15.0}));
    const Mitigation fallback = mitigate(60.0, {0.0, 0.0});
    EXPECT_TRUE(fallback.equal_split);
    EXPECT_EQ(fallback.green, (Pair{30.0, 30.0}));
}

TEST(Mitigate, SumsToCycleAndScaleInvariant) {
    for (double a = 1.0; a < 3000.0; a += 37.3) {
        const Pair z = mitigate(60.0, {a, 1100.0}).green;
        EXPECT_NEAR(z[0] + z[1], 60.0, 1e-12);
        const Pair scaled = mitigate(60.0, {4.0 * a, 4.4e3}).green;
        EXPECT_NEAR(scaled[0], z[0], 1e-12);
    }
}

namespace {

ScenarioConfig monitored(double meas_frac) {
    ScenarioConfig c;
    c.pairs[0] = {700.0, 1800.0, 0.004, 0.5, 0.0, 100.0, 0.0, 15.0};
    c.pairs[1] = {400.0, 1800.0, 0.004, 0.5, 0.0, 0.0, 0.0, 30.0};
    c.attack.enabled = true;
    c.noise.process_power_frac = 0.00015;
    c.noise.meas_power_frac = meas_frac;
    c.detector.kind = DetectorKind::model_based;
    c.detector.window = 1;
    return c;
}

}  // namespace

TEST(ModelBased, AlarmAfterOnsetAtLowNoise) {
    const ScenarioConfig c = monitored(0.00015);
    const RunOutput out = run_scenario(c);
    ASSERT_TRUE(out.metrics.detection_latency_s.has_value());
    double benign_max = 0.0, attack_max = 0.0;
    for (const auto& st : out.trace.steps) {
        double& slot = st.t < c.attack.start_time_s ? benign_max : attack_max;
        slot = std::max(slot, st.r_norm);
    }
    EXPECT_GT(attack_max, benign_max);
}

TEST(ModelBased, NoAlarmWithoutAttackOrNoise) {
    ScenarioConfig c = monitored(0.0);
    c.noise.process_power_frac = 0.0;
    c.attack.enabled = false;
    c.arrival_mode = ArrivalMode::deterministic;
    const RunOutput out = run_scenario(c);
    EXPECT_FALSE(out.metrics.detection_time_s.has_value());
    EXPECT_EQ(out.metrics.alarmed_benign_cycles, 0);
}

TEST(ModelBased, LowerNoiseNeverDetectsLess) {
    const double levels[3] = {0.00015, 0.00172, 0.00394};
    int prev = 31;
    for (double l : levels) {
        int n = 0;
        for (int s = 0; s < 30; ++s) {
            ScenarioConfig c = monitored(l);
            c.seed = 100 + static_cast<std::uint64_t>(s);
            n += run_scenario(c).metrics.detection_latency_s.has_value();
        }
        EXPECT_LE(n, prev);
        prev = n;
    }
}

TEST(ThresholdScenario, DetectsWithinTwoCyclesInFlagship) {
    ScenarioConfig c = monitored(0.00015);
    c.detector.kind = DetectorKind::threshold;
    const RunOutput out = run_scenario(c);
    ASSERT_TRUE(out.metrics.detection_latency_s.has_value());
    EXPECT_LE(*out.metrics.detection_latency_s, 2 * c.cycle_time_s);
    ASSERT_TRUE(out.trace.thresholds.has_value());
}
