#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "crosslight/attack.hpp"
#include "crosslight/errors.hpp"
#include "crosslight/harness.hpp"

using namespace crosslight;

TEST(Record, RunningMinimum) {
    ReplayAttackState s;
    for (double o : {0.5, 0.3, 0.4}) s = record(s, o);
    EXPECT_EQ(s.ras, 0.3);
}

TEST(Record, IncreasingKeepsFirst) {
    ReplayAttackState s;
    for (double o : {0.1, 0.2, 0.3, 0.9}) s = record(s, o);
    EXPECT_EQ(s.ras, 0.1);
}

TEST(Record, FirstObservationAlwaysTaken) {
    ReplayAttackState s;
    EXPECT_TRUE(std::isinf(s.ras));
    s = record(s, 1.0);
    EXPECT_EQ(s.ras, 1.0);
    EXPECT_THROW(record(s, 1.5), PreconditionError);
}

TEST(Record, ConditionFormsAgree) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 100000; ++n) {
        ReplayAttackState s;
        double prev = u(rng);
        for (int t = 0; t < 8; ++t) {
            const double o = u(rng);
            ASSERT_EQ(replay_condition_literal(o, prev, s.ras), replay_condition(o, s.ras));
            s = record(s, o);
            prev = o;
        }
    }
}

TEST(Inject, PassThroughBeforeStart) {
    ReplayAttackState s;
    s.start_time = 420.0;
    s = record(s, 0.2);
    EXPECT_EQ(inject(s, 0.6, 419.0), 0.6);
    EXPECT_FALSE(s.active);
}

TEST(Inject, ReplaysWhenActive) {
    ReplayAttackState s;
    s.start_time = 420.0;
    s = record(s, 0.2);
    const double prev = 0.6;
    const double out = inject(s, 0.6, 420.0);
    EXPECT_TRUE(s.active);
    EXPECT_EQ(out, 0.2);
    EXPECT_LE(out - prev, 0.0);
}

TEST(Inject, AtMinimumIsNoOp) {
    ReplayAttackState s;
    s.start_time = 0.0;
    s = record(s, 0.35);
    EXPECT_EQ(inject(s, 0.35, 10.0), 0.35);
}

TEST(Inject, ActiveIffPastStart) {
    ReplayAttackState s;
    s.start_time = 5.0;
    for (int t = 0; t < 10; ++t) {
        s = record(s, 0.5);
        inject(s, 0.5, t);
        EXPECT_EQ(s.active, t >= 5);
    }
}

namespace {

ScenarioConfig flagship() {
    ScenarioConfig c;
    c.pairs[0] = {700.0, 1800.0, 0.004, 0.5, 0.0, 100.0, 0.0, 15.0};
    c.pairs[1] = {400.0, 1800.0, 0.004, 0.5, 0.0, 0.0, 0.0, 30.0};
    c.attack.enabled = true;
    c.attack.start_time_s = 420.0;
    return c;
}

}  // namespace

TEST(AttackScenario, InfiniteStartMatchesNoAttacker) {
    ScenarioConfig with = flagship();
    with.noise.meas_power_frac = 0.001;
    with.attack.start_time_s = std::numeric_limits<double>::infinity();
    ScenarioConfig without = with;
    without.attack.enabled = false;
    const RunOutput a = run_scenario(with);
    const RunOutput b = run_scenario(without);
    EXPECT_EQ(a.trace.steps, b.trace.steps);
    EXPECT_EQ(a.trace.cycles, b.trace.cycles);
}

TEST(AttackScenario, GreenNonIncreasingAndInjectedValuesObserved) {
    const ScenarioConfig c = flagship();
    const RunOutput out = run_scenario(c);
    double last = std::numeric_limits<double>::infinity();
    for (const auto& cyc : out.trace.cycles) {
        if (cyc.t_end < c.attack.start_time_s) continue;
        EXPECT_LE(cyc.z_after[0], last);
        last = cyc.z_after[0];
    }
    EXPECT_LE(last, c.min_green_s + 0.5);
    std::vector<double> history = {c.pairs[0].initial_occupancy};
    for (const auto& st : out.trace.steps) {
        history.push_back(st.o_meas[0]);
        if (st.t >= c.attack.start_time_s)
            EXPECT_NE(std::find(history.begin(), history.end(), st.o_reported[0]), history.end());
    }
}

TEST(AttackScenario, PureReplayFreezesController) {
    ScenarioConfig c = flagship();
    c.attack.falsify_reference = true;
    const RunOutput out = run_scenario(c);
    // after the first attacked cycle both readings are ras, so ΔO = 0
    for (const auto& cyc : out.trace.cycles)
        if (cyc.t_end > c.attack.start_time_s + c.cycle_time_s) EXPECT_EQ(cyc.delta_o[0], 0.0);
}
