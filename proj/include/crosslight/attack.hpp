#pragma once

#include <limits>

namespace crosslight {

/// Replay attacker sitting on one occupancy channel. Records the running minimum ("ras")
/// from the first observation and replays it from start_time on.
struct ReplayAttackState {
    double ras = std::numeric_limits<double>::infinity();
    double start_time = std::numeric_limits<double>::infinity();
    bool active = false;
    int target_pair = 0;
    bool recorded = false;
};

ReplayAttackState record(ReplayAttackState state, double o_t);

// Updates `active` from sim_time and returns the value handed downstream.
double inject(ReplayAttackState& state, double o_true, double sim_time);

// Update condition as written in the attacker loop: O_t − O_{t−1} < ras − O_{t−1}.
bool replay_condition_literal(double o_t, double o_prev, double ras);
// Simplified form O_t < ras.
bool replay_condition(double o_t, double ras);

}  // namespace crosslight
