#include "crosslight/attack.hpp"

#include "crosslight/errors.hpp"

namespace crosslight {

ReplayAttackState record(ReplayAttackState state, double o_t) {
    if (!(o_t >= 0.0 && o_t <= 1.0)) throw PreconditionError("recorded occupancy must lie in [0,1]");
    if (replay_condition(o_t, state.ras)) state.ras = o_t;
    state.recorded = true;
    return state;
}

double inject(ReplayAttackState& state, double o_true, double sim_time) {
    state.active = sim_time >= state.start_time;
    if (state.active && state.recorded) return state.ras;
    return o_true;
}

bool replay_condition_literal(double o_t, double o_prev, double ras) { return o_t - o_prev < ras - o_prev; }

bool replay_condition(double o_t, double ras) { return o_t < ras; }

}  // namespace crosslight
