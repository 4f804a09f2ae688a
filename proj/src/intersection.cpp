#include "crosslight/intersection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crosslight/errors.hpp"

namespace crosslight {

namespace {

void require_nonnegative(double v, const char* name) {
    if (!(v >= 0.0)) throw PreconditionError(std::string(name) + " must be nonnegative and finite");
}

void require_finite(double v, const std::string& name) {
    if (!std::isfinite(v)) throw NumericFault(name, "non-finite value in " + name);
}

double service_rate(int delta, double s, double i) {
    return (delta * s + (1 - delta) * i) / kSecondsPerHour;
}

}  // namespace

Clamped queue_step_scalar(double q, int delta, double s, double i, double z, double dt) {
    require_nonnegative(q, "queue");
    require_nonnegative(s, "saturation flow");
    require_nonnegative(i, "intensity");
    require_nonnegative(z, "green time");
    require_nonnegative(dt, "dt");
    if (delta != 0 && delta != 1) throw PreconditionError("delta must be 0 or 1");
    const double raw = delta * q - service_rate(delta, s, i) * z + i / kSecondsPerHour * dt;
    if (raw < 0.0) return {0.0, true};
    return {raw, false};
}

Clamped occupancy_step_scalar(double q, double o, double k, double beta, double lambda) {
    if (!(o >= 0.0 && o <= 1.0)) throw PreconditionError("occupancy must lie in [0,1]");
    const double raw = k * q + beta * o + lambda;
    if (raw < 0.0) return {0.0, true};
    if (raw > 1.0) return {1.0, true};
    return {raw, false};
}

int update_delta(const ArmState& arm, double cycle_mean_intensity) {
    return cycle_mean_intensity < arm.saturation_flow ? 0 : 1;
}

ExtendedMatrices build_extended(const IntersectionState& state, const Pair& arrivals) {
    ExtendedMatrices m;
    m.A.setZero();
    m.B.setZero();
    for (int i = 0; i < 2; ++i) {
        const ArmState& arm = state.pairs[i];
        m.A(i, i) = arm.delta;
        m.A(2 + i, i) = arm.k;
        m.A(2 + i, 2 + i) = arm.beta;
        m.B(i, i) = -service_rate(arm.delta, arm.saturation_flow, arm.intensity);
        m.F(i) = arrivals[i];
        m.F(2 + i) = arm.lambda;
    }
    return m;
}

Eigen::Matrix4d output_matrix(double alpha) {
    Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
    c(0, 1) = -alpha;
    c(1, 0) = alpha;
    c(2, 2) = 1.0;
    c(3, 3) = 1.0;
    return c;
}

Eigen::Vector4d output_offset(const Eigen::Matrix4d& c, const IntersectionState& prev, const Pair& arrivals) {
    Eigen::Vector4d v(prev.pairs[0].queue_len + arrivals[0], prev.pairs[1].queue_len + arrivals[1], 0.0, 0.0);
    return -c * v;
}

Eigen::Vector4d state_vector(const IntersectionState& state) {
    return {state.pairs[0].queue_len, state.pairs[1].queue_len, state.pairs[0].occupancy,
            state.pairs[1].occupancy};
}

Pair fluid_arrivals(const IntersectionState& state) {
    return {state.pairs[0].intensity / kSecondsPerHour * state.dt,
            state.pairs[1].intensity / kSecondsPerHour * state.dt};
}

Pair green_in_step(const ControlState& controls, double phase, double dt) {
    const double end = phase + dt;
    const double b1 = controls.green[0];
    const double b2 = controls.green[0] + controls.green[1];
    return {std::max(0.0, std::min(end, b1) - phase), std::max(0.0, std::min(end, b2) - std::max(phase, b1))};
}

StepResult step_dynamics(const IntersectionState& state, const Pair& green, const Pair& arrivals,
                         const Pair& process_noise) {
    const ExtendedMatrices m = build_extended(state, arrivals);
    const Eigen::Vector4d x = state_vector(state);
    const Eigen::Vector2d g(green[0], green[1]);
    Eigen::Vector4d raw = m.A * x + m.B * g + m.F;
    raw(2) += process_noise[0];
    raw(3) += process_noise[1];

    StepResult out;
    out.next = state;
    out.next.step = state.step + 1;
    out.arrivals = arrivals;
    for (int i = 0; i < 2; ++i) {
        const std::string tag = "pair" + std::to_string(i + 1);
        require_finite(raw(i), tag + ".queue_len");
        require_finite(raw(2 + i), tag + ".occupancy");
        ArmState& arm = out.next.pairs[i];
        const double q = raw(i) < 0.0 ? 0.0 : raw(i);
        out.queue_clamped[i] = raw(i) < 0.0;
        out.clamp_correction[i] = q - raw(i);
        out.departures[i] = x(i) + arrivals[i] - raw(i);
        arm.queue_len = q;
        const double o = std::clamp(raw(2 + i), 0.0, 1.0);
        out.occupancy_clamped[i] = o != raw(2 + i);
        arm.occupancy = o;
    }
    return out;
}

Observation observe(const IntersectionState& prev, const StepResult& step, const Pair& meas_noise) {
    const Eigen::Matrix4d c = output_matrix(prev.alpha);
    const Eigen::Vector4d h = output_offset(c, prev, step.arrivals);
    const Eigen::Vector4d m = c * state_vector(step.next) + h;

    Observation obs;
    obs.meas_noise = meas_noise;
    for (int i = 0; i < 2; ++i) {
        const double dq = step.next.pairs[i].queue_len - prev.pairs[i].queue_len;
        obs.turn_coupling[i] = m(i);
        obs.dispatched[i] = -dq + step.arrivals[i] + m(i);
        obs.dispatched_literal[i] = dq + step.arrivals[i];
        const double o = m(2 + i) + meas_noise[i];
        const double oc = std::clamp(o, 0.0, 1.0);
        obs.meas_clamped[i] = oc != o;
        obs.occupancy_meas[i] = oc;
    }
    return obs;
}

ControlState control_update(const ControlState& controls, const Pair& delta_o) {
    ControlState out = controls;
    for (int i = 0; i < 2; ++i) {
        if (!std::isfinite(delta_o[i])) throw NumericFault("delta_O", "non-finite occupancy change");
        out.green[i] = std::max(controls.min_green, controls.green[i] * (1.0 + controls.f * delta_o[i]));
    }
    out.green = enforce_cycle_budget(out.green[0], out.green[1], controls.cycle_time, controls.min_green);
    return out;
}

Pair enforce_cycle_budget(double z1, double z2, double cycle_time, double min_green) {
    if (2.0 * min_green > cycle_time)
        throw CycleBudgetError("min_green_s: twice the minimum green exceeds the cycle time");
    if (z1 < 0.0 || z2 < 0.0) throw PreconditionError("green times must be nonnegative");
    const double sum = z1 + z2;
    if (sum <= cycle_time) return {z1, z2};
    Pair z{z1 * cycle_time / sum, z2 * cycle_time / sum};
    if (z[0] < min_green) z = {min_green, cycle_time - min_green};
    if (z[1] < min_green) z = {cycle_time - min_green, min_green};
    // rounding can leave the sum one ulp over budget
    const int big = z[0] >= z[1] ? 0 : 1;
    while (z[0] + z[1] > cycle_time) z[big] = std::nextafter(z[big], 0.0);
    return z;
}

}  // namespace crosslight
