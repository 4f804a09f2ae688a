#pragma once

#include <array>

#include <Eigen/Dense>

namespace crosslight {

inline constexpr double kSecondsPerHour = 3600.0;

using Pair = std::array<double, 2>;
using PairFlags = std::array<bool, 2>;

/// One arm-pair of the intersection. Rates are veh/h, occupancy a fraction.
struct ArmState {
    double queue_len = 0.0;
    double occupancy = 0.0;
    double intensity = 0.0;
    double saturation_flow = 1800.0;
    int delta = 1;
    double k = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
};

struct ControlState {
    Pair green{0.0, 0.0};
    double cycle_time = 60.0;
    double f = 0.7;
    double min_green = 0.0;
};

struct IntersectionState {
    std::array<ArmState, 2> pairs{};
    long long step = 0;
    double dt = 1.0;
    double alpha = 0.0;

    double sim_time() const { return static_cast<double>(step) * dt; }
};

struct Clamped {
    double value;
    bool clamped;
};

Clamped queue_step_scalar(double q, int delta, double s, double i, double z, double dt);
Clamped occupancy_step_scalar(double q, double o, double k, double beta, double lambda);

// 0 when the cycle-mean intensity is strictly below saturation flow.
int update_delta(const ArmState& arm, double cycle_mean_intensity);

struct ExtendedMatrices {
    Eigen::Matrix4d A;
    Eigen::Matrix<double, 4, 2> B;  // acts on green seconds within the step
    Eigen::Vector4d F;
};

ExtendedMatrices build_extended(const IntersectionState& state, const Pair& arrivals);
Eigen::Matrix4d output_matrix(double alpha);
Eigen::Vector4d output_offset(const Eigen::Matrix4d& c, const IntersectionState& prev, const Pair& arrivals);
Eigen::Vector4d state_vector(const IntersectionState& state);

// Expected arrivals I·dt in vehicles.
Pair fluid_arrivals(const IntersectionState& state);

// Green seconds each pair receives inside [phase, phase+dt). Pair 1 is served first.
Pair green_in_step(const ControlState& controls, double phase, double dt);

struct StepResult {
    IntersectionState next;
    Pair arrivals{};
    Pair departures{};        // model service Q + a − raw
    Pair clamp_correction{};  // clamped − raw, ≥ 0
    PairFlags queue_clamped{};
    PairFlags occupancy_clamped{};
};

/// Advances [Q1,Q2,O1,O2] one step. Process noise enters the occupancy rows only.
StepResult step_dynamics(const IntersectionState& state, const Pair& green, const Pair& arrivals,
                         const Pair& process_noise);

struct Observation {
    Pair dispatched{};          // −ΔQ + arrivals
    Pair dispatched_literal{};  // ΔQ + arrivals
    Pair turn_coupling{};       // left-turn rows of C·x + H
    Pair occupancy_meas{};
    Pair meas_noise{};
    PairFlags meas_clamped{};
};

Observation observe(const IntersectionState& prev, const StepResult& step, const Pair& meas_noise);

ControlState control_update(const ControlState& controls, const Pair& delta_o);
Pair enforce_cycle_budget(double z1, double z2, double cycle_time, double min_green);

}  // namespace crosslight
