#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "crosslight/intersection.hpp"

namespace crosslight {

struct ApproxModel {
    Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d B = 3.0 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d C = 2.5 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
    double dt = 1.0;
};

Eigen::Vector2d input_approx(const Pair& intensity, double dt, const Pair& saturation, const Pair& green);
Eigen::Vector2d approx_step(const ApproxModel& m, const Eigen::Vector2d& o, const Eigen::Vector2d& u,
                            const Eigen::Vector2d& p);
Eigen::Vector2d approx_observe(const ApproxModel& m, const Eigen::Vector2d& o, const Eigen::Vector2d& u,
                               const Eigen::Vector2d& nu);

// G = −g·I. Throws NotHurwitz unless A′+G·C′ is Hurwitz.
Eigen::Matrix2d monitor_gain(double g, const ApproxModel& m = {});
bool is_hurwitz(const Eigen::Matrix2d& a);

struct MonitorState {
    Eigen::Vector2d omega = Eigen::Vector2d::Zero();
    Eigen::Matrix2d G = -Eigen::Matrix2d::Identity();
    Eigen::Vector2d residual = Eigen::Vector2d::Zero();
    double E = 1.0;
};

MonitorState make_monitor(const ApproxModel& m, const Eigen::Matrix2d& gain, const Eigen::Vector2d& omega0);

// Residual r = C′ω − y from the current ω, then one forward-Euler step of
// ω̇ = (A′+GC′)ω − G·y + B′·known_input.
MonitorState monitor_step(const ApproxModel& m, const MonitorState& s, const Eigen::Vector2d& y, double dt,
                          const Eigen::Vector2d& known_input = Eigen::Vector2d::Zero());

// Index of the sample completing the first run of `window` consecutive norms above tol.
std::optional<std::size_t> first_alarm(std::span<const double> norms, double tol, int window = 3);
bool residual_decision(std::span<const double> norms, double tol, int window = 3);

class ResidualAlarm {
public:
    ResidualAlarm(double tol, int window) : tol_(tol), window_(window) {}
    bool push(double norm);

private:
    double tol_;
    int window_;
    int run_ = 0;
};

struct ThresholdDetectorState {
    double thrsh = 0.0;
    bool trained = false;
    double zeta = 0.0;
};

// min(ΔO) − κ·sd(ΔO), sample standard deviation.
double threshold_train(std::span<const double> benign_delta_o, double kappa = 3.0);
ThresholdDetectorState train_detector(std::span<const double> benign_delta_o, double kappa, double cycle_time,
                                      const Pair& intensity);
bool threshold_detect(const ThresholdDetectorState& s, double delta_o);
double normalizing_factor(double cycle_time, const Pair& intensity);

struct Mitigation {
    Pair green{};
    bool equal_split = false;
};

Mitigation mitigate(double cycle_time, const Pair& intensity);

}  // namespace crosslight
