#include "crosslight/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crosslight/errors.hpp"

namespace crosslight {

namespace {

Eigen::Vector2d clamp01(Eigen::Vector2d v) {
    for (int i = 0; i < 2; ++i) {
        if (!std::isfinite(v(i))) throw NumericFault("approx.occupancy", "non-finite approximate-model state");
        v(i) = std::clamp(v(i), 0.0, 1.0);
    }
    return v;
}

void check_euler_stable(const Eigen::Matrix2d& closed, double dt) {
    const Eigen::Matrix2d step = Eigen::Matrix2d::Identity() + dt * closed;
    const double rho = step.eigenvalues().cwiseAbs().maxCoeff();
    if (!(rho < 1.0)) throw ConfigError("detector: dt too large for a stable monitor discretization");
}

}  // namespace

Eigen::Vector2d input_approx(const Pair& intensity, double dt, const Pair& saturation, const Pair& green) {
    Eigen::Vector2d u;
    for (int i = 0; i < 2; ++i) {
        if (intensity[i] < 0.0 || saturation[i] < 0.0 || green[i] < 0.0 || dt < 0.0)
            throw PreconditionError("input_approx expects nonnegative inputs");
        u(i) = intensity[i] / kSecondsPerHour * dt - saturation[i] / kSecondsPerHour * green[i];
    }
    return u;
}

Eigen::Vector2d approx_step(const ApproxModel& m, const Eigen::Vector2d& o, const Eigen::Vector2d& u,
                            const Eigen::Vector2d& p) {
    return clamp01(m.A * o + m.dt * (m.B * u) + p);
}

Eigen::Vector2d approx_observe(const ApproxModel& m, const Eigen::Vector2d& o, const Eigen::Vector2d& u,
                               const Eigen::Vector2d& nu) {
    return m.C * o + m.dt * (m.D * u) + nu;
}

bool is_hurwitz(const Eigen::Matrix2d& a) { return (a.eigenvalues().real().array() < 0.0).all(); }

Eigen::Matrix2d monitor_gain(double g, const ApproxModel& m) {
    const Eigen::Matrix2d gain = -g * Eigen::Matrix2d::Identity();
    if (!std::isfinite(g) || !is_hurwitz(m.A + gain * m.C))
        throw NotHurwitz("monitor gain g=" + std::to_string(g) + " leaves A'+GC' with a nonnegative eigenvalue");
    return gain;
}

MonitorState make_monitor(const ApproxModel& m, const Eigen::Matrix2d& gain, const Eigen::Vector2d& omega0) {
    const Eigen::Matrix2d closed = m.A + gain * m.C;
    if (!is_hurwitz(closed)) throw NotHurwitz("A'+GC' is not Hurwitz");
    check_euler_stable(closed, m.dt);
    MonitorState s;
    s.omega = omega0;
    s.G = gain;
    return s;
}

MonitorState monitor_step(const ApproxModel& m, const MonitorState& s, const Eigen::Vector2d& y, double dt,
                          const Eigen::Vector2d& known_input) {
    const Eigen::Matrix2d closed = m.A + s.G * m.C;
    check_euler_stable(closed, dt);
    MonitorState next = s;
    next.residual = m.C * s.omega - y;
    next.omega = s.omega + dt * (closed * s.omega - s.G * y + m.B * known_input);
    if (!next.omega.allFinite()) throw NumericFault("monitor.omega", "non-finite monitor state");
    return next;
}

std::optional<std::size_t> first_alarm(std::span<const double> norms, double tol, int window) {
    ResidualAlarm alarm(tol, window);
    for (std::size_t i = 0; i < norms.size(); ++i)
        if (alarm.push(norms[i])) return i;
    return std::nullopt;
}

bool residual_decision(std::span<const double> norms, double tol, int window) {
    return first_alarm(norms, tol, window).has_value();
}

bool ResidualAlarm::push(double norm) {
    run_ = norm > tol_ ? run_ + 1 : 0;
    return run_ >= window_;
}

double threshold_train(std::span<const double> benign_delta_o, double kappa) {
    const std::size_t n = benign_delta_o.size();
    if (n < 2) throw TrainingError("threshold training needs at least 2 benign cycles");
    double mean = 0.0;
    for (double v : benign_delta_o) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : benign_delta_o) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double lo = *std::min_element(benign_delta_o.begin(), benign_delta_o.end());
    const double thrsh = lo - kappa * sd;
    if (!std::isfinite(thrsh)) throw TrainingError("threshold training produced a non-finite threshold");
    return thrsh;
}

ThresholdDetectorState train_detector(std::span<const double> benign_delta_o, double kappa, double cycle_time,
                                      const Pair& intensity) {
    ThresholdDetectorState s;
    s.thrsh = threshold_train(benign_delta_o, kappa);
    s.trained = true;
    s.zeta = normalizing_factor(cycle_time, intensity);
    return s;
}

bool threshold_detect(const ThresholdDetectorState& s, double delta_o) {
    if (!s.trained) throw StateError("threshold detector used before training");
    return delta_o < s.thrsh;
}

double normalizing_factor(double cycle_time, const Pair& intensity) {
    const double total = intensity[0] + intensity[1];
    return total > 0.0 ? cycle_time / total : 0.0;
}

Mitigation mitigate(double cycle_time, const Pair& intensity) {
    Mitigation out;
    const double total = intensity[0] + intensity[1];
    if (!(total > 0.0)) {
        out.green = {cycle_time / 2.0, cycle_time / 2.0};
        out.equal_split = true;
        return out;
    }
    out.green[0] = cycle_time * intensity[0] / total;
    out.green[1] = cycle_time * intensity[1] / total;
    return out;
}

}  // namespace crosslight
