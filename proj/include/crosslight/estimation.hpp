#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crosslight {

struct RegressionSample {
    double q = 0.0;
    double o = 0.0;
    double o_next = 0.0;
    bool o_next_clamped = false;
};

struct FitResult {
    double k = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
    std::size_t excluded = 0;  // clamped samples left out
};

/// OLS of o_next on [q, o, 1]. Samples flagged o_next_clamped are skipped.
FitResult fit_occupancy_params(std::span<const RegressionSample> samples);

// Consecutive (q_t, o_t, o_{t+1}) triples from a series.
std::vector<RegressionSample> samples_from_series(std::span<const double> q, std::span<const double> o,
                                                  std::span<const bool> o_clamped);

// Deterministic config-format section with keys k, beta, lambda, rmse, n.
std::string fit_report(const FitResult& fit, std::string_view section);

}  // namespace crosslight
