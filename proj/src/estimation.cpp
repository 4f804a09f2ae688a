#include "crosslight/estimation.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "crosslight/errors.hpp"
#include "crosslight/numfmt.hpp"

namespace crosslight {

namespace {

constexpr double kPivotTolerance = 1e-10;
constexpr const char* kColumnNames[3] = {"q", "o", "1"};

std::string name_columns(const std::vector<int>& cols) {
    std::string out;
    for (int c : cols) {
        if (!out.empty()) out += ", ";
        out += kColumnNames[c];
    }
    return out;
}

}  // namespace

FitResult fit_occupancy_params(std::span<const RegressionSample> samples) {
    FitResult fit;
    std::vector<const RegressionSample*> used;
    for (const auto& s : samples) {
        if (s.o_next_clamped) {
            ++fit.excluded;
            continue;
        }
        if (!std::isfinite(s.q) || !std::isfinite(s.o) || !std::isfinite(s.o_next))
            throw DegenerateData("non-finite regression sample");
        used.push_back(&s);
    }
    const auto n = static_cast<Eigen::Index>(used.size());
    if (n < 3) throw DegenerateData("need at least 3 unclamped samples, got " + std::to_string(n));

    Eigen::MatrixX3d x(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        x(r, 0) = used[r]->q;
        x(r, 1) = used[r]->o;
        x(r, 2) = 1.0;
        y(r) = used[r]->o_next;
    }

    Eigen::Vector3d scale = x.colwise().norm().transpose();
    std::vector<int> zero_cols;
    for (int c = 0; c < 3; ++c)
        if (scale(c) == 0.0) zero_cols.push_back(c);
    if (!zero_cols.empty()) throw DegenerateData("rank-deficient design: all-zero column(s) " + name_columns(zero_cols));

    const Eigen::MatrixX3d xs = x * scale.cwiseInverse().asDiagonal();
    const Eigen::Matrix3d normal = xs.transpose() * xs;
    const Eigen::Vector3d rhs = xs.transpose() * y;

    Eigen::ColPivHouseholderQR<Eigen::Matrix3d> qr(normal);
    qr.setThreshold(kPivotTolerance);
    if (qr.rank() < 3) {
        std::vector<int> dependent;
        for (Eigen::Index i = qr.rank(); i < 3; ++i) dependent.push_back(qr.colsPermutation().indices()(i));
        throw DegenerateData("rank-deficient design: column(s) " + name_columns(dependent) +
                             " collinear with the others");
    }
    const Eigen::Vector3d coef = qr.solve(rhs).cwiseQuotient(scale);

    fit.k = coef(0);
    fit.beta = coef(1);
    fit.lambda = coef(2);
    fit.rmse = std::sqrt((x * coef - y).squaredNorm() / static_cast<double>(n));
    fit.n = static_cast<std::size_t>(n);
    return fit;
}

std::vector<RegressionSample> samples_from_series(std::span<const double> q, std::span<const double> o,
                                                  std::span<const bool> o_clamped) {
    if (q.size() != o.size() || o.size() != o_clamped.size())
        throw PreconditionError("series lengths differ");
    std::vector<RegressionSample> out;
    for (std::size_t t = 0; t + 1 < q.size(); ++t) out.push_back({q[t], o[t], o[t + 1], o_clamped[t + 1]});
    return out;
}

std::string fit_report(const FitResult& fit, std::string_view section) {
    std::ostringstream os;
    os << '[' << section << "]\n";
    os << "k = " << format_double(fit.k) << '\n';
    os << "beta = " << format_double(fit.beta) << '\n';
    os << "lambda = " << format_double(fit.lambda) << '\n';
    os << "rmse = " << format_double(fit.rmse) << '\n';
    os << "n = " << fit.n << '\n';
    return os.str();
}

}  // namespace crosslight
