#pragma once

// Estimation from pooled step changes: affine drift by least squares,
// residual diffusion, the interference (cross-correlation) matrix and
// one-step predictive R^2.

#include "objdyn/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace objdyn::inference {

namespace detail {

/// Design [x^T 1] and targets dx^T, one row per pooled step.
inline void build_regression(std::span<const StepChange> steps, Matrix& design, Matrix& targets) {
    const auto rows = static_cast<Eigen::Index>(steps.size());
    const auto n = steps.front().state.size();
    design.resize(rows, n + 1);
    targets.resize(rows, n);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& s = steps[static_cast<std::size_t>(r)];
        require_same_dimension(n, s.state.size(), "step state");
        require_same_dimension(n, s.delta.size(), "step delta");
        design.row(r).head(n) = s.state.transpose();
        design(r, n) = 1.0;
        targets.row(r) = s.delta.transpose();
    }
}

inline Matrix deltas_matrix(std::span<const StepChange> steps) {
    const auto n = steps.front().delta.size();
    Matrix d(static_cast<Eigen::Index>(steps.size()), n);
    for (std::size_t r = 0; r < steps.size(); ++r) {
        require_same_dimension(n, steps[r].delta.size(), "step delta");
        d.row(static_cast<Eigen::Index>(r)) = steps[r].delta.transpose();
    }
    return d;
}

/// A column counts as constant when its centered sum of squares is at the
/// rounding floor of its magnitude.
inline bool degenerate_sum_of_squares(double centered_ss, double mean, std::size_t count) {
    const double floor = 1e-12 * (1.0 + std::abs(mean));
    return centered_ss <= floor * floor * static_cast<double>(count);
}

}  // namespace detail

/// Relative pivot threshold below which the design is treated as rank deficient.
inline constexpr double kRankThreshold = 1e-10;

/// Least-squares fit of dx ~ A x + b over the given steps.
inline DriftModel fit_drift(std::span<const StepChange> steps) {
    if (steps.empty()) throw Error(ErrorKind::InsufficientData, "no step changes to fit");
    const auto n = steps.front().state.size();
    const auto p = n + 1;
    if (static_cast<Eigen::Index>(steps.size()) < p) {
        throw Error(ErrorKind::InsufficientData, std::to_string(steps.size()) + " step(s); drift fit needs at least " +
                                                     std::to_string(p));
    }
    Matrix design;
    Matrix targets;
    detail::build_regression(steps, design, targets);

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < p) {
        throw Error(ErrorKind::RankDeficientDesign,
                    "design [x 1] has rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));
    }
    const Matrix coef = qr.solve(targets);  // p x n

    DriftModel model;
    model.A_hat = coef.topRows(n).transpose();
    model.b_hat = coef.row(n).transpose();
    const Matrix residuals = targets - design * coef;
    const auto dof = std::max<Eigen::Index>(design.rows() - p, 1);
    model.sigma_hat = (residuals.transpose() * residuals) / static_cast<double>(dof);
    model.sigma_hat = 0.5 * (model.sigma_hat + model.sigma_hat.transpose()).eval();
    model.sample_count = steps.size();
    return model;
}

/// Pools every step of every session of one strategy.
inline DriftModel fit_drift(const SessionSet& data) {
    const auto steps = pooled_step_changes(data);
    return fit_drift(std::span<const StepChange>(steps));
}

/// Zero-diagonal Pearson correlation matrix of pooled step changes.
inline InterferenceMatrix interference_matrix(std::span<const StepChange> steps) {
    if (steps.size() < 2) throw Error(ErrorKind::InsufficientData, "interference needs at least 2 steps");
    const Matrix d = detail::deltas_matrix(steps);
    const auto count = static_cast<std::size_t>(d.rows());
    const Vector mean = d.colwise().mean().transpose();
    const Matrix centered = d.rowwise() - mean.transpose();
    const Matrix cross = centered.transpose() * centered;

    const auto n = d.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (detail::degenerate_sum_of_squares(cross(i, i), mean[i], count)) {
            throw Error(ErrorKind::DegenerateVariance,
                        "objective " + std::to_string(i) + " has zero variance in its step changes");
        }
    }
    InterferenceMatrix out;
    out.entries = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = std::clamp(cross(i, j) / std::sqrt(cross(i, i) * cross(j, j)), -1.0, 1.0);
            out.entries(i, j) = r;
            out.entries(j, i) = r;
        }
    }
    return out;
}

inline InterferenceMatrix interference_matrix(const SessionSet& data) {
    const auto steps = pooled_step_changes(data);
    return interference_matrix(std::span<const StepChange>(steps));
}

/// One-step predictions dx_hat = A_hat x + b_hat scored by pooled and
/// per-component R^2 = 1 - SS_res / SS_tot.
inline PredictionReport predictive_r2(std::span<const StepChange> steps, const DriftModel& model) {
    if (steps.size() < 2) throw Error(ErrorKind::InsufficientData, "R^2 needs at least 2 steps");
    const auto n = model.A_hat.rows();
    require_same_dimension(n, steps.front().state.size(), "predictive_r2");

    Matrix design;
    Matrix targets;
    detail::build_regression(steps, design, targets);
    Matrix coef(n + 1, n);
    coef.topRows(n) = model.A_hat.transpose();
    coef.row(n) = model.b_hat.transpose();
    const Matrix residuals = targets - design * coef;
    const Vector mean = targets.colwise().mean().transpose();
    const Matrix centered = targets.rowwise() - mean.transpose();

    const Vector ss_res = residuals.colwise().squaredNorm().transpose();
    const Vector ss_tot = centered.colwise().squaredNorm().transpose();

    PredictionReport report;
    report.step_count = steps.size();
    report.per_dimension_r_squared.resize(static_cast<std::size_t>(n));
    double res_total = 0.0;
    double tot_total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        res_total += ss_res[i];
        tot_total += ss_tot[i];
        report.per_dimension_r_squared[static_cast<std::size_t>(i)] =
            detail::degenerate_sum_of_squares(ss_tot[i], mean[i], steps.size())
                ? std::numeric_limits<double>::quiet_NaN()
                : 1.0 - ss_res[i] / ss_tot[i];
    }
    if (!(tot_total > 0.0)) throw Error(ErrorKind::DegenerateVariance, "step changes have zero variance");
    report.r_squared = 1.0 - res_total / tot_total;
    return report;
}

inline PredictionReport predictive_r2(const SessionSet& data, const DriftModel& model) {
    const auto steps = pooled_step_changes(data);
    return predictive_r2(std::span<const StepChange>(steps), model);
}

}  // namespace objdyn::inference
