#pragma once

// Shared domain types for objective-space dynamics: objective vectors,
// trajectories, session sets, strategies and the analysis reports that the
// other modules produce.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace objdyn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in the n-dimensional objective space. For n = 3 the ordering is
/// [security, efficiency, functionality].
using ObjectiveVector = Eigen::VectorXd;

inline constexpr double kScoreMin = 0.0;
inline constexpr double kScoreMax = 10.0;

enum class ErrorKind {
    DimensionMismatch,
    OutOfRangeScore,
    TooShort,
    NonFinite,
    NonSquare,
    InsufficientData,
    RankDeficientDesign,
    DegenerateVariance,
    TailTooLong,
    InvalidExpectedLength,
    InvalidArgument,
    ScheduleExhausted,
    UnknownStrategy,
    ParseError,
    IoError,
};

inline const char* to_string(ErrorKind k) noexcept {
    switch (k) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::OutOfRangeScore: return "OutOfRangeScore";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::NonSquare: return "NonSquare";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
        case ErrorKind::DegenerateVariance: return "DegenerateVariance";
        case ErrorKind::TailTooLong: return "TailTooLong";
        case ErrorKind::InvalidExpectedLength: return "InvalidExpectedLength";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ScheduleExhausted: return "ScheduleExhausted";
        case ErrorKind::UnknownStrategy: return "UnknownStrategy";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

struct Trajectory {
    std::string session_id;
    std::string strategy_id;
    std::vector<ObjectiveVector> points;  // indexed by iteration t = 0..T

    std::size_t dimension() const { return points.empty() ? 0 : static_cast<std::size_t>(points.front().size()); }
    std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
};

struct SessionSet {
    std::string strategy_id;
    std::size_t dimension = 0;
    std::vector<Trajectory> trajectories;

    std::size_t total_steps() const {
        std::size_t n = 0;
        for (const auto& t : trajectories) n += t.steps();
        return n;
    }
};

/// A named affine drift/diffusion parameterization: mu(x) = A x + b, noise sigma dW.
struct StrategySpec {
    std::string id;
    Matrix drift_matrix;
    Vector drift_intercept;
    Matrix diffusion;

    std::size_t dimension() const { return static_cast<std::size_t>(drift_matrix.rows()); }
};

struct DriftModel {
    Matrix A_hat;
    Vector b_hat;
    Matrix sigma_hat;  // residual covariance
    std::size_t sample_count = 0;
};

struct InterferenceMatrix {
    Matrix entries;
};

enum class Regime { Exponential, Oscillatory, Boundary, Unstable };

inline const char* to_string(Regime r) noexcept {
    switch (r) {
        case Regime::Exponential: return "Exponential";
        case Regime::Oscillatory: return "Oscillatory";
        case Regime::Boundary: return "Boundary";
        case Regime::Unstable: return "Unstable";
    }
    return "Unknown";
}

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;           // continuous time, lambda_max first
    std::vector<std::complex<double>> discrete_eigenvalues;  // 1 + lambda * dt
    double convergence_rate = 0.0;                           // -Re(lambda_max)
    Regime regime = Regime::Exponential;
    bool discrete_stable = false;
    double dt = 1.0;
};

struct PredictionReport {
    double r_squared = 0.0;
    std::vector<double> per_dimension_r_squared;  // NaN where a component has zero target variance
    std::size_t step_count = 0;
};

struct StepChange {
    ObjectiveVector state;
    Vector delta;
};

inline void require_same_dimension(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + ": expected dimension " + std::to_string(a) + ", got " + std::to_string(b));
    }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Returns the trajectory unchanged when every invariant holds; throws otherwise.
inline const Trajectory& validate_trajectory(const Trajectory& raw) {
    if (raw.points.size() < 2) {
        throw Error(ErrorKind::TooShort, "trajectory '" + raw.session_id + "' has " +
                                             std::to_string(raw.points.size()) + " point(s); at least 2 required");
    }
    const auto n = raw.points.front().size();
    if (n < 1) throw Error(ErrorKind::DimensionMismatch, "trajectory '" + raw.session_id + "' has empty points");
    for (std::size_t t = 0; t < raw.points.size(); ++t) {
        const auto& p = raw.points[t];
        if (p.size() != n) {
            throw Error(ErrorKind::DimensionMismatch, "trajectory '" + raw.session_id + "' point " +
                                                          std::to_string(t) + " has dimension " +
                                                          std::to_string(p.size()) + ", expected " + std::to_string(n));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = p[i];
            if (!std::isfinite(v) || v < kScoreMin || v > kScoreMax) {
                throw Error(ErrorKind::OutOfRangeScore, "trajectory '" + raw.session_id + "' point " +
                                                            std::to_string(t) + " component " + std::to_string(i) +
                                                            " = " + std::to_string(v) + " outside [0, 10]");
            }
        }
    }
    return raw;
}

inline void validate_session_set(const SessionSet& set) {
    if (set.trajectories.empty()) throw Error(ErrorKind::InsufficientData, "session set is empty");
    for (const auto& t : set.trajectories) {
        validate_trajectory(t);
        require_same_dimension(static_cast<Eigen::Index>(set.dimension), static_cast<Eigen::Index>(t.dimension()),
                               "session set");
        if (t.strategy_id != set.strategy_id) {
            throw Error(ErrorKind::InvalidArgument,
                        "trajectory '" + t.session_id + "' has strategy '" + t.strategy_id + "', set has '" +
                            set.strategy_id + "'");
        }
    }
}

/// Pairs (x(t), x(t+1) - x(t)) for t = 0..T-1.
inline std::vector<StepChange> step_changes(const Trajectory& traj) {
    std::vector<StepChange> out;
    if (traj.points.size() < 2) return out;
    out.reserve(traj.points.size() - 1);
    for (std::size_t t = 0; t + 1 < traj.points.size(); ++t) {
        out.push_back({traj.points[t], traj.points[t + 1] - traj.points[t]});
    }
    return out;
}

/// Pools the step changes of every trajectory in session order.
inline std::vector<StepChange> pooled_step_changes(const SessionSet& set) {
    std::vector<StepChange> out;
    out.reserve(set.total_steps());
    for (const auto& traj : set.trajectories) {
        auto steps = step_changes(traj);
        out.insert(out.end(), std::make_move_iterator(steps.begin()), std::make_move_iterator(steps.end()));
    }
    return out;
}

}  // namespace objdyn
