#pragma once

// Dominance and Pareto efficiency; every objective is maximized.

#include "objdyn/core.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace objdyn::pareto {

/// a dominates b iff a >= b component-wise with at least one strict inequality.
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    require_same_dimension(a.size(), b.size(), "dominates");
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return false;
        strict = strict || a[i] > b[i];
    }
    return strict;
}

/// Flags for each point: true when no other point dominates it. Duplicates
/// of a non-dominated point are all non-dominated.
///
/// Points are visited in lexicographically descending order. A dominator is
/// always lexicographically greater than what it dominates, so a point is
/// dominated iff one of the maximal points already seen dominates it.
inline std::vector<bool> non_dominated_mask(const std::vector<ObjectiveVector>& points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = points[a];
        const auto& pb = points[b];
        require_same_dimension(pa.size(), pb.size(), "pareto points");
        for (Eigen::Index i = 0; i < pa.size(); ++i) {
            if (pa[i] != pb[i]) return pa[i] > pb[i];
        }
        return a < b;
    });

    std::vector<bool> mask(points.size(), false);
    std::vector<std::size_t> front;
    for (auto idx : order) {
        const bool dominated =
            std::any_of(front.begin(), front.end(), [&](std::size_t f) { return dominates(points[f], points[idx]); });
        if (!dominated) {
            mask[idx] = true;
            front.push_back(idx);
        }
    }
    return mask;
}

/// Fraction of a trajectory's points that no other point of it dominates.
inline double pareto_efficiency(const Trajectory& traj) {
    if (traj.points.empty()) return 0.0;
    const auto mask = non_dominated_mask(traj.points);
    const auto kept = std::count(mask.begin(), mask.end(), true);
    return static_cast<double>(kept) / static_cast<double>(traj.points.size());
}

inline constexpr std::size_t kDefaultTail = 3;

/// Component-wise mean of the final `tail` points.
inline ObjectiveVector equilibrium_estimate(const Trajectory& traj, std::size_t tail = kDefaultTail) {
    if (tail < 1) throw Error(ErrorKind::InvalidArgument, "tail must be >= 1");
    if (tail > traj.points.size()) {
        throw Error(ErrorKind::TailTooLong, "tail " + std::to_string(tail) + " exceeds trajectory length " +
                                                std::to_string(traj.points.size()));
    }
    ObjectiveVector sum = ObjectiveVector::Zero(traj.points.back().size());
    for (std::size_t i = traj.points.size() - tail; i < traj.points.size(); ++i) sum += traj.points[i];
    return sum / static_cast<double>(tail);
}

/// Cross-session mean of per-trajectory equilibria.
inline ObjectiveVector mean_equilibrium(const SessionSet& set, std::size_t tail = kDefaultTail) {
    if (set.trajectories.empty()) throw Error(ErrorKind::InsufficientData, "empty session set");
    ObjectiveVector sum = ObjectiveVector::Zero(static_cast<Eigen::Index>(set.dimension));
    for (const auto& t : set.trajectories) sum += equilibrium_estimate(t, tail);
    return sum / static_cast<double>(set.trajectories.size());
}

inline double mean_efficiency(const SessionSet& set) {
    if (set.trajectories.empty()) throw Error(ErrorKind::InsufficientData, "empty session set");
    double sum = 0.0;
    for (const auto& t : set.trajectories) sum += pareto_efficiency(t);
    return sum / static_cast<double>(set.trajectories.size());
}

/// Strategies whose equilibrium is not dominated by another strategy's.
inline std::vector<std::string> equilibrium_front(const std::map<std::string, ObjectiveVector>& equilibria) {
    std::vector<std::string> labels;
    std::vector<ObjectiveVector> points;
    for (const auto& [label, point] : equilibria) {
        labels.push_back(label);
        points.push_back(point);
    }
    const auto mask = non_dominated_mask(points);
    std::vector<std::string> front;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (mask[i]) front.push_back(labels[i]);
    }
    return front;
}

}  // namespace objdyn::pareto
