#pragma once

// Seeded Euler-Maruyama generation of objective trajectories under affine
// drift strategies:
//
//     x(t+1) = clip(x(t) + (A x(t) + b) dt + sigma sqrt(dt) eps(t)),   eps ~ N(0, I)
//
// Noise for (session, iteration) comes from a counter-based stream, so a
// session is reproducible independently of how sessions are scheduled.

#include "objdyn/config.hpp"
#include "objdyn/core.hpp"
#include "objdyn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace objdyn::sim {

inline constexpr double kDefaultSigma = 0.5;

inline StrategySpec make_diagonal_strategy(std::string id, const std::vector<double>& diag, double sigma) {
    const auto n = static_cast<Eigen::Index>(diag.size());
    StrategySpec s;
    s.id = std::move(id);
    s.drift_matrix = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) s.drift_matrix(i, i) = diag[static_cast<std::size_t>(i)];
    s.drift_intercept = Vector::Zero(n);
    s.diffusion = sigma * Matrix::Identity(n, n);
    return s;
}

/// The four code-generation strategies over [security, efficiency, functionality].
inline StrategySpec preset(const std::string& id, double sigma = kDefaultSigma) {
    if (id == "EF") return make_diagonal_strategy("EF", {0.0, 0.16, 0.0}, sigma);
    if (id == "SF") return make_diagonal_strategy("SF", {0.08, -0.75, 0.0}, sigma);
    if (id == "FF") return make_diagonal_strategy("FF", {-0.82, -0.88, 0.9}, sigma);
    if (id == "AI") return make_diagonal_strategy("AI", {0.08, 0.08, 0.08}, sigma);
    throw Error(ErrorKind::UnknownStrategy, "no preset named '" + id + "' (expected EF, SF, FF or AI)");
}

inline bool is_preset(const std::string& id) { return id == "EF" || id == "SF" || id == "FF" || id == "AI"; }

using Catalog = std::map<std::string, StrategySpec>;

inline Catalog preset_catalog(double sigma = kDefaultSigma) {
    Catalog c;
    for (const char* id : {"EF", "SF", "FF", "AI"}) c.emplace(id, preset(id, sigma));
    return c;
}

inline void validate_strategy(const StrategySpec& s) {
    const auto n = s.drift_matrix.rows();
    if (n < 1 || s.drift_matrix.cols() != n) throw Error(ErrorKind::NonSquare, "strategy '" + s.id + "': drift matrix");
    if (s.diffusion.rows() != n || s.diffusion.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "strategy '" + s.id + "': diffusion must be " + std::to_string(n) +
                                                      "x" + std::to_string(n));
    }
    require_same_dimension(n, s.drift_intercept.size(), "strategy intercept");
    if (!s.drift_matrix.allFinite() || !s.drift_intercept.allFinite() || !s.diffusion.allFinite()) {
        throw Error(ErrorKind::NonFinite, "strategy '" + s.id + "' has non-finite coefficients");
    }
}

/// Reads a strategy from a `key = value` file:
///   id = custom
///   drift_matrix = -0.1 0 0; 0 -0.2 0; 0 0 -0.3
///   drift_intercept = 0 0 0          (optional, default 0)
///   diffusion = 0.5                  (scalar means 0.5 * I; optional, default 0.5 * I)
inline StrategySpec strategy_from_key_values(const config::KeyValues& kv, const std::string& origin) {
    StrategySpec s;
    s.id = kv.count("id") ? kv.at("id") : std::string("custom");
    s.drift_matrix = config::parse_matrix(config::require(kv, "drift_matrix", origin), origin + ": drift_matrix");
    const auto n = static_cast<std::size_t>(s.drift_matrix.rows());
    s.drift_intercept = kv.count("drift_intercept")
                            ? config::parse_vector(kv.at("drift_intercept"), origin + ": drift_intercept")
                            : Vector::Zero(static_cast<Eigen::Index>(n));
    s.diffusion = kv.count("diffusion") ? config::parse_matrix(kv.at("diffusion"), origin + ": diffusion", n)
                                        : kDefaultSigma * Matrix::Identity(static_cast<Eigen::Index>(n),
                                                                           static_cast<Eigen::Index>(n));
    validate_strategy(s);
    return s;
}

inline StrategySpec load_strategy_file(const std::string& path) {
    return strategy_from_key_values(config::load_key_values(path), path);
}

/// mu(x) = A x + b.
inline Vector drift(const StrategySpec& strategy, const ObjectiveVector& x) {
    require_same_dimension(strategy.drift_matrix.cols(), x.size(), "drift");
    return strategy.drift_matrix * x + strategy.drift_intercept;
}

struct ClipBounds {
    double low = kScoreMin;
    double high = kScoreMax;
};

/// One Euler-Maruyama step with externally supplied standard-normal noise.
/// Clipping is component-wise; pass std::nullopt to disable it.
inline ObjectiveVector em_step(const ObjectiveVector& x, const StrategySpec& strategy, double dt, const Vector& noise,
                               std::optional<ClipBounds> bounds = ClipBounds{}) {
    require_same_dimension(x.size(), noise.size(), "em_step noise");
    require_same_dimension(strategy.diffusion.cols(), noise.size(), "em_step diffusion");
    Vector next = x + drift(strategy, x) * dt + strategy.diffusion * noise * std::sqrt(dt);
    if (bounds) next = next.cwiseMax(bounds->low).cwiseMin(bounds->high);
    return next;
}

struct FixedStart {
    ObjectiveVector point;
};

/// x0 drawn uniformly from [low, high]^n per session.
struct UniformStart {
    double low = 0.0;
    double high = 10.0;
};

using InitialState = std::variant<FixedStart, UniformStart>;

struct SimConfig {
    StrategySpec strategy;
    std::size_t sessions = 1;
    std::size_t iterations = 10;
    double dt = 1.0;
    InitialState initial_state = FixedStart{Vector::Constant(3, 5.0)};
    std::uint64_t base_seed = 0;
    std::optional<ClipBounds> clip = ClipBounds{};
};

inline void validate_config(const SimConfig& cfg) {
    validate_strategy(cfg.strategy);
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw Error(ErrorKind::InvalidArgument, "dt must be > 0");
    if (cfg.sessions < 1) throw Error(ErrorKind::InvalidArgument, "sessions must be >= 1");
    if (cfg.iterations < 1) throw Error(ErrorKind::InvalidArgument, "iterations must be >= 1");
    if (const auto* fixed = std::get_if<FixedStart>(&cfg.initial_state)) {
        require_same_dimension(cfg.strategy.drift_matrix.rows(), fixed->point.size(), "initial state");
    } else {
        const auto& u = std::get<UniformStart>(cfg.initial_state);
        if (!(u.low <= u.high)) throw Error(ErrorKind::InvalidArgument, "uniform start requires low <= high");
    }
    if (cfg.clip && !(cfg.clip->low < cfg.clip->high)) {
        throw Error(ErrorKind::InvalidArgument, "clip bounds require low < high");
    }
}

inline std::string session_name(std::size_t index, std::size_t total) {
    int width = 3;
    for (std::size_t t = total > 0 ? total - 1 : 0; t >= 1000; t /= 10) ++width;
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%0*zu", width, index);
    return buf;
}

inline ObjectiveVector initial_point(const SimConfig& cfg, const rng::SessionStream& stream) {
    const auto n = static_cast<std::size_t>(cfg.strategy.dimension());
    if (const auto* fixed = std::get_if<FixedStart>(&cfg.initial_state)) return fixed->point;
    const auto& u = std::get<UniformStart>(cfg.initial_state);
    return (u.low + (u.high - u.low) * stream.uniforms(0, n, rng::Stream::InitialState).array()).matrix();
}

/// One session; depends only on (cfg, session_index).
inline Trajectory simulate_session(const SimConfig& cfg, std::size_t session_index) {
    if (session_index >= cfg.sessions) {
        throw Error(ErrorKind::InvalidArgument, "session index " + std::to_string(session_index) + " out of range");
    }
    validate_config(cfg);
    const rng::SessionStream stream(cfg.base_seed, session_index);
    const auto n = static_cast<std::size_t>(cfg.strategy.dimension());

    Trajectory traj;
    traj.session_id = session_name(session_index, cfg.sessions);
    traj.strategy_id = cfg.strategy.id;
    traj.points.reserve(cfg.iterations + 1);
    traj.points.push_back(initial_point(cfg, stream));
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        traj.points.push_back(em_step(traj.points.back(), cfg.strategy, cfg.dt, stream.normals(t, n), cfg.clip));
    }
    return traj;
}

/// All sessions, in session-index order. `threads` only affects speed.
inline SessionSet simulate_set(const SimConfig& cfg, unsigned threads = 1) {
    validate_config(cfg);
    SessionSet set;
    set.strategy_id = cfg.strategy.id;
    set.dimension = static_cast<std::size_t>(cfg.strategy.dimension());
    set.trajectories.resize(cfg.sessions);

    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.sessions)));
    if (threads == 1) {
        for (std::size_t i = 0; i < cfg.sessions; ++i) set.trajectories[i] = simulate_session(cfg, i);
        return set;
    }
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t i = w; i < cfg.sessions; i += threads) set.trajectories[i] = simulate_session(cfg, i);
            });
        }
    }  // joined
    return set;
}

}  // namespace objdyn::sim
