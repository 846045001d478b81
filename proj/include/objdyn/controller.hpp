#pragma once

// Adaptive strategy switching over a live simulated session.
//
// Each step the controller refits the local drift on a trailing window of
// the session, classifies its spectrum and then
//   - follows the phase schedule while a bounded phase is active,
//   - otherwise switches exploration -> exploitation once complex
//     eigenvalues disappear, and retreats to the balanced strategy when an
//     eigenvalue real part comes within `zero_margin` of zero.
// Intervention triggers are logged on every iteration.

#include "objdyn/config.hpp"
#include "objdyn/core.hpp"
#include "objdyn/inference.hpp"
#include "objdyn/rng.hpp"
#include "objdyn/simulator.hpp"
#include "objdyn/spectral.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace objdyn::control {

struct Phase {
    std::string strategy;
    std::size_t min_iters = 1;
    std::optional<std::size_t> max_iters;  // nullopt: open-ended
};

using PhaseSchedule = std::vector<Phase>;

/// FF for 2-3 iterations, SF for 3-4, EF for 2-3, then AI for the rest of the run.
inline PhaseSchedule phased_schedule_default() {
    return {{"FF", 2, 3}, {"SF", 3, 4}, {"EF", 2, 3}, {"AI", 1, std::nullopt}};
}

struct ControllerConfig {
    std::size_t window = 5;
    double zero_margin = 0.05;
    double zero_tol = spectral::kDefaultZeroTol;
    double security_floor = 2.0;
    double efficiency_drop = 0.30;
    double rate_ceiling = 1.5;
    double dt = 1.0;
    PhaseSchedule phase_schedule;
    std::string balanced_strategy = "AI";
    std::optional<std::string> exploitation_strategy;  // default: chosen from the catalog spectra
    bool halt_on_intervention = false;
    Eigen::Index security_index = 0;
    Eigen::Index efficiency_index = 1;
};

enum class EventKind { PhaseSwitch, BoundaryAvoidSwitch, ExplorationToExploitation, Intervention };

inline const char* to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::PhaseSwitch: return "PhaseSwitch";
        case EventKind::BoundaryAvoidSwitch: return "BoundaryAvoidSwitch";
        case EventKind::ExplorationToExploitation: return "ExplorationToExploitation";
        case EventKind::Intervention: return "Intervention";
    }
    return "Unknown";
}

struct ControlEvent {
    std::size_t iteration = 0;
    EventKind kind = EventKind::Intervention;
    std::string detail;
    double triggering_value = 0.0;

    friend bool operator==(const ControlEvent&, const ControlEvent&) = default;
};

inline constexpr const char* kSecurityFloor = "security_floor";
inline constexpr const char* kEfficiencyDrop = "efficiency_drop";
inline constexpr const char* kRateCeiling = "rate_ceiling";

inline void validate_config(const ControllerConfig& cfg, const sim::Catalog* catalog = nullptr) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be > 0");
    };
    positive(cfg.zero_margin, "zero_margin");
    positive(cfg.zero_tol, "zero_tol");
    positive(cfg.security_floor, "security_floor");
    positive(cfg.efficiency_drop, "efficiency_drop");
    positive(cfg.rate_ceiling, "rate_ceiling");
    positive(cfg.dt, "dt");
    if (cfg.efficiency_drop >= 1.0) throw Error(ErrorKind::InvalidArgument, "efficiency_drop must be < 1");
    if (cfg.window < 2) throw Error(ErrorKind::InvalidArgument, "window must be >= 2");
    for (const auto& p : cfg.phase_schedule) {
        if (p.min_iters < 1) throw Error(ErrorKind::InvalidArgument, "phase '" + p.strategy + "': min_iters must be >= 1");
        if (p.max_iters && *p.max_iters < p.min_iters) {
            throw Error(ErrorKind::InvalidArgument, "phase '" + p.strategy + "': max_iters < min_iters");
        }
        if (catalog && !catalog->count(p.strategy)) {
            throw Error(ErrorKind::UnknownStrategy, "scheduled strategy '" + p.strategy + "' is not in the catalog");
        }
    }
}

/// Spectrum of the drift fitted on the `window` steps ending at point
/// `end`; nullopt when the window is short or its design is rank deficient.
inline std::optional<SpectrumReport> window_spectrum(const std::vector<ObjectiveVector>& points, std::size_t end,
                                                     const ControllerConfig& cfg) {
    if (end >= points.size() || end < cfg.window) return std::nullopt;
    std::vector<StepChange> steps;
    steps.reserve(cfg.window);
    for (std::size_t t = end - cfg.window; t < end; ++t) steps.push_back({points[t], points[t + 1] - points[t]});
    try {
        const auto model = inference::fit_drift(std::span<const StepChange>(steps));
        return spectral::analyze_matrix(model.A_hat, cfg.dt, cfg.zero_tol);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InsufficientData || e.kind() == ErrorKind::RankDeficientDesign) return std::nullopt;
        throw;
    }
}

/// Intervention events raised at iteration `i` of `points`.
inline std::vector<ControlEvent> interventions_at(const std::vector<ObjectiveVector>& points, std::size_t i,
                                                  const ControllerConfig& cfg) {
    std::vector<ControlEvent> events;
    const double security = points[i][cfg.security_index];
    if (security < cfg.security_floor) events.push_back({i, EventKind::Intervention, kSecurityFloor, security});
    if (i >= 1) {
        const double before = points[i - 1][cfg.efficiency_index];
        const double after = points[i][cfg.efficiency_index];
        if (after < (1.0 - cfg.efficiency_drop) * before) {
            events.push_back({i, EventKind::Intervention, kEfficiencyDrop, 1.0 - after / before});
        }
    }
    if (auto spectrum = window_spectrum(points, i, cfg); spectrum && spectrum->convergence_rate > cfg.rate_ceiling) {
        events.push_back({i, EventKind::Intervention, kRateCeiling, spectrum->convergence_rate});
    }
    return events;
}

/// Scans a whole trajectory for intervention triggers, in iteration order.
inline std::vector<ControlEvent> check_interventions(const Trajectory& traj, const ControllerConfig& cfg) {
    if (traj.points.size() < 2) throw Error(ErrorKind::TooShort, "intervention check needs at least 2 points");
    validate_config(cfg);
    std::vector<ControlEvent> events;
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        auto at = interventions_at(traj.points, i, cfg);
        events.insert(events.end(), at.begin(), at.end());
    }
    return events;
}

/// Real spectrum with the largest convergence rate; ties go to catalog order.
inline std::string select_exploitation_strategy(const sim::Catalog& catalog, double zero_tol) {
    std::string best;
    double best_rate = -std::numeric_limits<double>::infinity();
    for (const auto& [id, spec] : catalog) {
        const auto report = spectral::analyze_matrix(spec.drift_matrix, 1.0, zero_tol);
        const bool real = std::all_of(report.eigenvalues.begin(), report.eigenvalues.end(),
                                      [&](const auto& l) { return std::abs(l.imag()) <= zero_tol; });
        if (real && report.convergence_rate > best_rate) {
            best = id;
            best_rate = report.convergence_rate;
        }
    }
    if (best.empty()) throw Error(ErrorKind::UnknownStrategy, "catalog has no strategy with a real spectrum");
    return best;
}

struct RunParams {
    std::size_t iterations = 10;
    double dt = 1.0;
    ObjectiveVector initial_state = Vector::Constant(3, 5.0);
    std::uint64_t base_seed = 0;
    std::uint64_t session_index = 0;
    std::optional<sim::ClipBounds> clip = sim::ClipBounds{};
    std::string start_strategy = "AI";     // used when no schedule is given
    std::string fallback_strategy = "AI";  // used when a finite schedule runs out
    std::string session_id = "controlled";
};

struct ControlResult {
    Trajectory trajectory;
    /// Strategy that produced each point; entry 0 is the starting strategy.
    std::vector<std::string> point_strategy;
    std::vector<ControlEvent> events;
    bool halted = false;
};

inline ControlResult run_controlled(const RunParams& params, ControllerConfig cfg, const sim::Catalog& catalog) {
    validate_config(cfg, &catalog);
    if (params.iterations < 1) throw Error(ErrorKind::InvalidArgument, "iterations must be >= 1");
    if (cfg.window > params.iterations) {
        throw Error(ErrorKind::InvalidArgument, "window " + std::to_string(cfg.window) + " exceeds iterations " +
                                                    std::to_string(params.iterations));
    }
    cfg.dt = params.dt;
    auto lookup = [&](const std::string& id) -> const StrategySpec& {
        auto it = catalog.find(id);
        if (it == catalog.end()) throw Error(ErrorKind::UnknownStrategy, "strategy '" + id + "' is not in the catalog");
        return it->second;
    };
    const std::string exploit =
        cfg.exploitation_strategy ? *cfg.exploitation_strategy : select_exploitation_strategy(catalog, cfg.zero_tol);
    lookup(exploit);
    lookup(cfg.balanced_strategy);

    bool scheduled = !cfg.phase_schedule.empty();
    std::size_t phase = 0;
    std::size_t in_phase = 0;
    std::string current = scheduled ? cfg.phase_schedule.front().strategy : params.start_strategy;
    const auto n = static_cast<std::size_t>(lookup(current).dimension());
    require_same_dimension(static_cast<Eigen::Index>(n), params.initial_state.size(), "initial state");

    const rng::SessionStream stream(params.base_seed, params.session_index);
    ControlResult result;
    result.trajectory.session_id = params.session_id;
    result.trajectory.strategy_id = "controlled";
    auto& points = result.trajectory.points;
    points.push_back(params.initial_state);
    result.point_strategy.push_back(current);
    bool seen_complex = false;

    auto switch_to = [&](std::size_t i, EventKind kind, const std::string& next, double value) {
        result.events.push_back({i, kind, current + "->" + next, value});
        current = next;
        in_phase = 0;
    };

    for (std::size_t t = 0; t < params.iterations; ++t) {
        points.push_back(sim::em_step(points.back(), lookup(current), params.dt, stream.normals(t, n), params.clip));
        result.point_strategy.push_back(current);
        ++in_phase;
        const std::size_t i = t + 1;

        const auto interventions = interventions_at(points, i, cfg);
        result.events.insert(result.events.end(), interventions.begin(), interventions.end());
        if (cfg.halt_on_intervention && !interventions.empty()) {
            result.halted = true;
            break;
        }
        if (i == params.iterations) break;

        const bool in_bounded_phase = scheduled && cfg.phase_schedule[phase].max_iters.has_value();
        if (in_bounded_phase) {
            const auto& p = cfg.phase_schedule[phase];
            const bool at_max = in_phase >= *p.max_iters;
            const bool last = phase + 1 == cfg.phase_schedule.size();
            // An intervention holds the phase until its max_iters.
            const bool leave = at_max || (!last && in_phase >= p.min_iters && interventions.empty());
            if (leave) {
                const auto done = static_cast<double>(in_phase);
                if (!last) {
                    ++phase;
                    switch_to(i, EventKind::PhaseSwitch, cfg.phase_schedule[phase].strategy, done);
                } else {
                    if (!catalog.count(params.fallback_strategy)) {
                        throw Error(ErrorKind::ScheduleExhausted, "schedule ended at iteration " + std::to_string(i));
                    }
                    switch_to(i, EventKind::PhaseSwitch, params.fallback_strategy, done);
                    scheduled = false;
                }
            }
            continue;
        }

        const auto spectrum = window_spectrum(points, i, cfg);
        if (!spectrum) continue;  // hold the current strategy
        double min_abs_real = std::numeric_limits<double>::infinity();
        double max_abs_imag = 0.0;
        for (const auto& l : spectrum->eigenvalues) {
            min_abs_real = std::min(min_abs_real, std::abs(l.real()));
            max_abs_imag = std::max(max_abs_imag, std::abs(l.imag()));
        }
        if (min_abs_real < cfg.zero_margin) {
            if (current != cfg.balanced_strategy) {
                switch_to(i, EventKind::BoundaryAvoidSwitch, cfg.balanced_strategy, min_abs_real);
                seen_complex = false;
            }
        } else if (max_abs_imag > cfg.zero_tol) {
            seen_complex = true;
        } else if (seen_complex) {
            if (current != exploit) switch_to(i, EventKind::ExplorationToExploitation, exploit, max_abs_imag);
            seen_complex = false;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Formats

/// One phase per line: `<strategy> <min_iters> <max_iters|->`.
inline PhaseSchedule parse_schedule(std::istream& in, const std::string& origin = "<schedule>") {
    PhaseSchedule schedule;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::vector<std::string> tok;
        for (std::string f; fields >> f;) tok.push_back(f);
        if (tok.empty()) continue;
        const auto where = origin + ":" + std::to_string(line_no);
        if (tok.size() != 3) throw Error(ErrorKind::ParseError, where + ": expected '<strategy> <min> <max|->'");
        Phase p;
        p.strategy = tok[0];
        const auto min = config::parse_integer(tok[1], where + ": min_iters");
        if (min < 1) throw Error(ErrorKind::ParseError, where + ": min_iters must be >= 1");
        p.min_iters = static_cast<std::size_t>(min);
        if (tok[2] != "-" && tok[2] != "inf") {
            const auto max = config::parse_integer(tok[2], where + ": max_iters");
            if (max < min) throw Error(ErrorKind::ParseError, where + ": max_iters < min_iters");
            p.max_iters = static_cast<std::size_t>(max);
        }
        schedule.push_back(std::move(p));
    }
    if (schedule.empty()) throw Error(ErrorKind::ParseError, origin + ": schedule has no phases");
    return schedule;
}

inline PhaseSchedule load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    return parse_schedule(in, path);
}

inline nlohmann::ordered_json to_json(const ControlEvent& e) {
    nlohmann::ordered_json j;
    j["iteration"] = e.iteration;
    j["kind"] = to_string(e.kind);
    j["detail"] = e.detail;
    j["value"] = e.triggering_value;
    return j;
}

inline void write_events(std::ostream& out, const std::vector<ControlEvent>& events) {
    for (const auto& e : events) out << to_json(e).dump() << '\n';
}

}  // namespace objdyn::control
