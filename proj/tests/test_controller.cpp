#include "objdyn/controller.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace objdyn;
using control::EventKind;

namespace {

Vector v3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

Trajectory traj(std::vector<Vector> pts) { return {"t", "X", std::move(pts)}; }

/// Noiseless points around c with x(t+1) - c = (I + diag(a)) (x(t) - c).
Trajectory rate_trajectory(const Vector& a, std::size_t steps) {
    const Vector c = v3(5, 5, 5);
    Vector dev = v3(0.5, -0.4, 0.3);
    std::vector<Vector> pts{c + dev};
    for (std::size_t k = 0; k < steps; ++k) {
        dev = dev + a.cwiseProduct(dev);
        pts.push_back(c + dev);
    }
    return traj(pts);
}

std::size_t count(const std::vector<control::ControlEvent>& events, EventKind kind, const char* detail = nullptr) {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const auto& e) {
        return e.kind == kind && (!detail || e.detail == detail);
    }));
}

control::RunParams params(std::uint64_t seed, std::size_t iterations = 10) {
    control::RunParams p;
    p.iterations = iterations;
    p.base_seed = seed;
    return p;
}

}  // namespace

TEST(Schedule, DefaultPhases) {
    const auto s = control::phased_schedule_default();
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0].strategy, "FF");
    EXPECT_EQ(s[0].min_iters, 2u);
    EXPECT_EQ(s[0].max_iters, 3u);
    EXPECT_EQ(s[1].strategy, "SF");
    EXPECT_EQ(s[1].min_iters, 3u);
    EXPECT_EQ(s[1].max_iters, 4u);
    EXPECT_EQ(s[2].strategy, "EF");
    EXPECT_EQ(s[2].min_iters, 2u);
    EXPECT_EQ(s[2].max_iters, 3u);
    EXPECT_EQ(s[3].strategy, "AI");
    EXPECT_FALSE(s[3].max_iters.has_value());
}

TEST(Schedule, ParseFile) {
    std::istringstream in("# phases\nFF 2 3\nSF 3 4\nAI 1 -\n");
    const auto s = control::parse_schedule(in);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[1].strategy, "SF");
    EXPECT_EQ(s[1].max_iters, 4u);
    EXPECT_FALSE(s[2].max_iters.has_value());
    std::istringstream bad("FF 3 2\n");
    EXPECT_THROW(control::parse_schedule(bad), Error);
    std::istringstream empty("# nothing\n");
    EXPECT_THROW(control::parse_schedule(empty), Error);
}

TEST(Interventions, EfficiencyDropExamples) {
    control::ControllerConfig cfg;
    const auto hit = control::check_interventions(traj({v3(5, 5.0, 5), v3(5, 3.4, 5)}), cfg);
    ASSERT_EQ(hit.size(), 1u);
    EXPECT_EQ(hit[0].detail, control::kEfficiencyDrop);
    EXPECT_EQ(hit[0].iteration, 1u);
    EXPECT_NEAR(hit[0].triggering_value, 0.32, 1e-12);
    EXPECT_TRUE(control::check_interventions(traj({v3(5, 5.0, 5), v3(5, 3.6, 5)}), cfg).empty());
}

TEST(Interventions, SecurityFloorExample) {
    control::ControllerConfig cfg;
    std::vector<Vector> pts{v3(5, 5, 5), v3(4, 5, 5), v3(3, 5, 5), v3(2.5, 5, 5), v3(1.9, 5, 5)};
    const auto events = control::check_interventions(traj(pts), cfg);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].iteration, 4u);
    EXPECT_EQ(events[0].detail, control::kSecurityFloor);
    EXPECT_EQ(events[0].triggering_value, 1.9);
}

TEST(Interventions, RateCeiling) {
    control::ControllerConfig cfg;
    const auto fast = control::check_interventions(rate_trajectory(v3(-1.6, -1.7, -1.8), 5), cfg);
    ASSERT_EQ(count(fast, EventKind::Intervention, control::kRateCeiling), 1u);
    EXPECT_NEAR(fast.back().triggering_value, 1.6, 1e-9);
    EXPECT_EQ(count(fast, EventKind::Intervention), 1u);
    const auto slow = control::check_interventions(rate_trajectory(v3(-1.4, -1.5, -1.6), 5), cfg);
    EXPECT_TRUE(slow.empty());
}

TEST(Interventions, QuietTrajectoryHasNoEvents) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(4.5, 5.5);
    control::ControllerConfig cfg;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Vector> pts;
        for (int k = 0; k < 12; ++k) pts.push_back(v3(u(gen), u(gen), u(gen)));
        const auto events = control::check_interventions(traj(pts), cfg);
        // Security stays above the floor and efficiency ratios above 0.8; only a fast window can fire.
        for (const auto& e : events) EXPECT_EQ(e.detail, control::kRateCeiling);
        bool any_fast = false;
        for (std::size_t i = cfg.window; i < pts.size(); ++i) {
            const auto s = control::window_spectrum(pts, i, cfg);
            any_fast = any_fast || (s && s->convergence_rate > cfg.rate_ceiling);
        }
        EXPECT_EQ(events.empty(), !any_fast);
    }
}

TEST(RunControlled, ZeroDiffusionAiWithoutScheduleIsQuiet) {
    control::ControllerConfig cfg;
    const auto r = control::run_controlled(params(0), cfg, sim::preset_catalog(0.0));
    EXPECT_TRUE(r.events.empty());
    EXPECT_EQ(r.trajectory.points.size(), 11u);
    for (const auto& s : r.point_strategy) EXPECT_EQ(s, "AI");
}

TEST(RunControlled, DefaultScheduleSwitchTiming) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        control::ControllerConfig cfg;
        cfg.phase_schedule = control::phased_schedule_default();
        const auto r = control::run_controlled(params(seed), cfg, sim::preset_catalog());
        std::vector<std::size_t> switches;
        for (const auto& e : r.events) {
            if (e.kind == EventKind::PhaseSwitch) switches.push_back(e.iteration);
        }
        ASSERT_GE(switches.size(), 2u) << seed;
        EXPECT_GE(switches[0], 2u) << seed;
        EXPECT_LE(switches[0], 3u) << seed;
        EXPECT_EQ(r.point_strategy[1], "FF");
    }
}

TEST(RunControlled, PhaseLengthsRespectBounds) {
    const auto schedule = control::phased_schedule_default();
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        control::ControllerConfig cfg;
        cfg.phase_schedule = schedule;
        const auto r = control::run_controlled(params(seed, 20), cfg, sim::preset_catalog());
        std::size_t phase = 0;
        for (const auto& e : r.events) {
            if (e.kind != EventKind::PhaseSwitch || phase + 1 >= schedule.size()) continue;
            const auto done = static_cast<std::size_t>(e.triggering_value);
            EXPECT_GE(done, schedule[phase].min_iters) << seed;
            EXPECT_LE(done, *schedule[phase].max_iters) << seed;
            ++phase;
        }
    }
}

TEST(RunControlled, Reproducible) {
    control::ControllerConfig cfg;
    cfg.phase_schedule = control::phased_schedule_default();
    const auto a = control::run_controlled(params(42, 30), cfg, sim::preset_catalog());
    const auto b = control::run_controlled(params(42, 30), cfg, sim::preset_catalog());
    EXPECT_EQ(a.events, b.events);
    EXPECT_EQ(a.trajectory.points, b.trajectory.points);
    EXPECT_EQ(a.point_strategy, b.point_strategy);
}

TEST(RunControlled, StaysInBox) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        control::ControllerConfig cfg;
        cfg.phase_schedule = control::phased_schedule_default();
        const auto r = control::run_controlled(params(seed, 25), cfg, sim::preset_catalog(1.5));
        for (const auto& p : r.trajectory.points) {
            EXPECT_GE(p.minCoeff(), 0.0);
            EXPECT_LE(p.maxCoeff(), 10.0);
        }
    }
}

TEST(RunControlled, FfSecurityCollapseInMostRuns) {
    int collapsed = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        control::ControllerConfig cfg;
        auto p = params(seed);
        p.start_strategy = "FF";
        cfg.balanced_strategy = "FF";
        cfg.exploitation_strategy = "FF";
        const auto r = control::run_controlled(p, cfg, sim::preset_catalog());
        const bool hit = std::any_of(r.events.begin(), r.events.end(), [](const auto& e) {
            return e.kind == EventKind::Intervention && e.detail == control::kSecurityFloor && e.iteration < 10 &&
                   e.triggering_value < 2.0;
        });
        collapsed += hit ? 1 : 0;
    }
    EXPECT_GT(collapsed, 50);
}

TEST(RunControlled, HaltOnIntervention) {
    control::ControllerConfig cfg;
    cfg.halt_on_intervention = true;
    auto p = params(3);
    p.start_strategy = "FF";
    cfg.balanced_strategy = "FF";
    cfg.exploitation_strategy = "FF";
    const auto r = control::run_controlled(p, cfg, sim::preset_catalog());
    ASSERT_TRUE(r.halted);
    ASSERT_FALSE(r.events.empty());
    EXPECT_EQ(r.events.back().kind, EventKind::Intervention);
    EXPECT_EQ(r.trajectory.points.size(), r.events.back().iteration + 1);
}

TEST(RunControlled, FallbackAfterFiniteSchedule) {
    control::ControllerConfig cfg;
    cfg.phase_schedule = {{"FF", 2, 2}};
    auto p = params(1, 6);
    p.fallback_strategy = "AI";
    const auto r = control::run_controlled(p, cfg, sim::preset_catalog());
    ASSERT_GE(r.events.size(), 1u);
    const auto first_switch = std::find_if(r.events.begin(), r.events.end(),
                                           [](const auto& e) { return e.kind == EventKind::PhaseSwitch; });
    ASSERT_NE(first_switch, r.events.end());
    EXPECT_EQ(first_switch->iteration, 2u);
    EXPECT_EQ(first_switch->detail, "FF->AI");
    EXPECT_EQ(r.point_strategy[3], "AI");

    p.fallback_strategy = "missing";
    try {
        control::run_controlled(p, cfg, sim::preset_catalog());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ScheduleExhausted);
    }
}

TEST(RunControlled, RejectsUnknownScheduledStrategy) {
    control::ControllerConfig cfg;
    cfg.phase_schedule = {{"ZZ", 1, 2}};
    EXPECT_THROW(control::run_controlled(params(0), cfg, sim::preset_catalog()), Error);
}

TEST(Exploitation, DefaultChoiceFromPresets) {
    EXPECT_EQ(control::select_exploitation_strategy(sim::preset_catalog(), 1e-2), "AI");
}

TEST(Events, JsonShape) {
    const control::ControlEvent e{4, EventKind::Intervention, control::kSecurityFloor, 1.9};
    EXPECT_EQ(control::to_json(e).dump(),
              R"({"iteration":4,"kind":"Intervention","detail":"security_floor","value":1.9})");
}
