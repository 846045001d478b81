#pragma once

// Command-line front end: simulate, analyze, control and score.
//
// Exit codes: 0 success, 1 runtime or data failure, 2 usage error.
// Every command is a pure function of its flags and input files.

#include "objdyn/config.hpp"
#include "objdyn/controller.hpp"
#include "objdyn/core.hpp"
#include "objdyn/inference.hpp"
#include "objdyn/io.hpp"
#include "objdyn/pareto.hpp"
#include "objdyn/scorer.hpp"
#include "objdyn/simulator.hpp"
#include "objdyn/spectral.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace objdyn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Raised for bad flag values discovered after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ofstream open_output(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    return out;
}

inline void close_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

inline Vector parse_point(const std::string& text, const char* flag) {
    try {
        return config::parse_vector(text, flag);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

inline StrategySpec resolve_strategy(const std::string& name, std::optional<double> sigma) {
    StrategySpec s;
    if (sim::is_preset(name)) {
        s = sim::preset(name);
    } else if (std::filesystem::is_regular_file(name)) {
        try {
            s = sim::load_strategy_file(name);
        } catch (const Error& e) {
            throw UsageError(std::string("strategy file: ") + e.what());
        }
    } else {
        throw UsageError("unknown strategy '" + name + "' (expected EF, SF, FF, AI or a strategy file)");
    }
    if (sigma) {
        if (!(*sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
        const auto n = s.drift_matrix.rows();
        s.diffusion = *sigma * Matrix::Identity(n, n);
    }
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string strategy;
    std::size_t sessions = 400;
    std::size_t iterations = 10;
    std::uint64_t seed = 0;
    std::optional<double> sigma;
    double dt = 1.0;
    std::string x0;
    std::string x0_uniform;
    bool no_clip = false;
    unsigned threads = 1;
    std::string out = "trajectories.jsonl";
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    sim::SimConfig cfg;
    cfg.strategy = detail::resolve_strategy(o.strategy, o.sigma);
    cfg.sessions = o.sessions;
    cfg.iterations = o.iterations;
    cfg.base_seed = o.seed;
    cfg.dt = o.dt;
    const auto n = cfg.strategy.drift_matrix.rows();
    cfg.initial_state = sim::FixedStart{Vector::Constant(n, 5.0)};
    if (!o.x0.empty()) cfg.initial_state = sim::FixedStart{detail::parse_point(o.x0, "--x0")};
    if (!o.x0_uniform.empty()) {
        const auto box = detail::parse_point(o.x0_uniform, "--x0-uniform");
        if (box.size() != 2) throw UsageError("--x0-uniform expects 'low,high'");
        cfg.initial_state = sim::UniformStart{box[0], box[1]};
    }
    if (o.no_clip) cfg.clip.reset();
    try {
        sim::validate_config(cfg);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    const auto set = sim::simulate_set(cfg, o.threads);
    auto file = detail::open_output(o.out);
    io::write_session_set(file, set);
    detail::close_output(file, o.out);
    out << "simulate: strategy=" << cfg.strategy.id << " sessions=" << o.sessions << " iterations=" << o.iterations
        << " seed=" << o.seed << " -> " << o.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::string in;
    std::string strategy;
    std::size_t tail = pareto::kDefaultTail;
    std::string out = "report";
    std::vector<std::string> only;
    double dt = 1.0;
    double zero_tol = spectral::kDefaultZeroTol;
};

inline const std::vector<std::string>& analyze_stages() {
    static const std::vector<std::string> stages{"drift", "interference", "spectrum", "prediction", "pareto"};
    return stages;
}

struct StageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int cmd_analyze(const AnalyzeOptions& o, std::ostream& out) {
    std::set<std::string> stages(o.only.begin(), o.only.end());
    if (stages.empty()) stages.insert(analyze_stages().begin(), analyze_stages().end());
    for (const auto& s : stages) {
        if (std::find(analyze_stages().begin(), analyze_stages().end(), s) == analyze_stages().end()) {
            throw UsageError("unknown stage '" + s + "' in --only");
        }
    }
    if (o.tail < 1) throw UsageError("--tail must be >= 1");
    if (!(o.dt > 0.0)) throw UsageError("--dt must be > 0");
    if (!(o.zero_tol > 0.0)) throw UsageError("--zero-tol must be > 0");

    auto stage = [](const std::string& name, const std::string& strategy, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw StageFailure("stage '" + name + "' failed" + (strategy.empty() ? "" : " for strategy '" + strategy + "'") +
                               ": " + e.what());
        }
    };

    const auto trajectories = stage("ingest", "", [&] { return io::read_trajectories_file(o.in); });
    auto sets = io::group_by_strategy(trajectories);
    if (!o.strategy.empty()) {
        auto it = sets.find(o.strategy);
        if (it == sets.end()) {
            throw StageFailure("stage 'ingest' failed: InsufficientData: no sessions for strategy '" + o.strategy + "'");
        }
        auto kept = std::move(it->second);
        sets.clear();
        sets.emplace(o.strategy, std::move(kept));
    }
    if (sets.empty()) throw StageFailure("stage 'ingest' failed: InsufficientData: input has no sessions");

    using io::json;
    auto doc = [] {
        json j;
        j["schema_version"] = io::kSchemaVersion;
        j["strategies"] = json::array();
        return j;
    };
    json drift_doc = doc();
    json interference_doc = doc();
    json spectrum_doc = doc();
    json prediction_doc = doc();
    std::ostringstream pareto_csv;
    std::map<std::string, ObjectiveVector> equilibria;
    const bool need_drift = stages.count("drift") || stages.count("spectrum") || stages.count("prediction");

    std::size_t dimension = 0;
    for (const auto& [id, set] : sets) {
        dimension = std::max(dimension, set.dimension);
        const auto steps = pooled_step_changes(set);
        const std::span<const StepChange> view(steps);
        auto tagged = [&](json body) {
            json j;
            j["strategy"] = id;
            for (auto& [k, v] : body.items()) j[k] = v;
            return j;
        };
        std::optional<DriftModel> model;
        if (need_drift) model = stage("drift", id, [&] { return inference::fit_drift(view); });
        if (stages.count("drift")) drift_doc["strategies"].push_back(tagged(io::to_json(*model)));
        if (stages.count("interference")) {
            const auto m = stage("interference", id, [&] { return inference::interference_matrix(view); });
            interference_doc["strategies"].push_back(tagged(io::to_json(m)));
        }
        if (stages.count("spectrum")) {
            const auto r = stage("spectrum", id, [&] { return spectral::analyze_matrix(model->A_hat, o.dt, o.zero_tol); });
            auto body = io::to_json(r);
            body["zero_tol"] = o.zero_tol;
            spectrum_doc["strategies"].push_back(tagged(std::move(body)));
        }
        if (stages.count("prediction")) {
            const auto r = stage("prediction", id, [&] { return inference::predictive_r2(view, *model); });
            prediction_doc["strategies"].push_back(tagged(io::to_json(r)));
        }
        if (stages.count("pareto")) {
            stage("pareto", id, [&] {
                for (const auto& traj : set.trajectories) {
                    pareto_csv << id << ',' << traj.session_id << ',' << io::format_double(pareto::pareto_efficiency(traj));
                    const auto eq = pareto::equilibrium_estimate(traj, o.tail);
                    for (Eigen::Index i = 0; i < eq.size(); ++i) pareto_csv << ',' << io::format_double(eq[i]);
                    pareto_csv << '\n';
                }
                equilibria[id] = pareto::mean_equilibrium(set, o.tail);
                return 0;
            });
        }
    }

    std::filesystem::create_directories(o.out);
    auto emit = [&](const std::string& name, const std::string& text) {
        const auto path = (std::filesystem::path(o.out) / name).string();
        auto f = detail::open_output(path);
        f << text;
        detail::close_output(f, path);
    };
    if (stages.count("drift")) emit("drift.json", io::dump_17g(drift_doc) + "\n");
    if (stages.count("interference")) emit("interference.json", io::dump_17g(interference_doc) + "\n");
    if (stages.count("spectrum")) emit("spectrum.json", io::dump_17g(spectrum_doc) + "\n");
    if (stages.count("prediction")) emit("prediction.json", io::dump_17g(prediction_doc) + "\n");
    if (stages.count("pareto")) {
        std::string header = "strategy,session_id,efficiency";
        for (std::size_t i = 1; i <= dimension; ++i) header += ",eq_" + std::to_string(i);
        emit("pareto.csv", header + "\n" + pareto_csv.str());

        json front = doc();
        front.erase("strategies");
        json eq = json::object();
        for (const auto& [id, point] : equilibria) eq[id] = io::to_json(point);
        front["tail"] = o.tail;
        front["equilibria"] = std::move(eq);
        front["non_dominated"] = pareto::equilibrium_front(equilibria);
        emit("front.json", io::dump_17g(front) + "\n");
    }
    out << "analyze: " << sets.size() << " strateg" << (sets.size() == 1 ? "y" : "ies") << ", "
        << trajectories.size() << " sessions -> " << o.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// control

struct ControlOptions {
    std::size_t iterations = 10;
    std::uint64_t seed = 0;
    std::string schedule = "default";
    std::size_t window = 5;
    bool halt_on_intervention = false;
    std::string start = "AI";
    double sigma = sim::kDefaultSigma;
    double dt = 1.0;
    std::string x0;
    double zero_margin = 0.05;
    double security_floor = 2.0;
    double efficiency_drop = 0.30;
    double rate_ceiling = 1.5;
    std::string out = "controlled.jsonl";
    std::string events = "events.jsonl";
};

inline int cmd_control(const ControlOptions& o, std::ostream& out) {
    if (!(o.sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
    const auto catalog = sim::preset_catalog(o.sigma);

    control::ControllerConfig cfg;
    cfg.window = o.window;
    cfg.zero_margin = o.zero_margin;
    cfg.security_floor = o.security_floor;
    cfg.efficiency_drop = o.efficiency_drop;
    cfg.rate_ceiling = o.rate_ceiling;
    cfg.halt_on_intervention = o.halt_on_intervention;
    if (o.schedule == "default") {
        cfg.phase_schedule = control::phased_schedule_default();
    } else if (o.schedule != "none") {
        try {
            cfg.phase_schedule = control::load_schedule(o.schedule);
        } catch (const Error& e) {
            throw UsageError(std::string("schedule: ") + e.what());
        }
    }

    control::RunParams params;
    params.iterations = o.iterations;
    params.dt = o.dt;
    params.base_seed = o.seed;
    params.start_strategy = o.start;
    if (!o.x0.empty()) params.initial_state = detail::parse_point(o.x0, "--x0");
    if (!catalog.count(o.start)) throw UsageError("unknown start strategy '" + o.start + "'");
    try {
        control::validate_config(cfg, &catalog);
        if (o.iterations < 1) throw Error(ErrorKind::InvalidArgument, "--iterations must be >= 1");
        if (o.window > o.iterations) throw Error(ErrorKind::InvalidArgument, "--window exceeds --iterations");
        if (!(o.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "--dt must be > 0");
        if (params.initial_state.size() != 3) throw Error(ErrorKind::DimensionMismatch, "--x0 needs 3 components");
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    const auto result = control::run_controlled(params, cfg, catalog);

    auto traj_file = detail::open_output(o.out);
    const auto& traj = result.trajectory;
    for (std::size_t t = 0; t < traj.points.size(); ++t) {
        auto rec = io::trajectory_record(traj.session_id, traj.strategy_id, t, traj.points[t]);
        rec["active_strategy"] = result.point_strategy[t];
        traj_file << rec.dump() << '\n';
    }
    detail::close_output(traj_file, o.out);
    auto events_file = detail::open_output(o.events);
    control::write_events(events_file, result.events);
    detail::close_output(events_file, o.events);

    out << "control: iterations=" << traj.steps() << (result.halted ? " (halted)" : "")
        << " events=" << result.events.size() << " seed=" << o.seed << " -> " << o.out << ", " << o.events << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOptions {
    std::string src;
    std::string manifest;
    long long expected_length = 0;
    bool json = false;
    std::string rules;
    std::string out;  // manifest mode; empty means standard output
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct ManifestRow {
    std::string path;
    long long expected_length = 0;
    std::optional<std::string> session_id;
    std::optional<std::size_t> iteration;
    std::string strategy = "scored";
};

/// `path expected_length [session_id iteration [strategy]]`, comma or
/// whitespace separated; relative paths resolve against the manifest.
inline std::vector<ManifestRow> parse_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + manifest_path + "'");
    const auto base = std::filesystem::path(manifest_path).parent_path();
    std::vector<ManifestRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (char& c : line) {
            if (c == ',') c = ' ';
        }
        std::istringstream fields(line);
        std::vector<std::string> tok;
        for (std::string f; fields >> f;) tok.push_back(f);
        if (tok.empty()) continue;
        const auto where = manifest_path + ":" + std::to_string(line_no);
        if (tok.size() != 2 && tok.size() != 4 && tok.size() != 5) {
            throw Error(ErrorKind::ParseError, where + ": expected 'path expected_length [session_id iteration [strategy]]'");
        }
        ManifestRow row;
        const std::filesystem::path p(tok[0]);
        row.path = p.is_absolute() ? p.string() : (base / p).string();
        row.expected_length = config::parse_integer(tok[1], where + ": expected_length");
        if (tok.size() >= 4) {
            row.session_id = tok[2];
            const auto it = config::parse_integer(tok[3], where + ": iteration");
            if (it < 0) throw Error(ErrorKind::ParseError, where + ": iteration must be >= 0");
            row.iteration = static_cast<std::size_t>(it);
        }
        if (tok.size() == 5) row.strategy = tok[4];
        rows.push_back(std::move(row));
    }
    return rows;
}

inline int cmd_score(const ScoreOptions& o, std::ostream& out) {
    if (o.src.empty() == o.manifest.empty()) throw UsageError("exactly one of --src or --manifest is required");
    scorer::RuleTable rules;
    if (!o.rules.empty()) {
        try {
            rules = scorer::load_rules(o.rules);
        } catch (const Error& e) {
            throw UsageError(std::string("rules: ") + e.what());
        }
    }

    if (!o.src.empty()) {
        if (o.expected_length < 1) throw UsageError("--expected-length must be >= 1");
        const auto b = scorer::score_all(read_text_file(o.src), o.expected_length, rules);
        if (o.json) {
            out << io::dump_17g(scorer::to_json(b)) << '\n';
        } else {
            out << "security=" << io::format_double(b.security.score)
                << " efficiency=" << io::format_double(b.efficiency.score)
                << " functionality=" << io::format_double(b.functionality.score) << '\n';
        }
        return kExitOk;
    }

    std::vector<ManifestRow> rows;
    try {
        rows = parse_manifest(o.manifest);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseError) throw UsageError(e.what());
        throw;
    }
    const bool with_metadata = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const ManifestRow& r) {
        return r.session_id.has_value();
    });
    std::ostringstream buffer;
    for (const auto& row : rows) {
        if (row.expected_length < 1) throw UsageError(row.path + ": expected_length must be >= 1");
        const auto b = scorer::score_all(read_text_file(row.path), row.expected_length, rules);
        if (with_metadata) {
            buffer << io::trajectory_record(*row.session_id, row.strategy, *row.iteration, b.objectives()).dump() << '\n';
        } else {
            auto j = scorer::to_json(b);
            j["path"] = row.path;
            buffer << io::dump_17g(j, -1) << '\n';
        }
    }
    if (with_metadata) {
        // Same contiguity and ordering rules as any trajectory file.
        std::istringstream check(buffer.str());
        io::read_trajectories(check, o.manifest);
    }
    if (o.out.empty()) {
        out << buffer.str();
    } else {
        auto f = detail::open_output(o.out);
        f << buffer.str();
        detail::close_output(f, o.out);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Objective-space drift/diffusion toolkit: simulate, analyze, control, score", "objdyn"};
    app.set_config("--config", "", "key = value configuration file ([command] sections); flags take precedence");
    app.require_subcommand(1);

    SimulateOptions sim_o;
    auto* simulate = app.add_subcommand("simulate", "Generate Euler-Maruyama trajectories as JSONL");
    simulate->add_option("--strategy", sim_o.strategy, "EF, SF, FF, AI or a strategy file")->required();
    simulate->add_option("--sessions", sim_o.sessions, "number of sessions")->capture_default_str();
    simulate->add_option("--iterations", sim_o.iterations, "steps per session")->capture_default_str();
    simulate->add_option("--seed", sim_o.seed, "base seed")->capture_default_str();
    simulate->add_option("--sigma", sim_o.sigma, "isotropic diffusion: sigma * I");
    simulate->add_option("--dt", sim_o.dt, "time step")->capture_default_str();
    simulate->add_option("--x0", sim_o.x0, "fixed initial state, e.g. 5,5,5");
    simulate->add_option("--x0-uniform", sim_o.x0_uniform, "uniform initial box 'low,high'");
    simulate->add_flag("--no-clip", sim_o.no_clip, "disable clipping to [0, 10]");
    simulate->add_option("--threads", sim_o.threads, "worker threads (output is identical for any value)")
        ->capture_default_str();
    simulate->add_option("--out", sim_o.out, "output JSONL path")->capture_default_str();

    AnalyzeOptions an_o;
    auto* analyze = app.add_subcommand("analyze", "Fit drift, interference, spectrum, R^2 and Pareto metrics");
    analyze->add_option("--in", an_o.in, "trajectory JSONL")->required();
    analyze->add_option("--strategy", an_o.strategy, "restrict to one strategy");
    analyze->add_option("--tail", an_o.tail, "equilibrium window")->capture_default_str();
    analyze->add_option("--out", an_o.out, "report directory")->capture_default_str();
    analyze->add_option("--only", an_o.only, "comma-separated stages: drift,interference,spectrum,prediction,pareto")
        ->delimiter(',');
    analyze->add_option("--dt", an_o.dt, "time step for discrete eigenvalues")->capture_default_str();
    analyze->add_option("--zero-tol", an_o.zero_tol, "near-zero tolerance for regime labels")->capture_default_str();

    ControlOptions ct_o;
    auto* control_cmd = app.add_subcommand("control", "Run the adaptive strategy controller on one live session");
    control_cmd->add_option("--iterations", ct_o.iterations, "steps")->capture_default_str();
    control_cmd->add_option("--seed", ct_o.seed, "base seed")->capture_default_str();
    control_cmd->add_option("--schedule", ct_o.schedule, "default, none or a schedule file")->capture_default_str();
    control_cmd->add_option("--window", ct_o.window, "steps in the local drift fit")->capture_default_str();
    control_cmd->add_flag("--halt-on-intervention", ct_o.halt_on_intervention, "stop at the first intervention");
    control_cmd->add_option("--start", ct_o.start, "starting strategy when no schedule is used")->capture_default_str();
    control_cmd->add_option("--sigma", ct_o.sigma, "isotropic diffusion for every strategy")->capture_default_str();
    control_cmd->add_option("--dt", ct_o.dt, "time step")->capture_default_str();
    control_cmd->add_option("--x0", ct_o.x0, "initial state, e.g. 5,5,5");
    control_cmd->add_option("--zero-margin", ct_o.zero_margin, "boundary proximity on Re(lambda)")->capture_default_str();
    control_cmd->add_option("--security-floor", ct_o.security_floor, "intervention threshold")->capture_default_str();
    control_cmd->add_option("--efficiency-drop", ct_o.efficiency_drop, "intervention fraction")->capture_default_str();
    control_cmd->add_option("--rate-ceiling", ct_o.rate_ceiling, "intervention threshold")->capture_default_str();
    control_cmd->add_option("--out", ct_o.out, "trajectory JSONL path")->capture_default_str();
    control_cmd->add_option("--events", ct_o.events, "event log JSONL path")->capture_default_str();

    ScoreOptions sc_o;
    auto* score = app.add_subcommand("score", "Score source files without executing them");
    score->add_option("--src", sc_o.src, "source file");
    score->add_option("--manifest", sc_o.manifest, "batch manifest");
    score->add_option("--expected-length", sc_o.expected_length, "expected length in lines");
    score->add_flag("--json", sc_o.json, "emit the full breakdown as JSON");
    score->add_option("--rules", sc_o.rules, "rule table overriding the defaults");
    score->add_option("--out", sc_o.out, "output path for manifest mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (*simulate) return cmd_simulate(sim_o, out);
        if (*analyze) return cmd_analyze(an_o, out);
        if (*control_cmd) return cmd_control(ct_o, out);
        if (*score) return cmd_score(sc_o, out);
    } catch (const UsageError& e) {
        err << name << ": " << e.what() << '\n';
        return kExitUsage;
    } catch (const StageFailure& e) {
        err << name << ": " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << name << ": " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace objdyn::cli
