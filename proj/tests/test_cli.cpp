#include "objdyn/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace objdyn;

namespace {

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("objdyn_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "objdyn");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static std::size_t lines(const std::string& p) {
        const auto text = slurp(p);
        return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    }

    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

}  // namespace

TEST_F(Cli, SimulateCardinalityAndSummary) {
    ASSERT_EQ(run({"simulate", "--strategy", "AI", "--sessions", "400", "--iterations", "10", "--seed", "7", "--out",
                   path("ai.jsonl")}),
              0)
        << err_.str();
    EXPECT_EQ(lines(path("ai.jsonl")), 400u * 11u);
    EXPECT_NE(out_.str().find("sessions=400 iterations=10 seed=7"), std::string::npos) << out_.str();
}

TEST_F(Cli, SimulateIsDeterministic) {
    ASSERT_EQ(run({"simulate", "--strategy", "FF", "--sessions", "30", "--seed", "3", "--out", path("a.jsonl")}), 0);
    ASSERT_EQ(run({"simulate", "--strategy", "FF", "--sessions", "30", "--seed", "3", "--threads", "4", "--out",
                   path("b.jsonl")}),
              0);
    EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({"simulate", "--strategy", "NOPE", "--out", path("x.jsonl")}), 2);
    EXPECT_EQ(run({"simulate"}), 2);
    EXPECT_EQ(run({"simulate", "--strategy", "AI", "--sessions", "many"}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"simulate", "--strategy", "AI", "--dt", "0", "--out", path("x.jsonl")}), 2);
    EXPECT_EQ(run({"score", "--expected-length", "5"}), 2);
    EXPECT_FALSE(fs::exists(path("x.jsonl")));
}

TEST_F(Cli, CustomStrategyFile) {
    ASSERT_EQ(run({"simulate", "--strategy", std::string(OBJDYN_DATA_DIR) + "/strategy_example.conf", "--sessions", "3",
                   "--out", path("c.jsonl")}),
              0)
        << err_.str();
    EXPECT_NE(slurp(path("c.jsonl")).find("\"strategy\":\"slow_balanced\""), std::string::npos);
}

TEST_F(Cli, AnalyzeWritesBundle) {
    ASSERT_EQ(run({"simulate", "--strategy", "AI", "--sessions", "400", "--seed", "7", "--out", path("ai.jsonl")}), 0);
    ASSERT_EQ(run({"analyze", "--in", path("ai.jsonl"), "--out", path("report")}), 0) << err_.str();
    for (const char* f : {"drift.json", "interference.json", "spectrum.json", "prediction.json", "pareto.csv",
                          "front.json"}) {
        EXPECT_TRUE(fs::exists(path("report") + "/" + f)) << f;
    }
    const auto spectrum = nlohmann::json::parse(slurp(path("report/spectrum.json")));
    EXPECT_EQ(spectrum["schema_version"], "1");
    ASSERT_EQ(spectrum["strategies"].size(), 1u);
    const auto& ai = spectrum["strategies"][0];
    EXPECT_EQ(ai["strategy"], "AI");
    // Regime is Exponential exactly when the fitted drift is negative definite away from zero.
    const auto drift = nlohmann::json::parse(slurp(path("report/drift.json")));
    Matrix a(3, 3);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) a(r, c) = drift["strategies"][0]["A_hat"][r][c].get<double>();
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> sym(0.5 * (a + a.transpose()));
    if (sym.eigenvalues().maxCoeff() < -spectral::kDefaultZeroTol) {
        EXPECT_EQ(ai["regime"], "Exponential");
    }
    EXPECT_EQ(lines(path("report/pareto.csv")), 401u);
}

TEST_F(Cli, AnalyzeTwiceIsIdentical) {
    ASSERT_EQ(run({"simulate", "--strategy", "SF", "--sessions", "50", "--seed", "1", "--out", path("sf.jsonl")}), 0);
    ASSERT_EQ(run({"analyze", "--in", path("sf.jsonl"), "--out", path("r1")}), 0);
    ASSERT_EQ(run({"analyze", "--in", path("sf.jsonl"), "--out", path("r2")}), 0);
    for (const auto& entry : fs::directory_iterator(path("r1"))) {
        EXPECT_EQ(slurp(entry.path().string()), slurp(path("r2") + "/" + entry.path().filename().string()));
    }
}

TEST_F(Cli, AnalyzeOneStepDatasetFails) {
    ASSERT_EQ(run({"simulate", "--strategy", "AI", "--sessions", "1", "--iterations", "1", "--out", path("one.jsonl")}),
              0);
    EXPECT_EQ(run({"analyze", "--in", path("one.jsonl"), "--out", path("r")}), 1);
    EXPECT_NE(err_.str().find("InsufficientData"), std::string::npos) << err_.str();
    EXPECT_NE(err_.str().find("stage 'drift'"), std::string::npos) << err_.str();
}

TEST_F(Cli, AnalyzeMissingInputFails) { EXPECT_EQ(run({"analyze", "--in", path("absent.jsonl")}), 1); }

TEST_F(Cli, ControlDefaultSchedule) {
    ASSERT_EQ(run({"control", "--iterations", "10", "--seed", "5", "--out", path("c.jsonl"), "--events",
                   path("e.jsonl")}),
              0)
        << err_.str();
    EXPECT_EQ(lines(path("c.jsonl")), 11u);
    std::ifstream events(path("e.jsonl"));
    int switches = 0;
    for (std::string line; std::getline(events, line);) {
        switches += nlohmann::json::parse(line)["kind"] == "PhaseSwitch" ? 1 : 0;
    }
    EXPECT_GE(switches, 2);
}

TEST_F(Cli, ControlQuietRun) {
    ASSERT_EQ(run({"control", "--schedule", "none", "--start", "AI", "--sigma", "0", "--out", path("c.jsonl"),
                   "--events", path("e.jsonl")}),
              0);
    EXPECT_EQ(lines(path("e.jsonl")), 0u);
}

TEST_F(Cli, ControlHaltsAtFirstIntervention) {
    ASSERT_EQ(run({"control", "--schedule", "none", "--start", "FF", "--halt-on-intervention", "--iterations", "30",
                   "--seed", "3", "--out", path("c.jsonl"), "--events", path("e.jsonl")}),
              0);
    std::ifstream events(path("e.jsonl"));
    std::vector<nlohmann::json> log;
    for (std::string line; std::getline(events, line);) log.push_back(nlohmann::json::parse(line));
    ASSERT_FALSE(log.empty());
    EXPECT_EQ(log.back()["kind"], "Intervention");
    EXPECT_EQ(lines(path("c.jsonl")), log.back()["iteration"].get<std::size_t>() + 1);
}

TEST_F(Cli, ControlScheduleFiles) {
    EXPECT_EQ(run({"control", "--schedule", std::string(OBJDYN_DATA_DIR) + "/schedule_example.txt", "--out",
                   path("c.jsonl"), "--events", path("e.jsonl")}),
              0)
        << err_.str();
    write("bad.txt", "FF two 3\n");
    EXPECT_EQ(run({"control", "--schedule", path("bad.txt"), "--out", path("c.jsonl"), "--events", path("e.jsonl")}), 2);
    EXPECT_EQ(run({"control", "--schedule", path("missing.txt")}), 2);
}

TEST_F(Cli, ScoreSingleFile) {
    write("a.py", "x = eval(data)\n");
    ASSERT_EQ(run({"score", "--src", path("a.py"), "--expected-length", "1", "--json"}), 0);
    const auto j = nlohmann::json::parse(out_.str());
    EXPECT_EQ(j["security"], 3.0);
    EXPECT_EQ(j["schema_version"], "1");
    EXPECT_EQ(run({"score", "--src", path("a.py"), "--expected-length", "0"}), 2);
    EXPECT_EQ(run({"score", "--src", path("a.py"), "--expected-length", "5", "--rules",
                   std::string(OBJDYN_DATA_DIR) + "/scorer_rules.conf"}),
              0);
}

TEST_F(Cli, ScoreManifestEmitsTrajectories) {
    write("a.py", "import os\n");
    write("b.py", "def f():\n    return 1\n");
    write("m.txt", "a.py 10 s1 0 live\nb.py 10 s1 1 live\n");
    ASSERT_EQ(run({"score", "--manifest", path("m.txt"), "--out", path("t.jsonl")}), 0) << err_.str();
    std::ifstream in(path("t.jsonl"));
    const auto trajs = io::read_trajectories(in);
    ASSERT_EQ(trajs.size(), 1u);
    EXPECT_EQ(trajs[0].strategy_id, "live");
    EXPECT_EQ(trajs[0].points.size(), 2u);

    write("gap.txt", "a.py 10 s1 0\nb.py 10 s1 2\n");
    EXPECT_EQ(run({"score", "--manifest", path("gap.txt")}), 1);
    write("plain.txt", "a.py 10\n");
    ASSERT_EQ(run({"score", "--manifest", path("plain.txt")}), 0);
    EXPECT_NE(out_.str().find("\"path\""), std::string::npos);
}

TEST_F(Cli, ConfigFileSuppliesFlags) {
    write("run.ini", "[simulate]\nstrategy = EF\nsessions = 4\niterations = 3\n");
    ASSERT_EQ(run({"--config", path("run.ini"), "simulate", "--out", path("cfg.jsonl")}), 0) << err_.str();
    EXPECT_EQ(lines(path("cfg.jsonl")), 16u);
    ASSERT_EQ(run({"--config", path("run.ini"), "simulate", "--sessions", "2", "--out", path("cfg.jsonl")}), 0);
    EXPECT_EQ(lines(path("cfg.jsonl")), 8u);
}
