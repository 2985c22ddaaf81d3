#include "lab.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace enlarge::lab {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int lab(std::initializer_list<std::string> args) {
    std::vector<std::string> store{"enlarge_lab"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : store) argv.push_back(s.data());
    ::testing::internal::CaptureStdout();
    const int code = lab_main(static_cast<int>(argv.size()), argv.data());
    out_ = ::testing::internal::GetCapturedStdout();
    return code;
  }

  fs::path dir_;
  std::string out_;
};

// Small batches keep the suite fast.
const char* kSmallExact =
    R"({"scenarios": 10, "depth": 3, "natural_specs": 20, "recursion_scenarios": 10,
        "transmission_scenarios": 10, "honest_scenarios": 20})";

TEST_F(Cli, MinimalExactConfigPasses) {
  const auto cfg = write("c.json", R"({"mode": "exact", "seed": 7, "exact": {"depth": 3}})");
  EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("o")}), kPass);
  const auto rep = nlohmann::json::parse(slurp(path("o/report.json")));
  EXPECT_TRUE(rep.at("pass").get<bool>());
  for (const auto& s : rep.at("suites")) {
    if (s.at("asserted").get<bool>()) {
      EXPECT_TRUE(s.at("pass").get<bool>()) << s.at("name");
    }
  }
  EXPECT_TRUE(fs::exists(path("o/summary.csv")));
}

TEST_F(Cli, MalformedJsonIsConfigError) {
  const auto cfg = write("c.json", R"({"mode": )");
  EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("o")}), kConfigFailure);
}

TEST_F(Cli, SchemaViolationsAreConfigErrors) {
  const std::vector<std::string> bad = {
      R"({"seed": 1, "colour": "red"})",
      R"({"seed": 1, "exact": {"depth": 9}})",
      R"({"seed": 1, "exact": {"branching": 5}})",
      R"({"exact": {"depth": 3}})",
      R"({"seed": 1, "mode": "fast"})",
      R"({"seed": 1, "mode": "mc", "mc": {"dt": 0}})",
  };
  for (std::size_t i = 0; i < bad.size(); ++i) {
    const auto cfg = write("c" + std::to_string(i) + ".json", bad[i]);
    EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("o")}), kConfigFailure) << bad[i];
  }
  EXPECT_EQ(lab({"run"}), kConfigFailure);
}

TEST_F(Cli, InjectedArbitrageFailsNamedSuite) {
  const auto cfg = write("c.json", R"({"seed": 3, "exact": {"depth": 3, "branching": 2,
                                      "inject_arbitrage": true, "asserted": ["transmission"]}})");
  EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("o")}), kSuiteFailure);
  EXPECT_NE(out_.find("FAILED suite: transmission"), std::string::npos);
}

TEST_F(Cli, EngineErrorExitCode) {
  ASSERT_EQ(lab({"gen", "--seed", "5", "--out", path("s.json")}), kPass);
  auto sc = nlohmann::json::parse(slurp(path("s.json")));
  sc["space"]["prob"][0] = "0";
  write("s.json", sc.dump());
  const auto cfg = write("c.json", R"({"exact": {"scenario_file": ")" + path("s.json") + R"("}})");
  EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("o")}), kEngineFailure);
}

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(lab({"gen", "--seed", "42", "--depth", "3", "--branching", "2", "--out", path("a.json")}), kPass);
  ASSERT_EQ(lab({"gen", "--seed", "42", "--depth", "3", "--branching", "2", "--out", path("b.json")}), kPass);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_EQ(lab({"gen", "--out", path("c.json")}), kConfigFailure);
}

TEST_F(Cli, ScenarioFileRun) {
  ASSERT_EQ(lab({"gen", "--seed", "9", "--depth", "3", "--defaults", "2", "--out", path("s.json")}), kPass);
  const auto cfg = write("c.json", R"({"exact": {"scenario_file": ")" + path("s.json") + R"("}})");
  EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("o")}), kPass);
}

TEST_F(Cli, ReportNeedsReport) {
  fs::create_directories(path("empty"));
  EXPECT_EQ(lab({"report", path("empty")}), kConfigFailure);
  try {
    render_report(path("empty"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingReport);
  }
}

TEST_F(Cli, BothEnginesReportAndDeterminism) {
  const auto cfg = write("c.json", std::string(R"({"mode": "both", "seed": 1, "exact": )") + kSmallExact +
                                       R"(, "mc": {"paths": 4000}})");
  const int first = lab({"run", "--config", cfg, "--out", path("a"), "--dump-paths"});
  EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("b")}), first);
  auto strip = [&](const std::string& p) {
    auto j = nlohmann::json::parse(slurp(p));
    j.erase("timestamp");
    return j.dump();
  };
  EXPECT_EQ(strip(path("a/report.json")), strip(path("b/report.json")));
  EXPECT_TRUE(fs::exists(path("a/paths.csv")));
  EXPECT_FALSE(fs::exists(path("b/paths.csv")));
  EXPECT_TRUE(fs::exists(path("a/mc_bins.csv")));

  ASSERT_EQ(lab({"report", path("a")}), kPass);
  EXPECT_NE(out_.find("[exact]"), std::string::npos);
  EXPECT_NE(out_.find("[mc]"), std::string::npos);
  EXPECT_NE(out_.find("LP level 0"), std::string::npos);
}

TEST_F(Cli, FlagsOverrideConfig) {
  const auto cfg = write("c.json", std::string(R"({"mode": "both", "exact": )") + kSmallExact + "}");
  EXPECT_EQ(lab({"run", "--config", cfg, "--out", path("o"), "--mode", "exact", "--seed", "4", "--tol", "1e-9"}),
            kPass);
  const auto rep = nlohmann::json::parse(slurp(path("o/report.json")));
  EXPECT_EQ(rep.at("config").at("mode"), "exact");
  EXPECT_EQ(rep.at("config").at("seed"), 4);
  EXPECT_EQ(rep.at("config").at("tol"), 1e-9);
}

}  // namespace
}  // namespace enlarge::lab
