#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include <evodispatch/cli.hpp>

#include "support.hpp"

using namespace evodispatch;
using namespace testsupport;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string path(const std::filesystem::path& p) { return p.string(); }

}  // namespace

TEST(Cli, GenerateIsReproducible) {
  const auto dir = temp_dir("cli-gen");
  const auto a = invoke({"generate", "--name", "P50_C30_T300", "--seed", "1", "--out", path(dir / "a")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = invoke({"generate", "--name", "P50_C30_T300", "--seed", "1", "--out", path(dir / "b")});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto text = slurp(dir / "a" / "scenario.json");
  EXPECT_EQ(text, slurp(dir / "b" / "scenario.json"));
  EXPECT_EQ(scenario_from_json(nlohmann::json::parse(text)).requests.size(), 50u);
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "manifest.json"));
}

TEST(Cli, BadNameIsUsageError) {
  const auto r = invoke({"generate", "--name", "P200C100", "--out", path(temp_dir("cli-bad"))});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("P200C100"), std::string::npos);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"run", "--name", "P5_C2_T300", "--dt", "0", "--out", path(temp_dir("cli-dt"))}).code, 2);
}

TEST(Cli, RunCoLocatedPassengerWaitsZero) {
  const auto dir = temp_dir("cli-run1");
  write(dir / "m.csv", "0,300\n300,0\n");
  Scenario s = make_scenario({PassengerRequest{0, ZoneId(0), ZoneId(1), 0}}, {TaxiInit{0, ZoneId(0), 0}}, 300);
  write(dir / "s.json", scenario_to_json(s).dump());
  const auto r = invoke({"run", "--matrix", path(dir / "m.csv"), "--scenario", path(dir / "s.json"), "--objective",
                      "distance", "--out", path(dir / "out")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mean wait: 0.0 min"), std::string::npos);
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
  EXPECT_EQ(m["mean_wait_min"].get<double>(), 0.0);
  EXPECT_EQ(m["method"], "distance");
  for (const char* f : {"heatmap.csv", "trace.jsonl", "objective.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
}

TEST(Cli, RunWithObjectiveFile) {
  const auto dir = temp_dir("cli-obj");
  write(dir / "good.json", R"({"components":[{"form":"LoadQuadratic"},{"form":"PairLinear","expr":"TR_origin_start"}],"weights":[10,1]})");
  write(dir / "deep.json", R"js({"components":[{"form":"PairLinear","expr":"abs(relu(big_m))"}],"weights":[1]})js");
  write(dir / "six.json", R"({"components":[{"form":"LoadQuadratic"},{"form":"LoadQuadratic"},{"form":"LoadQuadratic"},
      {"form":"LoadQuadratic"},{"form":"LoadQuadratic"},{"form":"LoadQuadratic"}],"weights":[1,1,1,1,1,1]})");
  const auto good = invoke({"run", "--name", "P10_C4_T600", "--objective", path(dir / "good.json"), "--out",
                         path(dir / "g")});
  ASSERT_EQ(good.code, 0) << good.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "g" / "metrics.json"))["method"], "good");
  const auto deep = invoke({"run", "--name", "P10_C4_T600", "--objective", path(dir / "deep.json"), "--out",
                         path(dir / "d")});
  EXPECT_EQ(deep.code, 2);
  EXPECT_NE(deep.err.find("big_m"), std::string::npos);
  EXPECT_EQ(invoke({"run", "--name", "P10_C4_T600", "--objective", path(dir / "six.json"), "--out", path(dir / "s")}).code,
            2);
  EXPECT_EQ(invoke({"run", "--name", "P10_C4_T600", "--objective", "nonsense", "--out", path(dir / "n")}).code, 2);
}

TEST(Cli, RunIsByteIdentical) {
  const auto dir = temp_dir("cli-repeat");
  for (const char* d : {"a", "b"})
    ASSERT_EQ(invoke({"run", "--name", "P35_C60_T600", "--seed", "4", "--objective", "default_composite", "--out",
                   path(dir / d)})
                  .code,
              0);
  EXPECT_EQ(slurp(dir / "a" / "metrics.json"), slurp(dir / "b" / "metrics.json"));
  EXPECT_EQ(slurp(dir / "a" / "trace.jsonl"), slurp(dir / "b" / "trace.jsonl"));
}

TEST(Cli, EvolveMock) {
  const auto dir = temp_dir("cli-evolve");
  const auto r = invoke({"evolve", "--name", "P12_C6_T600", "--seed", "2", "--mock", "--iters", "10", "--pop", "5",
                      "--out", path(dir / "closed")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(slurp(dir / "closed" / "evolution.json"));
  ASSERT_EQ(rep["iterations"].size(), 10u);
  double prev = 1e300;
  for (const auto& it : rep["iterations"]) {
    EXPECT_LE(it["best"].get<double>(), prev);
    prev = it["best"].get<double>();
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "closed" / "best_condensed.txt"));

  const auto o = invoke({"evolve", "--name", "P12_C6_T1200", "--seed", "2", "--mock", "--iters", "3", "--pop", "4",
                      "--open-loop", "--out", path(dir / "open")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto orep = nlohmann::json::parse(slurp(dir / "open" / "evolution.json"));
  EXPECT_EQ(orep["generator_queries"].get<int>(), 12);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "open" / "metrics.json"))["method"], "evolved_open_loop");
}

TEST(Cli, EvolveNeedsOneGenerator) {
  const auto dir = temp_dir("cli-evolve-bad");
  EXPECT_EQ(invoke({"evolve", "--name", "P5_C2_T300", "--out", path(dir)}).code, 2);
  EXPECT_EQ(invoke({"evolve", "--name", "P5_C2_T300", "--mock", "--adaptive-mock", "--out", path(dir)}).code, 2);
  EXPECT_EQ(invoke({"evolve", "--name", "P5_C2_T300", "--mock", "--hmcr", "2", "--out", path(dir)}).code, 2);
}

TEST(Cli, Oracle) {
  const auto dir = temp_dir("cli-oracle");
  for (int seed = 0; seed < 5; ++seed) {
    const auto r = invoke({"oracle", "--name", "P4_C2_T300", "--seed", std::to_string(seed), "--out",
                        path(dir / std::to_string(seed))});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / std::to_string(seed) / "gap.json"));
    EXPECT_LE(j["oracle_wait_s"].get<std::int64_t>(), j["hierarchical_wait_s"].get<std::int64_t>());
  }
  const auto single = invoke({"oracle", "--name", "P4_C1_T300", "--out", path(dir / "single")});
  ASSERT_EQ(single.code, 0);
  const auto j = nlohmann::json::parse(slurp(dir / "single" / "gap.json"));
  EXPECT_EQ(j["oracle_wait_s"], j["hierarchical_wait_s"]);
  EXPECT_EQ(invoke({"oracle", "--name", "P9_C2_T300", "--out", path(dir / "big")}).code, 2);
}

TEST(Cli, Report) {
  const auto dir = temp_dir("cli-report");
  std::vector<std::string> files;
  for (const char* m : {"distance", "default_composite"})
    for (const char* s : {"P5_C3_T300", "P6_C3_T300", "P7_C3_T300"}) {
      const auto out = dir / (std::string(m) + s);
      ASSERT_EQ(invoke({"run", "--name", s, "--objective", m, "--out", path(out)}).code, 0);
      files.push_back(path(out / "metrics.json"));
    }
  std::vector<std::string> args{"report"};
  args.insert(args.end(), files.begin(), files.end());
  const auto r = invoke(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = text::lines(r.out);
  std::size_t nonempty = 0;
  for (auto l : rows) nonempty += !text::trim(l).empty();
  EXPECT_EQ(nonempty, 3u);
  EXPECT_EQ(text::split(rows[0], ',').size(), 4u);
  EXPECT_TRUE(rows[1].starts_with("distance,"));

  const auto one = invoke({"report", files[0]});
  ASSERT_EQ(one.code, 0);
  EXPECT_EQ(text::split(text::lines(one.out)[0], ',').size(), 2u);

  ASSERT_EQ(invoke({"run", "--name", "P5_C3_T300", "--bins", "300", "--out", path(dir / "b300")}).code, 0);
  const auto mixed = invoke({"report", files[0], path(dir / "b300" / "metrics.json")});
  EXPECT_EQ(mixed.code, 2);
  EXPECT_NE(mixed.err.find("bin size"), std::string::npos);
  EXPECT_EQ(invoke({"report", path(dir / "missing.json")}).code, 2);
}

TEST(Cli, ConfigFile) {
  const auto dir = temp_dir("cli-config");
  write(dir / "run.ini", "[run]\nname = P8_C3_T600\nseed = 3\nobjective = distance\nout = " + path(dir / "out") + "\n");
  const auto r = invoke({"--config", path(dir / "run.ini"), "run"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
  EXPECT_EQ(m["scenario"], "P8_C3_T600");
  EXPECT_EQ(m["method"], "distance");
  EXPECT_EQ(m["seed"], 3);
}

TEST(Cli, CityRoundTrip) {
  const auto dir = temp_dir("cli-city");
  ASSERT_EQ(invoke({"city", "--zones", "7", "--seed", "3", "--out", path(dir / "c")}).code, 0);
  const auto r = invoke({"run", "--matrix", path(dir / "c" / "matrix.csv"), "--freq", path(dir / "c" / "freq.csv"),
                      "--name", "P10_C3_T600", "--out", path(dir / "r")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(invoke({"run", "--freq", path(dir / "c" / "freq.csv"), "--name", "P10_C3_T600", "--out", path(dir / "x")}).code,
            2);
}

TEST(Cli, BinaryExitCodes) {
  const std::string bin = EVODISPATCH_CLI_PATH;
  const auto dir = temp_dir("cli-binary");
  auto run = [&](const std::string& args) {
    const int status = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(run("generate --name P5_C2_T300 --out " + path(dir / "ok")), 0);
  EXPECT_EQ(run("generate --name nonsense --out " + path(dir / "bad")), 2);
  EXPECT_EQ(run("--help"), 0);
}
