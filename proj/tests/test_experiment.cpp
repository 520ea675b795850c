#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qmpc/errors.hpp"
#include "qmpc/experiment.hpp"

using namespace qmpc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qmpc_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "t.conf");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesEveryKey) {
  const RunConfig c = parse_config(
      "# comment\n"
      "n = 16\n"
      "m = 32   # trailing comment\n"
      "depth = 4\n"
      "p = 1009\n"
      "quorum_c = 2.5\n"
      "epsilon = 0.02\n"
      "bad_fraction = 0.25\n"
      "adversary = garbage\n"
      "adversary.gate = silent\n"
      "seed = 42\n"
      "repetitions = 3\n"
      "out_dir = somewhere\n"
      "formation_retries = 10\n"
      "transcript = digest\n",
      "t.conf");
  EXPECT_EQ(c.n, 16u);
  EXPECT_EQ(c.m, 32u);
  EXPECT_EQ(c.depth, 4);
  EXPECT_EQ(c.p, 1009u);
  EXPECT_EQ(c.quorum_size(), 10u);  // ceil(2.5 * 4)
  EXPECT_EQ(c.bad_count(), 4u);
  EXPECT_EQ(c.adversary, Behavior::Garbage);
  EXPECT_EQ(c.adversary_phase.at(Phase::Gate), Behavior::Silent);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.repetitions, 3u);
  EXPECT_FALSE(c.full_transcript);
  EXPECT_EQ(config_to_text(parse_config(config_to_text(c))), config_to_text(c));
}

TEST(Config, ValidationRejects) {
  EXPECT_NE(config_error("n = 8\nm = 7\nbad_fraction = 0.4\n").find("t.conf:3:"), std::string::npos);
  EXPECT_NE(config_error("n = 9\nm = 7\nbad_fraction = 0.3\nepsilon = 0.05\n").find("bad_fraction"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = 7\np = 1000\n").find("t.conf:3:"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = 7\np = 5\n").find("exceed"), std::string::npos);
  EXPECT_NE(config_error("n = 3\nm = 2\n").find("t.conf:1:"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = 7\nquorum_c = 0\n").find("t.conf:3: quorum_c"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = 7\nwhat = 1\n").find("t.conf:3: unknown key"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nn = 9\n").find("t.conf:2: duplicate"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = x\n").find("t.conf:2:"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = 7\nadversary = sneaky\n").find("t.conf:3:"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = 7\ninputs = 1, 2\n").find("inputs"), std::string::npos);
  EXPECT_NE(config_error("n = 8\nm = 7\nno equals sign\n").find("t.conf:3:"), std::string::npos);
  EXPECT_EQ(config_error("n = 9\nm = 7\nbad_fraction = 0.3333333333333333\n"), "");
}

TEST(Experiment, BundledExamplePasses) {
  RunConfig c = load_config(QMPC_DATA_DIR "/example.conf");
  c.out_dir = scratch("example").string();
  const ExperimentReport rep = run_experiment(c);
  ASSERT_TRUE(rep.pass());
  ASSERT_EQ(rep.runs.size(), 1u);
  // (1+2 + 3*4) * (3*5 + 7+8)
  EXPECT_EQ(rep.runs[0].result->expected.value(), 450u);
  EXPECT_EQ(slurp(fs::path(c.out_dir) / "verdict.txt"), "pass 1/1\n");

  const auto doc = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "metrics.json"));
  EXPECT_EQ(doc["verdict"], "pass");
  EXPECT_EQ(doc["config"]["n"], 8);
  EXPECT_EQ(doc["config"]["quorum_size"], 6);
  EXPECT_EQ(doc["config"]["inputs"].size(), 8u);
  EXPECT_EQ(doc["runs"][0]["good_players_correct"], 8);
  EXPECT_GT(doc["runs"][0]["phases"]["gate"]["max_messages"].get<std::uint64_t>(), 0u);
  const std::string log = slurp(fs::path(c.out_dir) / "transcript.log");
  EXPECT_EQ(log.rfind("# run 0 seed ", 0), 0u);
  EXPECT_NE(log.find(rep.runs[0].result->transcript_digest), std::string::npos);
}

TEST(Experiment, FiftyRepetitionsNoAdversary) {
  RunConfig c = parse_config("n = 8\nm = 7\np = 1009\nrepetitions = 50\ntranscript = digest\n");
  c.out_dir = scratch("fifty").string();
  const ExperimentReport rep = run_experiment(c);
  EXPECT_EQ(rep.runs.size(), 50u);
  EXPECT_EQ(rep.failures, 0u);
  std::set<std::uint64_t> seeds;
  for (const auto& r : rep.runs) seeds.insert(r.seed);
  EXPECT_EQ(seeds.size(), 50u);
}

TEST(Experiment, OutputsAreDeterministic) {
  RunConfig c = parse_config("n = 8\nm = 12\nbad_fraction = 0.125\nadversary = equivocate\n"
                             "formation_retries = 100000\nrepetitions = 2\n");
  c.out_dir = scratch("det_a").string();
  run_experiment(c);
  const std::string a_json = slurp(fs::path(c.out_dir) / "metrics.json");
  const std::string a_log = slurp(fs::path(c.out_dir) / "transcript.log");
  const std::string dir_a = c.out_dir;
  c.out_dir = scratch("det_b").string();
  run_experiment(c);
  std::string b_json = slurp(fs::path(c.out_dir) / "metrics.json");
  // The embedded out_dir is the only expected difference.
  const auto pos = b_json.find(c.out_dir);
  ASSERT_NE(pos, std::string::npos);
  b_json.replace(pos, c.out_dir.size(), dir_a);
  EXPECT_EQ(a_json, b_json);
  EXPECT_EQ(a_log, slurp(fs::path(c.out_dir) / "transcript.log"));
}

TEST(Experiment, CircuitErrorsCarryPathAndLine) {
  const fs::path dir = scratch("badnet");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.net") << "input 1\ninput 2\ngate 1 add x1 x7\noutput g1\n";
  std::ofstream(dir / "bad.conf") << "n = 8\ncircuit = bad.net\n";
  try {
    run_experiment((dir / "bad.conf").string());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("bad.net:3:"), std::string::npos);
  }
}

TEST(Sweep, RowsPerValueAndSeedWithFlaggedFailures) {
  RunConfig c = parse_config("n = 8\nm = 8\nrepetitions = 2\nformation_retries = 100000\nadversary = garbage\n");
  c.out_dir = scratch("sweep").string();
  const auto rows = sweep(c, SweepAxis::BadFraction, {"0", "0.125", "0.4"});
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(rows[i].verdict, "pass") << rows[i].error;
    EXPECT_GT(rows[i].gate_max_messages, 0u);
    EXPECT_LE(rows[i].gate_median_messages, static_cast<double>(rows[i].gate_max_messages));
  }
  EXPECT_EQ(rows[4].verdict, "error");
  EXPECT_EQ(rows[4].axis_value, "0.4");
  const std::string csv = slurp(fs::path(c.out_dir) / "sweep.csv");
  EXPECT_EQ(csv, sweep_csv(rows, SweepAxis::BadFraction));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "bad_fraction,seed,max_messages,median_messages,max_field_ops,gate_max_messages,"
            "gate_median_messages,qf_synthetic_messages,verdict,error");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST(Sweep, NAxisScalesGatesWithMPerN) {
  RunConfig c = parse_config("n = 8\nm_per_n = 1\n");
  c.out_dir = scratch("sweep_n").string();
  const auto rows = sweep(c, SweepAxis::N, {"8", "12"});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.verdict, "pass") << r.error;
  EXPECT_EQ(config_circuit(parse_config("n = 12\nm_per_n = 1\n"), 1).m(), 12u);
}
