#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using dcopt::cli::main_entry;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dcopt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "dcopt-cli-test";
  fs::create_directories(dir);
  return dir;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Cli, SolveExactDepthTwo) {
  const Result r = run({"solve", "--depth", "2", "--solver", "exact", "--mode", "exhaustive"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("energy=130 "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("feasible=true"), std::string::npos) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
}

TEST(Cli, ParseSolveCommand) {
  const char* argv[] = {"dcopt", "solve", "--depth", "2", "--solver", "exact"};
  const auto cmd = dcopt::cli::parse_args(6, argv);
  EXPECT_EQ(cmd.verb, "solve");
  EXPECT_EQ(cmd.depth, 2);
  EXPECT_EQ(cmd.solvers, std::vector<std::string>{"exact"});
}

TEST(Cli, UsageErrors) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"solve", "--depth", "1"},
           {"solve"},
           {"frobnicate"},
           {"solve", "--depth", "2", "--bogus"},
           {"solve", "--depth", "2", "--mode", "time:-3"},
           {"solve", "--depth", "2", "--solver", "cplex"},
           {"bench", "--depths", "2", "--format", "xml"},
           {"gen-tree"},
           {"solve", "--depth", "2", "--vm-util", "20"},
       }) {
    const Result r = run(args);
    EXPECT_EQ(r.code, 2) << ::testing::PrintToString(args) << r.out;
    EXPECT_FALSE(r.err.empty());
  }
}

TEST(Cli, NoVerbPrintsSynopsis) {
  const Result r = run({});
  EXPECT_NE(r.err.find("gen-tree"), std::string::npos);
  EXPECT_NE(r.err.find("render"), std::string::npos);
}

TEST(Cli, UsageErrorNamesTheFlag) {
  EXPECT_NE(run({"solve", "--depth", "1"}).err.find("--depth"), std::string::npos);
  EXPECT_NE(run({"solve", "--depth", "2", "--bogus"}).err.find("--bogus"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  const Result r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* verb : {"gen-tree", "build-model", "export-qubo", "solve", "bench", "render"}) {
    EXPECT_NE(r.out.find(verb), std::string::npos) << verb;
  }
  const Result sub = run({"solve", "--help"});
  EXPECT_EQ(sub.code, 0);
  EXPECT_NE(sub.out.find("--mode"), std::string::npos);
}

TEST(Cli, RuntimeFailureExitsOne) {
  const Result r = run({"solve", "--depth", "5", "--solver", "exact"});  // beyond the exact cap
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  const fs::path bad = scratch() / "broken.json";
  std::ofstream(bad) << "{ nope";
  EXPECT_EQ(run({"solve", "--tree", bad.string()}).code, 1);
}

TEST(Cli, ExportQuboDepthTwo) {
  const fs::path p = scratch() / "q.txt";
  const Result r = run({"export-qubo", "--depth", "2", "--out", p.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("variables 109"), std::string::npos);
  EXPECT_NE(read(p).find("p qubo 0 109 "), std::string::npos);
  const Result to_stdout = run({"export-qubo", "--depth", "2"});
  EXPECT_EQ(to_stdout.out, read(p));
}

TEST(Cli, BuildModelSummary) {
  const fs::path p = scratch() / "m.lp";
  const Result r = run({"build-model", "--depth", "2", "--out", p.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("variables 53"), std::string::npos);
  EXPECT_NE(r.out.find("family link_activation 12"), std::string::npos);
  EXPECT_NE(read(p).find("Binary"), std::string::npos);
  EXPECT_NE(run({"build-model", "--depth", "2", "--variant", "assignment"}).out.find("variables 20"),
            std::string::npos);
}

TEST(Cli, GenTreeRoundTrip) {
  const fs::path p = scratch() / "tree.json";
  ASSERT_EQ(run({"gen-tree", "--depth", "3", "--out", p.string()}).code, 0);
  for (const char* solver : {"exact", "sa", "split-exact"}) {
    const Result a = run({"solve", "--tree", p.string(), "--solver", solver, "--seed", "5"});
    const Result b = run({"solve", "--depth", "3", "--solver", solver, "--seed", "5"});
    ASSERT_EQ(a.code, 0) << a.err;
    // drop the timing field
    auto strip = [](std::string s) { return s.substr(0, s.find(" time_s=")); };
    EXPECT_EQ(strip(a.out), strip(b.out)) << solver;
  }
}

TEST(Cli, DepthAndTreeExclusive) {
  const fs::path p = scratch() / "tree2.json";
  ASSERT_EQ(run({"gen-tree", "--depth", "2", "--out", p.string()}).code, 0);
  EXPECT_EQ(run({"solve", "--depth", "2", "--tree", p.string()}).code, 2);
}

TEST(Cli, SolveReportJson) {
  const Result r = run({"solve", "--depth", "2", "--report"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"proof_of_optimality\": true"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"violations\": []"), std::string::npos) << r.out;
}

TEST(Cli, BenchWritesRecordsAndTable) {
  const fs::path dir = scratch() / "bench-env";
  fs::remove_all(dir);
  ::setenv(dcopt::cli::kOutDirEnv, dir.string().c_str(), 1);
  const Result r = run({"bench", "--depths", "2,3", "--solvers", "exact,split-exact"});
  ::unsetenv(dcopt::cli::kOutDirEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| Tree Depth | Split Model (exact) | Full Model (exact) |"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("| 2 | 130 | 130 |"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("| 3 |"), std::string::npos);
  EXPECT_NE(r.out.find("376 |"), std::string::npos);
  const fs::path records = dir / "bench-records.jsonl";
  ASSERT_TRUE(fs::exists(records));

  const Result rendered = run({"render", records.string(), "--format", "csv"});
  EXPECT_EQ(rendered.code, 0);
  EXPECT_EQ(rendered.out.rfind("tree_depth,", 0), 0u) << rendered.out;
}

TEST(Cli, RenderWarnsOnPartialFile) {
  const fs::path p = scratch() / "partial.jsonl";
  ASSERT_EQ(run({"bench", "--depth", "2", "--solver", "exact", "--out", p.string()}).code, 0);
  std::ofstream(p, std::ios::app) << "{\"depth\":";
  const Result r = run({"render", p.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("| 2 | 130 |"), std::string::npos) << r.out;
}

TEST(Cli, ConfigFileUnderFlags) {
  const fs::path cfg = scratch() / "run.toml";
  std::ofstream(cfg) << "[solve]\ndepth = 3\nsolver = \"split-exact\"\n";
  const Result from_file = run({"--config", cfg.string(), "solve"});
  EXPECT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_NE(from_file.out.find("solver=split-exact depth=3"), std::string::npos) << from_file.out;
  const Result overridden = run({"--config", cfg.string(), "solve", "--depth", "2"});
  EXPECT_NE(overridden.out.find("depth=2 energy=130"), std::string::npos) << overridden.out;
}

TEST(Cli, ShowConfigPrintsEffectiveValues) {
  const Result r = run({"solve", "--depth", "3", "--sweeps", "77", "--show-config"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("solve.depth=3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("solve.sweeps=77"), std::string::npos);
  EXPECT_NE(r.out.find("solve.restarts=10"), std::string::npos);
  EXPECT_EQ(r.out.find("bench."), std::string::npos);
}

TEST(Cli, DefaultOutputDirFromEnvironment) {
  ::setenv(dcopt::cli::kOutDirEnv, "/tmp/elsewhere", 1);
  EXPECT_EQ(dcopt::cli::default_output_dir(), "/tmp/elsewhere");
  ::unsetenv(dcopt::cli::kOutDirEnv);
  EXPECT_EQ(dcopt::cli::default_output_dir(), "dcopt-out");
}
