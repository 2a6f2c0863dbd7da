#include <gtest/gtest.h>

#include "cli.hpp"
#include "compgrid/records.hpp"
#include "fixtures.hpp"

using namespace compgrid;
using compgrid::testing::CliResult;
using compgrid::testing::lines_of;
using compgrid::testing::slurp;
using compgrid::testing::TempDir;

namespace {

class Cli : public ::testing::Test {
 protected:
  TempDir dir{"compgrid-cli"};

  CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), {"--data", dir.path().string(), "-q"});
    return compgrid::testing::run_cli(COMPGRID_CLI, args, dir / "scratch");
  }
};

}  // namespace

TEST_F(Cli, VersionAndHelp) {
  EXPECT_EQ(compgrid::testing::run_cli(COMPGRID_CLI, {"--version"}, dir / "s").exit_code, 0);
  EXPECT_EQ(compgrid::testing::run_cli(COMPGRID_CLI, {"--help"}, dir / "s").exit_code, 0);
}

TEST_F(Cli, GenerateIsDeterministicPerSeed) {
  ASSERT_EQ(run({"--seed", "4", "generate", "--n", "6", "-o", "a.jsonl"}).exit_code, 0);
  ASSERT_EQ(run({"--seed", "4", "generate", "--n", "6", "-o", "b.jsonl"}).exit_code, 0);
  ASSERT_EQ(run({"--seed", "5", "generate", "--n", "6", "-o", "c.jsonl"}).exit_code, 0);
  const std::string a = slurp(dir / "a.jsonl");
  EXPECT_EQ(a, slurp(dir / "b.jsonl"));
  EXPECT_NE(a, slurp(dir / "c.jsonl"));
  const auto lines = lines_of(a);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_TRUE(is_header(Json::parse(lines[0])));
  EXPECT_EQ(Json::parse(lines[0])["header"]["command"], "generate");
}

TEST_F(Cli, EnumerateChainCount) {
  ASSERT_EQ(run({"enumerate", "--form", "chain", "-o", "chains.jsonl"}).exit_code, 0);
  EXPECT_EQ(lines_of(slurp(dir / "chains.jsonl")).size(), 211u);
}

TEST_F(Cli, UsageErrorsAreNonZero) {
  EXPECT_NE(run({}).exit_code, 0);
  EXPECT_NE(run({"no-such-command"}).exit_code, 0);
  EXPECT_NE(run({"generate", "--n", "abc"}).exit_code, 0);
  EXPECT_NE(run({"stats"}).exit_code, 0);  // --in is required
}

TEST_F(Cli, DomainErrorsExitOne) {
  const CliResult missing = run({"stats", "--in", "absent.jsonl"});
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_FALSE(missing.err.empty());
  EXPECT_EQ(run({"generate", "--distribution", "spiral"}).exit_code, 1);
  EXPECT_EQ(run({"generate", "--distribution", "null"}).exit_code, 1);  // needs --model
  std::ofstream(dir / "bad.jsonl") << "{\"grid\":\"RRR\",\"start\":[0,0],\"provenance\":\"chain\"}\n";
  const CliResult bad = run({"stats", "--in", "bad.jsonl"});
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.err.find("grid"), std::string::npos);
}
