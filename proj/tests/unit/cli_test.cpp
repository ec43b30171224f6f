#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "qta/project.hpp"
#include "qta/text.hpp"
#include "support.hpp"

namespace qta {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult qta_cli(const fs::path& project, const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + QTA_CLI_PATH + "\" --project \"" + project.string() + "\" " +
                          args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = text::read_file(log);
  return r;
}

TEST(Cli, PipelineInReplay) {
  TempDir tmp;
  const fs::path p = tmp / "parents";
  testing::copy_fixture("parents", p);
  const fs::path log = tmp / "log.txt";
  for (const char* s : {"ingest", "code", "dedup", "themes", "audit", "report"}) {
    const auto r = qta_cli(p, std::string("run ") + s, log);
    ASSERT_EQ(r.exit_code, 0) << r.out;
    EXPECT_NE(r.out.find("stage " + std::string(s) + ": done"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find(" 0 live"), std::string::npos) << r.out;
  }
  auto r = qta_cli(p, "status", log);
  EXPECT_NE(r.out.find("report: done"), std::string::npos);
  EXPECT_NE(r.out.find("hierarchy: pending"), std::string::npos);
  r = qta_cli(p, "baseline", log);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  r = qta_cli(p, "compare", log);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(fs::exists(p / "report" / "comparison.md"));
  for (const char* f : {"coding_tree.md", "coreq.md", "themes.md", "themes.csv", "audit.json", "saturation.md"}) {
    EXPECT_TRUE(fs::exists(p / "report" / f)) << f;
  }
}

TEST(Cli, PreconditionExitsWithTwo) {
  TempDir tmp;
  testing::copy_fixture("parents", tmp / "p");
  const auto r = qta_cli(tmp / "p", "run themes", tmp / "log.txt");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("'dedup'"), std::string::npos) << r.out;
}

TEST(Cli, ErrorsAndUsage) {
  TempDir tmp;
  const fs::path log = tmp / "log.txt";
  EXPECT_EQ(qta_cli(tmp / "none", "status", log).exit_code, 2);
  EXPECT_NE(qta_cli(tmp.path(), "run", log).exit_code, 0);
  EXPECT_NE(qta_cli(tmp.path(), "--mode sometimes status", log).exit_code, 0);
}

TEST(Cli, InitWritesConfig) {
  TempDir tmp;
  const auto r = qta_cli(tmp / "p",
                         "init --corpus transcripts --model m1 --research-question \"What helps?\" "
                         "--group \"p*.txt=parents\" --group \"fg*.txt=focus\"",
                         tmp / "log.txt");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const Project p = Project::open(tmp / "p");
  EXPECT_EQ(p.config().model, "m1");
  EXPECT_EQ(p.config().research_question, "What helps?");
  ASSERT_EQ(p.config().groups.size(), 2u);
  EXPECT_EQ(p.config().groups[1].group, "focus");
  EXPECT_EQ(qta_cli(tmp / "p", "init", tmp / "log.txt").exit_code, 2);
}

TEST(Cli, LiveModeNeedsKey) {
  TempDir tmp;
  const fs::path p = tmp / "p";
  testing::copy_fixture("parents", p);
  ASSERT_EQ(qta_cli(p, "run ingest", tmp / "log.txt").exit_code, 0);
  ::unsetenv("QTA_API_KEY");
  const auto r = qta_cli(p, "--mode live run code", tmp / "log.txt");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("QTA_API_KEY"), std::string::npos);
}

}  // namespace
}  // namespace qta
