#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>

#include "support.hpp"

using namespace biasprobe;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(BIASPROBE_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config_arg() { return "--config " + (fixture_dir() / "config.json").string(); }

}  // namespace

TEST(Cli, ExpandToStdout) {
  auto r = run("expand " + config_arg());
  ASSERT_EQ(r.exit_code, 0);
  auto samples = read_samples_jsonl(r.out);
  EXPECT_EQ(samples.size(), 5u * 2232u);
  std::map<std::string, std::size_t> per_lang;
  for (const auto& s : samples) ++per_lang[s.language];
  for (const auto& l : fixture_languages()) EXPECT_EQ(per_lang[l], 2232u) << l;
}

TEST(Cli, ExpandToFileMatchesLibrary) {
  TempDir dir("cli_expand");
  ASSERT_EQ(run("expand " + config_arg() + " --out " + (dir / "s.jsonl").string()).exit_code, 0);
  auto c = load_config(fixture_dir() / "config.json");
  EXPECT_EQ(read_file(dir / "s.jsonl"), write_samples_jsonl(expand_from_config(c)));
}

TEST(Cli, ValidateReportsFindings) {
  TempDir dir("cli_validate");
  auto j = nlohmann::json::parse(fixture("templates_race.json"));
  auto& variants = j["templates"][0]["variants"];
  for (auto it = variants.begin(); it != variants.end(); ++it) {
    if ((*it)["language"] == "he" && (*it)["gender"] == "male") {
      variants.erase(it);
      break;
    }
  }
  write_file(dir / "t.json", j.dump());
  auto bad = run("validate --templates " + (dir / "t.json").string() + " --languages en es zh it he");
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.out.find("\"he\""), std::string::npos);
  auto good = run("validate " + config_arg());
  EXPECT_EQ(good.exit_code, 0);
  EXPECT_TRUE(good.out.empty());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("frobnicate").exit_code, 2);
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("expand --bogus").exit_code, 2);
  EXPECT_EQ(run("report --format xml").exit_code, 2);
  EXPECT_EQ(run("--help").exit_code, 0);
}

TEST(Cli, RuntimeErrors) {
  TempDir dir("cli_err");
  EXPECT_EQ(run("expand --config " + (dir / "absent.json").string()).exit_code, 3);
  write_file(dir / "c.json", R"({"languages":["en"],"alpha":2})");
  EXPECT_EQ(run("phase1 --config " + (dir / "c.json").string()).exit_code, 3);
}

TEST(Cli, PipelineWritesReports) {
  TempDir dir("cli_pipeline");
  const std::string out = " --out " + dir.path().string();
  ASSERT_EQ(run("phase1 " + config_arg() + out).exit_code, 0);
  ASSERT_EQ(run("phase2 " + config_arg() + out).exit_code, 0);
  ASSERT_EQ(run("phase3 " + config_arg() + out).exit_code, 0);
  ASSERT_EQ(run("report --format csv --input " + dir.path().string() + out).exit_code, 0);
  for (const char* f : {"phase1.json", "phase2.json", "phase3.json", "accuracy.csv", "mcnemar.csv",
                        "language_sets.csv", "race.csv", "mcm_delta.csv", "amplification.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  auto p1 = phase1_from_json(nlohmann::json::parse(read_file(dir / "phase1.json")));
  EXPECT_EQ(p1.language_sets, (std::vector<std::vector<std::string>>{{"en", "es", "it", "zh"}, {"he"}}));
}

TEST(Cli, SeedOverrideChangesMockScores) {
  const std::string base = "score " + config_arg() + " --model-id mbert-mono";
  auto a = run(base);
  auto b = run(base);
  auto c = run(base + " --seed 8");
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(read_scores(a.out).size(), 5u * 2232u);
}
