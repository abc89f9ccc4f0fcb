#include <gtest/gtest.h>

#include <fstream>

#include "cli_runner.hpp"
#include "json.hpp"
#include "published_fixture.hpp"
#include "stylebench/archive.hpp"
#include "stylebench/image_io.hpp"
#include "test_support.hpp"

using namespace stylebench;
using stylebench::test::fixture;
using stylebench::test::run_cli;
using stylebench::test::TempDir;

TEST(CliGenerate, MockIsDeterministic) {
  TempDir dir;
  const auto a = (dir / "a.png").string();
  const auto b = (dir / "b.png").string();
  for (const auto& out : {a, b}) {
    const auto r = run_cli({"generate", "--mock", "--seed", "7", "--prompt", "baroque hall", "--size", "64x64",
                            "--out", out});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("acquisition_time"), std::string::npos);
  }
  EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
}

TEST(CliGenerate, MissingPromptIsUsageError) {
  TempDir dir;
  const auto r = run_cli({"generate", "--mock", "--out", (dir / "x.png").string()});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("--prompt"), std::string::npos);
}

TEST(CliGenerate, LiveWithoutCredentialIsAuthError) {
  TempDir dir;
  const auto r = run_cli({"generate", "--prompt", "x", "--api-key-env", "STYLEBENCH_UNSET_KEY_VAR",
                          "--base-url", "http://127.0.0.1:9/v1", "--out", (dir / "x.png").string()},
                         "env -u STYLEBENCH_UNSET_KEY_VAR ");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("auth-error"), std::string::npos) << r.err;
}

TEST(CliStylize, StatisticalIdentityChainedWithEvaluate) {
  TempDir dir;
  const auto out = (dir / "s.png").string();
  const auto content = fixture("content_64.png").string();
  auto r = run_cli({"stylize", "--content", content, "--style", content, "--backend", "statistical", "--out", out});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  r = run_cli({"--json", "evaluate", "--reference", content, "--candidate", out});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("ssim").get<double>(), 1.0, 1e-6);
}

TEST(CliStylize, UnknownBackendListsValidOnes) {
  TempDir dir;
  const auto content = fixture("content_64.png").string();
  const auto r = run_cli({"stylize", "--content", content, "--style", content, "--backend", "magic", "--out",
                          (dir / "o.png").string()});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("statistical"), std::string::npos);
  EXPECT_NE(r.err.find("external"), std::string::npos);
}

TEST(CliStylize, ExternalEchoBackend) {
  TempDir dir;
  const auto script = test::write_script(dir / "echo.sh", "cp \"$1\" \"$3\"");
  const auto out = (dir / "o.png").string();
  const auto r = run_cli({"stylize", "--content", fixture("content_64.png").string(), "--style",
                          fixture("style_48x40.png").string(), "--backend", "external", "--backend-command",
                          script.string(), "--out", out});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(load_image(out), load_image(fixture("content_64.png")));
}

TEST(CliEvaluate, IdenticalFiles) {
  const auto f = fixture("content_64.png").string();
  const auto r = run_cli({"evaluate", "--reference", f, "--candidate", f});
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("ssim (global): 1.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("psnr: inf"), std::string::npos) << r.out;

  const auto j = run_cli({"evaluate", "--json", "--reference", f, "--candidate", f});
  EXPECT_EQ(nlohmann::json::parse(j.out).at("psnr"), "inf");
}

TEST(CliEvaluate, BlackVersusWhite) {
  const auto r = run_cli({"--json", "evaluate", "--reference", fixture("black_2x2.png").string(), "--candidate",
                          fixture("white_2x2.png").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("mse").get<double>(), 65025.0);
  EXPECT_EQ(j.at("psnr").get<double>(), 0.0);
}

TEST(CliEvaluate, DifferentSizesWarnOnStderr) {
  const auto r = run_cli({"--json", "evaluate", "--reference", fixture("content_64.png").string(), "--candidate",
                          fixture("style_48x40.png").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.err.find("resized"), std::string::npos);
  const auto j = nlohmann::json::parse(r.out);  // stdout stays a single document
  EXPECT_TRUE(j.at("reference_resized").get<bool>());
}

TEST(CliEvaluate, WindowedVariant) {
  const auto f = fixture("content_64.png").string();
  const auto r = run_cli({"--json", "evaluate", "--ssim", "windowed", "--reference", f, "--candidate", f});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("ssim_variant"), "windowed");
}

TEST(CliEvaluate, MissingFileIsRuntimeError) {
  const auto r = run_cli({"evaluate", "--reference", "/nonexistent.png", "--candidate", "/nonexistent.png"});
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("file-not-found"), std::string::npos);
}

TEST(CliBench, MockSmokeAndDeterministicMetrics) {
  TempDir dir;
  auto bench = [&](const std::string& out) {
    return run_cli({"bench", "--mock", "--trials", "2", "--size", "128x128", "--content",
                    fixture("content_64.png").string(), "--style-file", fixture("style_48x40.png").string(),
                    "--out", out});
  };
  const auto start = std::chrono::steady_clock::now();
  const auto r1 = bench((dir / "a.json").string());
  ASSERT_EQ(r1.exit_code, 0) << r1.err;
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 10.0);
  EXPECT_NE(r1.out.find("Average comparison"), std::string::npos);
  const auto r2 = bench((dir / "b.json").string());
  ASSERT_EQ(r2.exit_code, 0) << r2.err;

  const RunArchive a = read_archive(dir / "a.json");
  const RunArchive b = read_archive(dir / "b.json");
  ASSERT_EQ(a.experiments.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) {
    ASSERT_EQ(a.experiments[e].runs.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& ra = a.experiments[e].runs[i];
      const auto& rb = b.experiments[e].runs[i];
      EXPECT_EQ(ra.metrics->ssim, rb.metrics->ssim);
      EXPECT_EQ(ra.metrics->mse, rb.metrics->mse);
      EXPECT_EQ(ra.style_image_digest, rb.style_image_digest);
    }
  }
  EXPECT_EQ(a.experiments[0].config_snapshot.at("trials"), "2");
}

TEST(CliBench, ZeroTrialsIsUsageError) {
  EXPECT_EQ(run_cli({"bench", "--mock", "--trials", "0"}).exit_code, 2);
}

TEST(CliBench, ConfigFileAndFlagPrecedence) {
  TempDir dir;
  const auto cfg = dir / "bench.conf";
  std::ofstream(cfg) << "# bench settings\ntrials = 3\nmock = true\nsize = 32x32\narm = with\n";
  const auto out = (dir / "a.json").string();
  auto r = run_cli({"--config", cfg.string(), "bench", "--out", out});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  RunArchive a = read_archive(out);
  ASSERT_EQ(a.experiments.size(), 1u);
  EXPECT_EQ(a.experiments[0].runs.size(), 3u);

  r = run_cli({"--config", cfg.string(), "bench", "--trials", "1", "--out", out});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  a = read_archive(out);
  EXPECT_EQ(a.experiments[0].runs.size(), 1u);
  EXPECT_EQ(a.experiments[0].config_snapshot.at("trials"), "1");
}

TEST(CliBench, JsonOutputIsOneDocument) {
  TempDir dir;
  const auto r = run_cli({"bench", "--json", "--mock", "--trials", "1", "--size", "32x32", "--out",
                          (dir / "a.json").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("comparison").at("columns").size(), 5u);
}

TEST(CliReport, PublishedMeansInAggregateTable) {
  TempDir dir;
  write_archive(test::published_archive(), dir / "published.json");
  const auto r = run_cli({"report", (dir / "published.json").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("| With generation | 12.00 | **3.60** | 18.62 | **0.64** | **8.66** |"), std::string::npos)
      << r.out;
  EXPECT_NE(r.out.find("| Without generation | **15.50** | 2.50 | **20.67** | 0.37 | 6.59 |"), std::string::npos)
      << r.out;
}

TEST(CliReport, EmptyArchive) {
  TempDir dir;
  RunArchive empty;
  empty.created_at = "2024-01-01T00:00:00Z";
  write_archive(empty, dir / "empty.json");
  const auto r = run_cli({"report", "--archive", (dir / "empty.json").string()});
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("no experiments"), std::string::npos);
}

TEST(CliReport, FormatsAndBadFormat) {
  TempDir dir;
  write_archive(test::published_archive(), dir / "published.json");
  const auto path = (dir / "published.json").string();
  const auto csv = run_cli({"report", path, "--format", "csv"});
  ASSERT_EQ(csv.exit_code, 0);
  EXPECT_EQ(csv.out.rfind("# Processing time per run (s)", 0), 0u);
  const auto json = run_cli({"report", path, "--format", "json"});
  ASSERT_EQ(json.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(json.out).at("tables").size(), 3u);
  EXPECT_EQ(run_cli({"report", path, "--format", "pdf"}).exit_code, 2);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run_cli({"frobnicate"}).exit_code, 2);
  EXPECT_EQ(run_cli({}).exit_code, 2);
  EXPECT_EQ(run_cli({"--help"}).exit_code, 0);
}
