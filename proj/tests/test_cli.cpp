#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include "synthetic.hpp"
#include "yieldcast/csv.hpp"
#include "yieldcast/format.hpp"
#include "yieldcast/persist.hpp"

using namespace yieldcast;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(YIELDCAST_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class Cli : public ::testing::Test {
 protected:
  static inline fs::path dir;

  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / "yieldcast_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir / "raw");
    const auto s = synth::snapshot(5, {.countries = 5});
    write_file((dir / "raw/rain.csv").string(), s.rain);
    write_file((dir / "raw/temp.csv").string(), s.temp);
    write_file((dir / "raw/pesticides.csv").string(), s.pesticides);
    write_file((dir / "raw/yield.csv").string(), s.yield);
    const auto r = run_cli("ingest " + raw_args() + " --aliases " + q(YIELDCAST_ALIASES_PATH) + " --out " + q(dir / "ingest"));
    ASSERT_EQ(r.code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir); }

  static std::string raw_args() {
    return "--rain " + q(dir / "raw/rain.csv") + " --temp " + q(dir / "raw/temp.csv") + " --pesticides " +
           q(dir / "raw/pesticides.csv") + " --yield " + q(dir / "raw/yield.csv");
  }
  static std::string panel() { return q(dir / "ingest/panel.json"); }
};

}  // namespace

TEST_F(Cli, IngestWritesPanelAndMergeReport) {
  const auto p = load_panel((dir / "ingest/panel.json").string());
  EXPECT_GT(p.size(), 0u);
  EXPECT_EQ(p.provenance.source_digests.at("yield"), sha256_hex(read_file((dir / "raw/yield.csv").string())));
  const auto j = parse_json(read_file((dir / "ingest/merge_report.json").string()), "merge report");
  EXPECT_EQ(j.at("merge_report").at("rows_out").get<std::size_t>(), p.size());
  EXPECT_TRUE(j.at("parse").contains("rain"));
}

TEST_F(Cli, IngestRerunIsByteIdentical) {
  ASSERT_EQ(run_cli("ingest " + raw_args() + " --aliases " + q(YIELDCAST_ALIASES_PATH) + " --out " + q(dir / "again")).code, 0);
  EXPECT_EQ(read_file((dir / "again/panel.json").string()), read_file((dir / "ingest/panel.json").string()));
  EXPECT_EQ(read_file((dir / "again/merge_report.json").string()), read_file((dir / "ingest/merge_report.json").string()));
}

TEST_F(Cli, IngestDisjointYearsExitsTwo) {
  const auto s = synth::snapshot(5, {.countries = 3, .climate_first = 1901, .climate_last = 1950});
  write_file((dir / "raw/old_rain.csv").string(), s.rain);
  write_file((dir / "raw/old_temp.csv").string(), s.temp);
  const auto r = run_cli("ingest --rain " + q(dir / "raw/old_rain.csv") + " --temp " + q(dir / "raw/old_temp.csv") +
                         " --pesticides " + q(dir / "raw/pesticides.csv") + " --yield " + q(dir / "raw/yield.csv") +
                         " --out " + q(dir / "disjoint"));
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, IngestMissingFileExitsOne) {
  EXPECT_EQ(run_cli("ingest --rain /nonexistent.csv --temp x --pesticides y --yield z --out " + q(dir / "missing")).code, 1);
}

TEST_F(Cli, ExploreWritesFiveTables) {
  ASSERT_EQ(run_cli("explore --panel " + panel() + " --out " + q(dir / "eda")).code, 0);
  for (const char* f : {"annual_rain.csv", "annual_temp.csv", "annual_pesticides.csv", "item_frequency.csv", "correlation.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "eda" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "eda/vif.csv"));
  EXPECT_EQ(read_file((dir / "eda/correlation.csv").string()).substr(0, 21), "row,column,pearson_r\n");
}

TEST_F(Cli, ExploreVifWritesTable) {
  ASSERT_EQ(run_cli("explore --vif --panel " + panel() + " --out " + q(dir / "eda_vif")).code, 0);
  EXPECT_EQ(line_count(read_file((dir / "eda_vif/vif.csv").string())), 4u);
}

TEST_F(Cli, ExploreVifWithTooFewRowsExitsTwo) {
  PanelTable t;
  t.rows = {{"KEN", "Kenya", 2000, "Maize", 600, 24, 10, 100}, {"KEN", "Kenya", 2001, "Maize", 700, 25, 20, 150},
            {"KEN", "Kenya", 2002, "Maize", 650, 23, 15, 120}};
  save_panel(t, (dir / "tiny.json").string());
  EXPECT_EQ(run_cli("explore --vif --panel " + q(dir / "tiny.json") + " --out " + q(dir / "eda_tiny")).code, 2);
}

TEST_F(Cli, CvSingleModelReport) {
  const auto r = run_cli("cv --panel " + panel() + " --models ols --k 10 --seed 7 --out " + q(dir / "cv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("R2"), std::string::npos);
  const auto j = parse_json(read_file((dir / "cv/report.json").string()), "report");
  ASSERT_EQ(j.at("models").size(), 1u);
  EXPECT_EQ(j.at("models").at(0).at("cv").at("per_fold").size(), 10u);
  EXPECT_TRUE(j.at("ensemble").is_null());
  EXPECT_EQ(j.at("environment").at("seeds"), json::array({7}));
  EXPECT_TRUE(fs::exists(dir / "cv/holdout_predictions.csv"));
}

TEST_F(Cli, CvUnknownModelExitsOne) {
  EXPECT_EQ(run_cli("cv --panel " + panel() + " --models bogus --out " + q(dir / "cv_bad")).code, 1);
}

TEST_F(Cli, TrainAndPredict) {
  ASSERT_EQ(run_cli("train --panel " + panel() + " --model cart --out " + q(dir / "model.json")).code, 0);
  const auto model = load_model((dir / "model.json").string());
  std::string csv;
  for (std::size_t j = model.feature_names.size(); j-- > 0;) csv += csv::escape(model.feature_names[j]) + (j ? "," : "\n");
  for (int i = 0; i < 3; ++i) {
    for (std::size_t j = model.feature_names.size(); j-- > 0;) csv += std::string(j < 3 ? "500" : "0") + (j ? "," : "\n");
  }
  write_file((dir / "rows.csv").string(), csv);
  const auto r = run_cli("predict --model " + q(dir / "model.json") + " --input " + q(dir / "rows.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(line_count(r.out), 4u);
  EXPECT_EQ(r.out.substr(0, 11), "prediction\n");
}

TEST_F(Cli, PredictWrongColumnExitsTwo) {
  ASSERT_EQ(run_cli("train --panel " + panel() + " --model ols --out " + q(dir / "ols.json")).code, 0);
  write_file((dir / "bad.csv").string(), "wrong,columns\n1,2\n");
  EXPECT_EQ(run_cli("predict --model " + q(dir / "ols.json") + " --input " + q(dir / "bad.csv")).code, 2);
}

TEST_F(Cli, PredictMissingModelExitsOne) {
  write_file((dir / "any.csv").string(), "rain_mm\n1\n");
  EXPECT_EQ(run_cli("predict --model " + q(dir / "nope.json") + " --input " + q(dir / "any.csv")).code, 1);
}

TEST(CliHelp, MatchesSnapshots) {
  for (const char* sub : {"", "ingest", "explore", "cv", "train", "predict"}) {
    const std::string name = std::string(*sub ? sub : "main") + ".txt";
    const auto r = run_cli(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << name;
    EXPECT_EQ(r.out, read_file(std::string(YIELDCAST_SNAPSHOT_DIR) + "/" + name)) << name;
  }
}
