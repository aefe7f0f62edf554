#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "shiftbench/errors.hpp"
#include "shiftbench/harness.hpp"

using namespace shiftbench;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SHIFTBENCH_FIXTURES;

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes a uniform real manifest plus prediction files for each model; model
// "M1" is always right, the others predict "rain" everywhere.
ExperimentConfig small_suite(const gen::TempDir& dir, std::size_t models, const std::string& extra = {}) {
  const auto m = gen::uniform_manifest(6);
  save_manifest(m, dir / "real.jsonl");
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t k = 1; k <= models; ++k) {
    const auto model = "M" + std::to_string(k);
    names.push_back(model);
    std::string csv = "sample_id,predicted_class\n";
    for (const auto& s : m.samples) {
      if (s.split == Split::test) csv += s.id + "," + (k == 1 ? s.cls.name() : "rain") + "\n";
    }
    write(dir / ("pred/" + model + ".csv"), csv);
  }
  const std::string text = R"({"real_manifest":"real.jsonl","splits":["20"],"models":)" + names.dump() +
                           R"(,"prediction_template":"pred/{model}.csv","seed":11)" + extra + "}";
  return parse_experiment_config(text, dir.path());
}

}  // namespace

TEST(NaturalLess, Ordering) {
  EXPECT_TRUE(natural_less("M2", "M10"));
  EXPECT_FALSE(natural_less("M10", "M2"));
  EXPECT_TRUE(natural_less("20", "80"));
  EXPECT_TRUE(natural_less("50", "t-RAIN"));
  EXPECT_FALSE(natural_less("M1", "M1"));
}

TEST(ExperimentConfig, ParsesAndValidates) {
  gen::TempDir dir;
  const auto cfg = small_suite(dir, 2, R"(,"scenarios":["rain",{"id":3,"name":"fog","boost_factor":3,"a_range":[1,1],"b_range":[0,0]}])");
  EXPECT_EQ(cfg.scenarios.size(), 2U);
  EXPECT_EQ(cfg.scenarios[1].boost_factor, 3.0);
  EXPECT_EQ(cfg.seed, 11U);
  EXPECT_EQ(cfg.oracle.seed, 11U);
  EXPECT_EQ(cfg.shift_split, Split::test);
  EXPECT_TRUE(cfg.with_replacement);
  EXPECT_EQ(cfg.predictions.at("20").at("M2").at(3), fs::path("pred/M2.csv"));

  const auto defaults = small_suite(dir, 1);
  EXPECT_EQ(defaults.scenarios.size(), 5U);
  EXPECT_EQ(config_hash(defaults), config_hash(small_suite(dir, 1)));
  EXPECT_NE(config_hash(defaults), config_hash(small_suite(dir, 2)));
  EXPECT_EQ(config_hash(defaults).size(), 16U);

  EXPECT_THROW(parse_experiment_config(R"({"real_manifest":"r","splits":["a"],"models":["m"]})", "."),
               ValidationError);
  EXPECT_THROW(parse_experiment_config(R"({"real_manifest":"r","splits":["a"],"models":["m"],)"
                                       R"("prediction_template":"x","bogus":1})",
                                       "."),
               ValidationError);
  EXPECT_THROW(parse_experiment_config("{", "."), ValidationError);
}

TEST(RunShiftSuite, PerfectPredictionsScoreOne) {
  gen::TempDir dir;
  auto cfg = small_suite(dir, 1, R"(,"scenarios":["none"])");
  const auto result = run_shift_suite(cfg);
  ASSERT_EQ(result.grid.size(), 1U);
  const auto& row = result.grid.at({"20", 1, "M1"});
  EXPECT_EQ(row.accuracy, 1.0);
  ASSERT_TRUE(row.report.has_value());
  EXPECT_EQ(row.report->total, 24U);
}

TEST(RunShiftSuite, TenModelsFiveShiftsGiveFiftyRows) {
  gen::TempDir dir;
  const auto cfg = small_suite(dir, 10);
  const auto result = run_shift_suite(cfg);
  EXPECT_EQ(result.grid.size(), 50U);
  EXPECT_EQ(result.grid.model_ids().back(), "M10");
  EXPECT_EQ(result.grid.shift_ids(), (std::vector<int>{1, 2, 3, 4, 5}));
  // Boosting rain makes the always-"rain" model better than under no shift.
  EXPECT_GT(result.grid.at({"20", 2, "M2"}).accuracy, result.grid.at({"20", 1, "M2"}).accuracy);
  for (const auto& [id, target] : result.targets) {
    EXPECT_EQ(label_distribution(result.shifted.at(id), Split::test), target);
  }
}

TEST(RunShiftSuite, DeterministicForSeed) {
  gen::TempDir dir;
  const auto cfg = small_suite(dir, 3);
  const auto a = run_shift_suite(cfg);
  const auto b = run_shift_suite(cfg);
  EXPECT_EQ(grid_to_json(a.grid), grid_to_json(b.grid));
  for (const auto& [id, m] : a.shifted) EXPECT_EQ(serialize_manifest(m), serialize_manifest(b.shifted.at(id)));

  auto other = cfg;
  other.seed = 12;
  const auto c = run_shift_suite(other);
  bool differs = false;
  for (const auto& [id, m] : a.shifted) differs |= serialize_manifest(m) != serialize_manifest(c.shifted.at(id));
  EXPECT_TRUE(differs);
}

TEST(RunShiftSuite, TrainShiftStillScoresTestSplit) {
  gen::TempDir dir;
  const auto cfg = small_suite(dir, 1, R"(,"shift_split":"train","scenarios":["rain"])");
  const auto result = run_shift_suite(cfg);
  EXPECT_EQ(result.grid.at({"20", 2, "M1"}).report->total, 24U);
}

TEST(RunShiftSuite, MissingPredictionsAreCoverageErrors) {
  gen::TempDir dir;
  // Without replacement the identity scenario keeps all 24 test images; one is predicted.
  const auto cfg = small_suite(dir, 1, R"(,"scenarios":["none"],"with_replacement":false)");
  write(dir / "pred/M1.csv", "sample_id,predicted_class\ntest_rain_0,rain\n");
  try {
    run_shift_suite(cfg);
    FAIL() << "no error";
  } catch (const CoverageError& e) {
    EXPECT_EQ(e.missing_ids().size(), 23U);
    EXPECT_EQ(e.kind(), ErrorKind::coverage);
  }
  fs::remove(dir / "pred/M1.csv");
  EXPECT_THROW(run_shift_suite(cfg), IoError);
}

TEST(RunShiftSuite, RunsAugmentationWhenConfigured) {
  gen::TempDir dir;
  write(dir / "syn.jsonl",
        R"({"id":"w1","class":"rain","split":"train","source":"synthetic","prompt_keywords":["rain","road"]})"
        "\n"
        R"({"id":"w2","class":"fog","split":"train","source":"synthetic","prompt_keywords":["fog"]})"
        "\n");
  const auto cfg = small_suite(dir, 1, R"(,"synthetic_manifest":"syn.jsonl","oracle":{"eta":2,"beta":1,"dims":32})");
  const auto result = run_shift_suite(cfg);
  ASSERT_TRUE(result.augmentation.has_value());
  EXPECT_GT(result.augmentation->manifest.samples.size(), 48U);
}

TEST(ImprovementSummary, IdentityAndErrors) {
  GridSlice a{{{1, "M1"}, 0.5}, {{1, "M2"}, 0.7}, {{2, "M1"}, 0.4}, {{2, "M2"}, 0.1}};
  for (const auto& d : improvement_summary(a, a)) {
    EXPECT_EQ(d.mean_delta_pp, 0.0);
    EXPECT_EQ(d.rounded_pp, 0.0);
  }
  auto b = a;
  b.erase({2, "M2"});
  EXPECT_THROW(improvement_summary(a, b), ValidationError);

  const GridSlice base{{{1, "M1"}, 0.61}}, treated{{{1, "M1"}, 0.66}};
  const auto one = improvement_summary(base, treated);
  ASSERT_EQ(one.size(), 1U);
  EXPECT_NEAR(one[0].mean_delta_pp, 5.0, 1e-9);
}

TEST(ImprovementSummary, AccuracyFixtureDeltas) {
  const auto grid = load_grid(kFixtures / "accuracy_grid.json");
  EXPECT_EQ(grid.size(), 200U);
  const auto deltas = improvement_summary(slice(grid, "20"), slice(grid, "t-RAIN"));
  const std::vector<double> want{2.1, -0.8, 4.4, 1.9, 2.7};
  ASSERT_EQ(deltas.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(deltas[i].shift_id, static_cast<int>(i + 1));
    EXPECT_EQ(deltas[i].rounded_pp, want[i]);
  }
  // Shift-1 model means: 59.7 for the 20 split and 61.8 for t-RAIN.
  double b = 0, t = 0;
  for (const auto& [key, acc] : slice(grid, "20")) if (key.first == 1) b += acc;
  for (const auto& [key, acc] : slice(grid, "t-RAIN")) if (key.first == 1) t += acc;
  EXPECT_NEAR(b * 10, 59.7, 1e-9);
  EXPECT_NEAR(t * 10, 61.8, 1e-9);
}

TEST(RoundToTenth, Behaviour) {
  EXPECT_EQ(round_to_tenth(2.0999999999999943), 2.1);
  EXPECT_EQ(round_to_tenth(-0.8000000000000007), -0.8);
  EXPECT_EQ(round_to_tenth(0.25), 0.3);
  EXPECT_EQ(round_to_tenth(-0.25), -0.3);
  EXPECT_FALSE(std::signbit(round_to_tenth(-0.01)));
}

TEST(Report, CsvAndJsonRoundTrip) {
  gen::TempDir dir;
  const auto result = run_shift_suite(small_suite(dir, 3));
  const auto& grid = result.grid;
  const auto from_csv = parse_grid_csv(grid_to_csv(grid));
  ASSERT_EQ(from_csv.size(), grid.size());
  for (const auto& [key, row] : grid.rows()) {
    EXPECT_EQ(from_csv.at(key).accuracy, row.accuracy);
  }
  const auto from_json = parse_grid_json(grid_to_json(grid));
  EXPECT_EQ(grid_to_json(from_json), grid_to_json(grid));
  EXPECT_EQ(from_json.metadata.config_hash, grid.metadata.config_hash);

  emit_report(grid, ReportFormat::csv, dir / "g.csv");
  EXPECT_EQ(grid_to_csv(load_grid(dir / "g.csv")), grid_to_csv(grid));
  EXPECT_THROW(emit_report(grid, ReportFormat::json, "/nonexistent/dir/g.json"), IoError);
}

TEST(Report, MarkdownLayout) {
  const auto grid = load_grid(kFixtures / "accuracy_grid.json");
  const auto md = grid_to_markdown(grid);
  std::istringstream in(md);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "| Split | Shift | M1 | M2 | M3 | M4 | M5 | M6 | M7 | M8 | M9 | M10 |");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 1U + 20U);  // separator plus split x shift rows
  EXPECT_NE(md.find("| 20 | 3 | 67 | 68 | 64 | 48 | 68 | 70 | 44 | 61 | 43 | 35 |"), std::string::npos);
}

TEST(Report, EmptyGridIsRejected) {
  const ResultsGrid empty;
  EXPECT_THROW(grid_to_csv(empty), ValidationError);
  EXPECT_THROW(grid_to_markdown(empty), ValidationError);
  EXPECT_THROW(plot_data(empty), ValidationError);
  EXPECT_EQ(parse_report_format("md"), ReportFormat::markdown);
  EXPECT_THROW(parse_report_format("pdf"), ValidationError);
}

TEST(Report, DuplicateGridKeyIsRejected) {
  ResultsGrid grid;
  grid.insert({"20", 1, "M1"}, {0.5, std::nullopt});
  EXPECT_THROW(grid.insert({"20", 1, "M1"}, {0.6, std::nullopt}), ValidationError);
}

TEST(PlotData, SeriesCounts) {
  ResultsGrid grid;
  for (int shift = 1; shift <= 5; ++shift) {
    grid.insert({"20", shift, "M1"}, {0.5, std::nullopt});
    grid.insert({"20", shift, "M2"}, {0.25, std::nullopt});
  }
  const auto csv = plot_data(grid);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "series,x,y");
  std::map<std::string, int> points;
  while (std::getline(in, line)) ++points[line.substr(0, line.find(','))];
  EXPECT_EQ(points, (std::map<std::string, int>{{"acc:20:M1", 5}, {"acc:20:M2", 5}}));
}

TEST(PlotData, DeltaSeriesHoldsFogPoint) {
  const auto grid = load_grid(kFixtures / "accuracy_grid.json");
  const auto csv = plot_data(grid, std::make_pair(std::string("20"), std::string("t-RAIN")));
  EXPECT_NE(csv.find("\ndelta:t-RAIN-20,3,4.4\n"), std::string::npos);
  EXPECT_NE(csv.find("\ndelta:t-RAIN-20,2,-0.8\n"), std::string::npos);
  EXPECT_EQ(csv, plot_data(grid, std::make_pair(std::string("20"), std::string("t-RAIN"))));
}

TEST(SuiteOutputs, ByteIdenticalAcrossRuns) {
  gen::TempDir dir;
  const auto cfg = small_suite(dir, 2, R"(,"compare":{"baseline":"20","treated":"20"})");
  write_suite_outputs(run_shift_suite(cfg), dir / "a");
  write_suite_outputs(run_shift_suite(cfg), dir / "b");
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / entry.path().filename())) << entry.path();
  }
  EXPECT_GE(files, 10U);
  EXPECT_TRUE(fs::exists(dir / "a" / "compare.json"));
}

TEST(DetectionTable, FixtureAggregatesAreConsistent) {
  const auto rows = load_detection_table(kFixtures / "detection_ap.json");
  EXPECT_EQ(rows.size(), 12U);
  const auto checks = check_detection_table(rows);
  EXPECT_EQ(checks.size(), 18U);
  for (const auto& c : checks) EXPECT_TRUE(c.ok) << c.row << " " << c.aggregate << " " << c.recomputed;
}

TEST(FormatNumber, TrimsZeros) {
  EXPECT_EQ(format_number(4.4), "4.4");
  EXPECT_EQ(format_number(67.0), "67");
  EXPECT_EQ(format_number(-0.8, 1), "-0.8");
  EXPECT_EQ(format_number(1.0 / 3.0, 2), "0.33");
}
