#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shiftbench/manifest.hpp"
#include "shiftbench/metrics.hpp"
#include "shiftbench/shift.hpp"
#include "shiftbench/trainmap.hpp"

namespace shiftbench {

// Orders embedded digit runs numerically: "M2" < "M10", "20" < "t-RAIN".
bool natural_less(std::string_view a, std::string_view b) noexcept;

struct ExperimentConfig {
  // Relative paths below resolve against this directory.
  std::filesystem::path base_dir;
  std::filesystem::path real_manifest;
  std::optional<std::filesystem::path> synthetic_manifest;
  std::optional<std::filesystem::path> embeddings;
  OracleConfig oracle;
  std::optional<std::size_t> iterations;

  std::vector<ShiftScenario> scenarios;
  std::vector<std::string> split_tags;
  std::vector<std::string> models;
  // predictions[split_tag][model][shift_id]
  std::map<std::string, std::map<std::string, std::map<int, std::filesystem::path>>> predictions;

  // Which manifest split the scenarios reshape.
  Split shift_split = Split::test;
  bool with_replacement = true;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  // Optional (baseline, treated) split tags summarized after the run.
  std::optional<std::pair<std::string, std::string>> compare;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

// Relative paths resolve against `base_dir`. Instead of an explicit
// "predictions" map a config may give "prediction_template" with {split},
// {model} and {shift} placeholders.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Canonical JSON of every field except base_dir and output_dir, so the hash
// does not depend on where the config lives or where results go.
std::string experiment_config_json(const ExperimentConfig& cfg);
// FNV-1a of experiment_config_json(), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct GridKey {
  std::string split_tag;
  int shift_id = 1;
  std::string model_id;

  friend bool operator==(const GridKey&, const GridKey&) = default;
  friend bool operator<(const GridKey& a, const GridKey& b) noexcept;
};

struct GridRow {
  double accuracy = 0.0;
  // Absent for rows loaded from accuracy-only tables.
  std::optional<ClassificationReport> report;
};

struct GridMetadata {
  std::uint64_t seed = 0;
  std::string config_hash;
};

class ResultsGrid {
 public:
  // Throws ValidationError on a duplicate key.
  void insert(GridKey key, GridRow row);

  bool empty() const noexcept { return rows_.empty(); }
  std::size_t size() const noexcept { return rows_.size(); }
  const std::map<GridKey, GridRow>& rows() const noexcept { return rows_; }
  const GridRow& at(const GridKey& key) const;

  std::vector<std::string> split_tags() const;
  std::vector<int> shift_ids() const;
  std::vector<std::string> model_ids() const;

  GridMetadata metadata;

 private:
  std::map<GridKey, GridRow> rows_;
};

struct SuiteResult {
  ResultsGrid grid;
  // Resampled manifest per scenario id.
  std::map<int, DatasetManifest> shifted;
  std::map<int, LabelDistribution> targets;
  std::optional<TRainResult> augmentation;
  std::optional<std::pair<std::string, std::string>> compare;
};

// For each scenario: target = make_shift(scenario, label_distribution(real,
// shift_split), derive_seed(seed, 2 * id)), then resample with
// derive_seed(seed, 2 * id + 1). Every (split, model) prediction file for the
// scenario is scored on the resampled split; "#k" duplicates reuse the
// prediction of their base id.
SuiteResult run_shift_suite(const ExperimentConfig& cfg);

// Writes grid.{json,csv,md}, plot.csv, targets.json, shift_<id>.jsonl,
// compare.json when compare tags are set and, when augmentation ran,
// augmented.jsonl and augmentation_report.json.
// Everything written here is a pure function of the config.
void write_suite_outputs(const SuiteResult& result, const std::filesystem::path& dir);

// Accuracy by (shift_id, model_id) for one split tag.
using GridSlice = std::map<std::pair<int, std::string>, double>;
GridSlice slice(const ResultsGrid& grid, std::string_view split_tag);

struct ShiftDelta {
  int shift_id = 1;
  double mean_delta_pp = 0.0;  // unrounded, percentage points
  double rounded_pp = 0.0;     // to 0.1
};

// Per shift: mean over models of (treated - baseline) accuracy, in
// percentage points. Both slices must hold the same keys.
std::vector<ShiftDelta> improvement_summary(const GridSlice& baseline, const GridSlice& treated);
std::string improvement_json(const std::vector<ShiftDelta>& deltas, std::string_view baseline,
                             std::string_view treated);

// Half-away-from-zero rounding to one decimal; -0.0 becomes 0.0.
double round_to_tenth(double value) noexcept;

enum class ReportFormat { csv, json, markdown };
ReportFormat parse_report_format(std::string_view text);

std::string grid_to_csv(const ResultsGrid& grid);
std::string grid_to_json(const ResultsGrid& grid);
// Rows are (split, shift), columns are models, cells are accuracy in percent.
std::string grid_to_markdown(const ResultsGrid& grid);
ResultsGrid parse_grid_csv(std::string_view csv);
ResultsGrid parse_grid_json(std::string_view json_text);
ResultsGrid load_grid(const std::filesystem::path& path);

void emit_report(const ResultsGrid& grid, ReportFormat format, const std::filesystem::path& path);

// CSV "series,x,y". One "acc:<split>:<model>" series of (shift_id, accuracy %)
// per split and model; with both tags given, a "delta:<treated>-<baseline>"
// series of rounded mean deltas and one "delta:<model>" series per model.
std::string plot_data(const ResultsGrid& grid,
                      std::optional<std::pair<std::string, std::string>> baseline_treated =
                          std::nullopt);

// Shortest fixed-point text with at most `max_decimals` decimals ("4.4", "67").
std::string format_number(double value, int max_decimals = 6);

// Detection benchmark rows with per-class AP cells and printed aggregates.
struct DetectionTableRow {
  std::string section;
  std::string model;
  std::string dataset;
  std::map<ClassLabel, double> class_ap;   // percent
  std::map<std::string, double> printed;   // e.g. "t4_ap", "map"
};

std::vector<DetectionTableRow> load_detection_table(const std::filesystem::path& path);

struct AggregateCheck {
  std::string row;
  std::string aggregate;
  double recomputed = 0.0;
  double printed = 0.0;
  bool ok = false;
};

// Recomputes "t4_ap" (top-4 classes) and "map" (all classes) of each row with
// mean_ap() and compares them with the printed values.
std::vector<AggregateCheck> check_detection_table(const std::vector<DetectionTableRow>& rows,
                                                  double tolerance = 0.01);

}  // namespace shiftbench
