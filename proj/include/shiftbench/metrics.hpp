#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shiftbench/manifest.hpp"

namespace shiftbench {

struct ConfusionMatrix {
  std::vector<ClassLabel> classes;
  // cells[t][p]: samples of true class t predicted as p.
  std::vector<std::vector<std::uint64_t>> cells;

  std::uint64_t total() const noexcept;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> truths,
                                 std::span<const ClassLabel> preds,
                                 std::span<const ClassLabel> classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

struct ClassificationReport {
  double accuracy = 0.0;
  std::map<ClassLabel, ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::uint64_t total = 0;
  friend bool operator==(const ClassificationReport&, const ClassificationReport&) = default;
};

// Zero denominators give 0 rather than NaN. Throws on an empty matrix.
ClassificationReport classification_report(const ConfusionMatrix& cm);

double iou(const Box& a, const Box& b) noexcept;

struct DetectionRecord {
  std::string image_id;
  ClassLabel cls;
  Box box;
  double confidence = 0.0;
  // Optional caller-side id; only used to break confidence ties.
  std::string id;
};

struct GroundTruth {
  std::string image_id;
  ClassLabel cls;
  Box box;
};

enum class ApMode { all_point, eleven_point };

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct APResult {
  ClassLabel cls;
  double ap = 0.0;
  // False when the class has neither ground truth nor detections.
  bool defined = true;
  std::vector<PrPoint> pr_points;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t num_gt = 0;
  std::vector<std::string> warnings;
};

inline constexpr double kDefaultIouThreshold = 0.5;

// Processes detections of `cls` by (confidence desc, id, image_id, box) and
// greedily matches each one to the unmatched same-image ground truth with the
// highest IoU (ties go to the earliest box in (image_id, box) order). A match
// needs IoU >= iou_threshold.
APResult average_precision(std::span<const DetectionRecord> dets,
                           std::span<const GroundTruth> gts, const ClassLabel& cls,
                           double iou_threshold = kDefaultIouThreshold,
                           ApMode mode = ApMode::all_point);

// Unweighted mean over defined results, optionally restricted to `subset`.
double mean_ap(std::span<const APResult> results,
               std::optional<std::span<const ClassLabel>> subset = std::nullopt);

// Classes averaged by the "T-4 AP" column.
std::vector<ClassLabel> top4_classes();

// Ground truth boxes of every sample in `split`, keyed by sample id.
std::vector<GroundTruth> ground_truth_from_manifest(const DatasetManifest& manifest,
                                                    std::optional<Split> split = std::nullopt);

// "sample_id,predicted_class" with a header row.
std::map<std::string, ClassLabel> load_predictions(const std::filesystem::path& path);
std::map<std::string, ClassLabel> parse_predictions(std::string_view csv);

// "image_id,class,x1,y1,x2,y2,confidence" with a header row.
std::vector<DetectionRecord> load_detections(const std::filesystem::path& path);
std::vector<DetectionRecord> parse_detections(std::string_view csv);

}  // namespace shiftbench
