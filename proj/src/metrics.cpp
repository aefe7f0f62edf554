#include "shiftbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "shiftbench/errors.hpp"
#include "text_util.hpp"

namespace shiftbench {

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t sum = 0;
  for (const auto& row : cells) sum = std::accumulate(row.begin(), row.end(), sum);
  return sum;
}

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> truths,
                                 std::span<const ClassLabel> preds,
                                 std::span<const ClassLabel> classes) {
  if (truths.size() != preds.size()) {
    throw ValidationError("truths and predictions differ in length (" +
                          std::to_string(truths.size()) + " vs " + std::to_string(preds.size()) +
                          ")");
  }
  std::map<ClassLabel, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!index.emplace(classes[i], i).second) {
      throw ValidationError("class \"" + classes[i].name() + "\" listed twice");
    }
  }
  auto lookup = [&](const ClassLabel& c) {
    auto it = index.find(c);
    if (it == index.end()) throw ValidationError("unknown label \"" + c.name() + "\"");
    return it->second;
  };

  ConfusionMatrix cm{.classes = {classes.begin(), classes.end()},
                     .cells = std::vector<std::vector<std::uint64_t>>(
                         classes.size(), std::vector<std::uint64_t>(classes.size(), 0))};
  for (std::size_t i = 0; i < truths.size(); ++i) ++cm.cells[lookup(truths[i])][lookup(preds[i])];
  return cm;
}

ClassificationReport classification_report(const ConfusionMatrix& cm) {
  const std::size_t k = cm.classes.size();
  if (cm.cells.size() != k ||
      std::any_of(cm.cells.begin(), cm.cells.end(), [k](const auto& r) { return r.size() != k; })) {
    throw ValidationError("confusion matrix is not square over its classes");
  }
  const std::uint64_t total = cm.total();
  if (total == 0) throw ValidationError("classification report of an empty confusion matrix");

  auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };

  ClassificationReport rep;
  rep.total = total;
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += cm.cells[c][j];
      col += cm.cells[j][c];
    }
    const auto hit = cm.cells[c][c];
    trace += hit;
    ClassScores s{.precision = ratio(hit, col), .recall = ratio(hit, row), .f1 = 0.0};
    if (s.precision + s.recall > 0.0) {
      s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    }
    rep.macro_precision += s.precision;
    rep.macro_recall += s.recall;
    rep.macro_f1 += s.f1;
    rep.per_class.emplace(cm.classes[c], s);
  }
  rep.accuracy = ratio(trace, total);
  if (k > 0) {
    rep.macro_precision /= static_cast<double>(k);
    rep.macro_recall /= static_cast<double>(k);
    rep.macro_f1 /= static_cast<double>(k);
  }
  return rep;
}

double iou(const Box& a, const Box& b) noexcept {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

namespace {

auto box_key(const Box& b) { return std::tie(b.x1, b.y1, b.x2, b.y2); }

bool detection_order(const DetectionRecord* a, const DetectionRecord* b) {
  if (a->confidence != b->confidence) return a->confidence > b->confidence;
  if (a->id != b->id) return a->id < b->id;
  if (a->image_id != b->image_id) return a->image_id < b->image_id;
  return box_key(a->box) < box_key(b->box);
}

double all_point_ap(const std::vector<PrPoint>& pts) {
  // Precision envelope from the right, then area over recall increments.
  std::vector<double> env(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    env[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].recall > prev_recall) {
      ap += (pts[i].recall - prev_recall) * env[i];
      prev_recall = pts[i].recall;
    }
  }
  return ap;
}

double eleven_point_ap(const std::vector<PrPoint>& pts) {
  double sum = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    double best = 0.0;
    for (const auto& p : pts) {
      if (p.recall >= t) best = std::max(best, p.precision);
    }
    sum += best;
  }
  return sum / 11.0;
}

}  // namespace

APResult average_precision(std::span<const DetectionRecord> dets,
                           std::span<const GroundTruth> gts, const ClassLabel& cls,
                           double iou_threshold, ApMode mode) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw ValidationError("IoU threshold must lie in (0, 1)");
  }

  std::vector<const DetectionRecord*> order;
  for (const auto& d : dets) {
    if (d.cls != cls) continue;
    if (!d.box.well_formed()) throw ValidationError("detection box with x2<=x1 or y2<=y1");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw ValidationError("detection confidence outside [0, 1]");
    }
    order.push_back(&d);
  }
  std::sort(order.begin(), order.end(), detection_order);

  std::vector<const GroundTruth*> truth;
  for (const auto& g : gts) {
    if (g.cls == cls) truth.push_back(&g);
  }
  std::sort(truth.begin(), truth.end(), [](const GroundTruth* a, const GroundTruth* b) {
    if (a->image_id != b->image_id) return a->image_id < b->image_id;
    return box_key(a->box) < box_key(b->box);
  });
  std::map<std::string_view, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < truth.size(); ++i) by_image[truth[i]->image_id].push_back(i);

  APResult res{.cls = cls};
  res.num_gt = truth.size();
  if (res.num_gt == 0) {
    res.fp = order.size();
    if (order.empty()) {
      res.defined = false;
    } else {
      res.warnings.push_back("class \"" + cls.name() +
                             "\" has detections but no ground truth; AP set to 0");
    }
    return res;
  }

  std::vector<bool> matched(truth.size(), false);
  res.pr_points.reserve(order.size());
  for (const auto* d : order) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    if (auto it = by_image.find(d->image_id); it != by_image.end()) {
      for (auto g : it->second) {
        if (matched[g]) continue;
        const double v = iou(d->box, truth[g]->box);
        if (v > best_iou) {
          best_iou = v;
          best = g;
        }
      }
    }
    if (best && best_iou >= iou_threshold) {
      matched[*best] = true;
      ++res.tp;
    } else {
      ++res.fp;
    }
    res.pr_points.push_back({static_cast<double>(res.tp) / static_cast<double>(res.num_gt),
                             static_cast<double>(res.tp) / static_cast<double>(res.tp + res.fp)});
  }
  res.ap = mode == ApMode::all_point ? all_point_ap(res.pr_points) : eleven_point_ap(res.pr_points);
  return res;
}

double mean_ap(std::span<const APResult> results,
               std::optional<std::span<const ClassLabel>> subset) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (!r.defined) continue;
    if (subset && std::find(subset->begin(), subset->end(), r.cls) == subset->end()) continue;
    sum += r.ap;
    ++n;
  }
  if (n == 0) throw ValidationError("no AP results left to average");
  return sum / static_cast<double>(n);
}

std::vector<ClassLabel> top4_classes() {
  return {ClassLabel("car"), ClassLabel("person"), ClassLabel("bus"), ClassLabel("truck")};
}

std::vector<GroundTruth> ground_truth_from_manifest(const DatasetManifest& manifest,
                                                    std::optional<Split> split) {
  std::vector<GroundTruth> out;
  for (const auto& s : manifest.samples) {
    if (split && s.split != *split) continue;
    if (!s.boxes) continue;
    for (const auto& b : *s.boxes) out.push_back({s.id, b.cls, b.box});
  }
  return out;
}

namespace {

void expect_header(const std::vector<detail::Line>& lines, std::string_view header) {
  if (lines.empty()) throw ParseError(1, "missing header \"" + std::string(header) + "\"");
  if (detail::trim(lines.front().text) != header) {
    throw ParseError(lines.front().number, "expected header \"" + std::string(header) + "\"");
  }
}

}  // namespace

std::map<std::string, ClassLabel> parse_predictions(std::string_view csv) {
  const auto lines = detail::split_lines(csv);
  expect_header(lines, "sample_id,predicted_class");
  std::map<std::string, ClassLabel> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = detail::split_csv_row(lines[i].text);
    if (cells.size() != 2 || cells[0].empty()) {
      throw ParseError(lines[i].number, "expected sample_id,predicted_class");
    }
    try {
      if (!out.emplace(std::string(cells[0]), ClassLabel(cells[1])).second) {
        throw ValidationError("duplicate prediction for \"" + std::string(cells[0]) + "\"");
      }
    } catch (const ValidationError& e) {
      throw ParseError(lines[i].number, e.what());
    }
  }
  return out;
}

std::map<std::string, ClassLabel> load_predictions(const std::filesystem::path& path) {
  try {
    return parse_predictions(read_text_file(path));
  } catch (const ParseError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<DetectionRecord> parse_detections(std::string_view csv) {
  const auto lines = detail::split_lines(csv);
  expect_header(lines, "image_id,class,x1,y1,x2,y2,confidence");
  std::vector<DetectionRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = detail::split_csv_row(lines[i].text);
    if (cells.size() != 7) throw ParseError(lines[i].number, "expected 7 columns");
    double v[5];
    for (int c = 0; c < 5; ++c) {
      auto parsed = detail::parse_double(cells[2 + c]);
      if (!parsed) throw ParseError(lines[i].number, "bad number \"" + std::string(cells[2 + c]) + "\"");
      v[c] = *parsed;
    }
    try {
      DetectionRecord d{.image_id = std::string(cells[0]),
                        .cls = ClassLabel(cells[1]),
                        .box = {v[0], v[1], v[2], v[3]},
                        .confidence = v[4],
                        .id = {}};
      if (!d.box.well_formed()) throw ValidationError("box with x2<=x1 or y2<=y1");
      if (d.confidence < 0.0 || d.confidence > 1.0) throw ValidationError("confidence outside [0, 1]");
      out.push_back(std::move(d));
    } catch (const ValidationError& e) {
      throw ParseError(lines[i].number, e.what());
    }
  }
  return out;
}

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path) {
  try {
    return parse_detections(read_text_file(path));
  } catch (const ParseError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace shiftbench
