#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "generators.hpp"
#include "oracles.hpp"
#include "shiftbench/errors.hpp"
#include "shiftbench/metrics.hpp"

using namespace shiftbench;

namespace {

std::vector<ClassLabel> labels(std::initializer_list<const char*> names) {
  std::vector<ClassLabel> out;
  for (const auto* n : names) out.emplace_back(n);
  return out;
}

DetectionRecord det(std::string image, const char* cls, Box box, double conf, std::string id = {}) {
  return {std::move(image), ClassLabel(cls), box, conf, std::move(id)};
}

GroundTruth gt(std::string image, const char* cls, Box box) { return {std::move(image), ClassLabel(cls), box}; }

// Random detection instance with distinct confidences.
std::pair<std::vector<DetectionRecord>, std::vector<GroundTruth>> random_instance(gen::Rng& rng) {
  std::vector<GroundTruth> gts;
  std::vector<DetectionRecord> dets;
  const auto images = gen::uniform(rng, 1, 4);
  const char* classes[] = {"car", "person"};
  for (std::size_t i = gen::uniform(rng, 0, 12); i > 0; --i) {
    const double x = gen::uniform_real(rng, 0, 40), y = gen::uniform_real(rng, 0, 40);
    gts.push_back(gt("img" + std::to_string(gen::uniform(rng, 1, images)), classes[gen::uniform(rng, 0, 1)],
                     {x, y, x + gen::uniform_real(rng, 5, 20), y + gen::uniform_real(rng, 5, 20)}));
  }
  std::vector<double> confs;
  const auto n = gen::uniform(rng, 0, 30);
  while (confs.size() < n) {
    const double c = gen::uniform_real(rng, 0, 1);
    if (std::find(confs.begin(), confs.end(), c) == confs.end()) confs.push_back(c);
  }
  for (double c : confs) {
    Box b;
    if (!gts.empty() && gen::uniform(rng, 0, 2) > 0) {
      // Jittered copy of a ground-truth box, possibly on another image.
      const auto& g = gts[gen::uniform(rng, 0, gts.size() - 1)];
      const double dx = gen::uniform_real(rng, -4, 4), dy = gen::uniform_real(rng, -4, 4);
      b = {g.box.x1 + dx, g.box.y1 + dy, g.box.x2 + dx, g.box.y2 + dy};
      dets.push_back(det(gen::uniform(rng, 0, 4) ? g.image_id : "img1", g.cls.name().c_str(), b, c));
    } else {
      const double x = gen::uniform_real(rng, 0, 40), y = gen::uniform_real(rng, 0, 40);
      b = {x, y, x + gen::uniform_real(rng, 1, 20), y + gen::uniform_real(rng, 1, 20)};
      dets.push_back(det("img" + std::to_string(gen::uniform(rng, 1, images)),
                         classes[gen::uniform(rng, 0, 1)], b, c));
    }
  }
  return {dets, gts};
}

}  // namespace

TEST(ConfusionMatrix, Construction) {
  const auto classes = labels({"rain", "fog"});
  const auto perfect = confusion_matrix(labels({"rain", "fog", "fog"}), labels({"rain", "fog", "fog"}), classes);
  EXPECT_EQ(perfect.cells, (std::vector<std::vector<std::uint64_t>>{{1, 0}, {0, 2}}));
  const auto cm = confusion_matrix(labels({"rain", "rain", "fog"}), labels({"rain", "fog", "fog"}), classes);
  EXPECT_EQ(cm.cells, (std::vector<std::vector<std::uint64_t>>{{1, 1}, {0, 1}}));
  EXPECT_EQ(cm.total(), 3U);
  const auto empty = confusion_matrix({}, {}, classes);
  EXPECT_EQ(empty.cells, (std::vector<std::vector<std::uint64_t>>{{0, 0}, {0, 0}}));
  EXPECT_THROW(confusion_matrix(labels({"rain"}), {}, classes), ValidationError);
  EXPECT_THROW(confusion_matrix(labels({"snow"}), labels({"rain"}), classes), ValidationError);
}

TEST(ClassificationReport, HandValues) {
  const auto classes = labels({"rain", "fog"});
  const auto rep = classification_report(
      confusion_matrix(labels({"rain", "rain", "fog"}), labels({"rain", "fog", "fog"}), classes));
  const auto& r = rep.per_class.at(ClassLabel("rain"));
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(rep.accuracy, 2.0 / 3.0);
  EXPECT_EQ(rep.total, 3U);
}

TEST(ClassificationReport, PerfectAndDegenerate) {
  const auto classes = labels({"rain", "fog", "snow"});
  const auto rep = classification_report(
      confusion_matrix(labels({"rain", "fog"}), labels({"rain", "fog"}), classes));
  EXPECT_EQ(rep.accuracy, 1.0);
  EXPECT_EQ(rep.per_class.at(ClassLabel("rain")).f1, 1.0);
  EXPECT_EQ(rep.per_class.at(ClassLabel("snow")), (ClassScores{0.0, 0.0, 0.0}));
  EXPECT_DOUBLE_EQ(rep.macro_f1, 2.0 / 3.0);
  EXPECT_THROW(classification_report(confusion_matrix({}, {}, classes)), ValidationError);
}

TEST(ClassificationReportProperty, MatchesBruteForceExactly) {
  gen::Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const auto k = gen::uniform(rng, 1, 6);
    std::vector<ClassLabel> classes;
    for (std::size_t c = 0; c < k; ++c) classes.emplace_back("c" + std::to_string(c));
    const auto n = gen::uniform(rng, 1, 200);
    std::vector<ClassLabel> truths, preds;
    for (std::size_t i = 0; i < n; ++i) {
      truths.push_back(classes[gen::uniform(rng, 0, k - 1)]);
      preds.push_back(gen::uniform(rng, 0, 2) ? truths.back() : classes[gen::uniform(rng, 0, k - 1)]);
    }
    ASSERT_EQ(classification_report(confusion_matrix(truths, preds, classes)),
              ref::classification(truths, preds, classes))
        << "trial " << trial;
  }
}

TEST(Iou, HandValues) {
  EXPECT_EQ(iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_EQ(iou({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
  EXPECT_EQ(iou({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0);  // touching edge
  EXPECT_NEAR(iou({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0 / 7.0, 1e-15);
}

TEST(AveragePrecision, PerfectSingleDetection) {
  const std::vector<DetectionRecord> dets{det("i", "person", {0, 0, 10, 10}, 0.9)};
  const std::vector<GroundTruth> gts{gt("i", "person", {0, 0, 10, 10})};
  const auto r = average_precision(dets, gts, ClassLabel("person"));
  EXPECT_EQ(r.ap, 1.0);
  EXPECT_EQ(r.tp, 1U);
  EXPECT_EQ(r.fp, 0U);
  EXPECT_EQ(r.num_gt, 1U);
}

TEST(AveragePrecision, TwoGtThreeDetections) {
  const std::vector<GroundTruth> gts{gt("i", "car", {0, 0, 10, 10}), gt("i", "car", {20, 20, 30, 30})};
  const std::vector<DetectionRecord> dets{det("i", "car", {0, 0, 10, 10}, 0.9),
                                          det("i", "car", {50, 50, 60, 60}, 0.8),
                                          det("i", "car", {20, 20, 30, 30}, 0.7)};
  const auto r = average_precision(dets, gts, ClassLabel("car"));
  ASSERT_EQ(r.pr_points.size(), 3U);
  EXPECT_DOUBLE_EQ(r.pr_points[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.pr_points[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(r.pr_points[2].precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.pr_points[1].recall, 0.5);
  EXPECT_DOUBLE_EQ(r.pr_points[2].recall, 1.0);
  EXPECT_NEAR(r.ap, 0.5 * 1.0 + 0.5 * (2.0 / 3.0), 1e-12);
  EXPECT_NEAR(r.ap, ref::average_precision(dets, gts, ClassLabel("car"), 0.5), 1e-12);
  // 11-point: recall thresholds 0..0.5 reach precision 1, 0.6..1.0 reach 2/3.
  const auto e = average_precision(dets, gts, ClassLabel("car"), 0.5, ApMode::eleven_point);
  EXPECT_NEAR(e.ap, (6 * 1.0 + 5 * (2.0 / 3.0)) / 11.0, 1e-12);
}

TEST(AveragePrecision, DuplicatesAreFalsePositivesAndOtherClassesIgnored) {
  const std::vector<GroundTruth> gts{gt("i", "bus", {0, 0, 10, 10}), gt("i", "car", {0, 0, 10, 10})};
  const std::vector<DetectionRecord> dets{det("i", "bus", {0, 0, 10, 10}, 0.9),
                                          det("i", "bus", {0, 0, 10, 10}, 0.8),
                                          det("j", "bus", {0, 0, 10, 10}, 0.95)};
  const auto r = average_precision(dets, gts, ClassLabel("bus"));
  EXPECT_EQ(r.tp, 1U);
  EXPECT_EQ(r.fp, 2U);
  EXPECT_EQ(r.num_gt, 1U);
  EXPECT_DOUBLE_EQ(r.ap, 0.5);
}

TEST(AveragePrecision, ThresholdIsInclusive) {
  // IoU of the two boxes is exactly 0.5.
  const std::vector<GroundTruth> gts{gt("i", "car", {0, 0, 2, 1})};
  const std::vector<DetectionRecord> dets{det("i", "car", {0, 0, 1, 1}, 0.5)};
  EXPECT_EQ(average_precision(dets, gts, ClassLabel("car"), 0.5).tp, 1U);
  EXPECT_EQ(average_precision(dets, gts, ClassLabel("car"), 0.51).tp, 0U);
}

TEST(AveragePrecision, NoGroundTruth) {
  const std::vector<DetectionRecord> dets{det("i", "van", {0, 0, 1, 1}, 0.3)};
  const auto with_dets = average_precision(dets, {}, ClassLabel("van"));
  EXPECT_TRUE(with_dets.defined);
  EXPECT_EQ(with_dets.ap, 0.0);
  EXPECT_FALSE(with_dets.warnings.empty());
  const auto nothing = average_precision({}, {}, ClassLabel("van"));
  EXPECT_FALSE(nothing.defined);
}

TEST(AveragePrecision, Errors) {
  const std::vector<DetectionRecord> bad_box{det("i", "car", {1, 1, 0, 2}, 0.3)};
  EXPECT_THROW(average_precision(bad_box, {}, ClassLabel("car")), ValidationError);
  const std::vector<DetectionRecord> bad_conf{det("i", "car", {0, 0, 1, 1}, 1.3)};
  EXPECT_THROW(average_precision(bad_conf, {}, ClassLabel("car")), ValidationError);
  EXPECT_THROW(average_precision({}, {}, ClassLabel("car"), 0.0), ValidationError);
  EXPECT_THROW(average_precision({}, {}, ClassLabel("car"), 1.0), ValidationError);
}

TEST(AveragePrecisionProperty, MatchesThresholdEnumerationOracle) {
  gen::Rng rng(31337);
  for (int trial = 0; trial < 300; ++trial) {
    const auto [dets, gts] = random_instance(rng);
    for (const char* cls : {"car", "person"}) {
      const auto r = average_precision(dets, gts, ClassLabel(cls));
      ASSERT_NEAR(r.ap, ref::average_precision(dets, gts, ClassLabel(cls), 0.5), 1e-9)
          << "trial " << trial << " class " << cls;
      ASSERT_LE(r.tp, r.num_gt);
      for (std::size_t i = 1; i < r.pr_points.size(); ++i) {
        ASSERT_GE(r.pr_points[i].recall, r.pr_points[i - 1].recall);
      }
    }
  }
}

TEST(AveragePrecisionProperty, PermutationInvariantWithTies) {
  gen::Rng rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    auto [dets, gts] = random_instance(rng);
    // Quantize confidences to force ties; ids fix the order among them.
    for (std::size_t i = 0; i < dets.size(); ++i) {
      dets[i].confidence = std::round(dets[i].confidence * 3) / 3;
      if (i % 2) dets[i].id = "d" + std::to_string(i);
    }
    const auto before = average_precision(dets, gts, ClassLabel("car"));
    std::shuffle(dets.begin(), dets.end(), rng);
    std::shuffle(gts.begin(), gts.end(), rng);
    const auto after = average_precision(dets, gts, ClassLabel("car"));
    ASSERT_EQ(before.ap, after.ap) << "trial " << trial;
    ASSERT_EQ(before.tp, after.tp);
    ASSERT_EQ(before.fp, after.fp);
  }
}

TEST(MeanAp, SubsetsAndSentinels) {
  std::vector<APResult> rs;
  for (auto [name, ap] : std::vector<std::pair<const char*, double>>{
           {"car", 0.6913}, {"person", 0.7031}, {"bus", 0.3864}, {"truck", 0.3054}, {"mc", 0.5217},
           {"bicycle", 0.3056}}) {
    APResult r{.cls = ClassLabel(name)};
    r.ap = ap;
    rs.push_back(r);
  }
  const auto top4 = top4_classes();
  EXPECT_EQ(top4, labels({"car", "person", "bus", "truck"}));
  EXPECT_NEAR(100 * mean_ap(rs, std::span<const ClassLabel>(top4)), 52.155, 1e-9);
  EXPECT_NEAR(100 * mean_ap(rs), 48.558333333333, 1e-9);

  APResult undefined{.cls = ClassLabel("van")};
  undefined.ap = 1.0;
  undefined.defined = false;
  rs.push_back(undefined);
  EXPECT_NEAR(100 * mean_ap(rs), 48.558333333333, 1e-9);

  APResult single{.cls = ClassLabel("car")};
  single.ap = 0.5;
  EXPECT_EQ(mean_ap(std::vector<APResult>{single}), 0.5);
  EXPECT_THROW(mean_ap(std::vector<APResult>{undefined}), ValidationError);
  const auto fog = labels({"fog"});
  EXPECT_THROW(mean_ap(rs, std::span<const ClassLabel>(fog)), ValidationError);
}

TEST(Predictions, ParseAndErrors) {
  const auto p = parse_predictions("sample_id,predicted_class\na,Rain\nb,fog\n");
  EXPECT_EQ(p.at("a"), ClassLabel("rain"));
  EXPECT_EQ(p.size(), 2U);
  EXPECT_THROW(parse_predictions("id,class\na,rain\n"), ValidationError);
  EXPECT_THROW(parse_predictions("sample_id,predicted_class\na,rain\na,fog\n"), ValidationError);
  EXPECT_THROW(parse_predictions("sample_id,predicted_class\na\n"), ValidationError);
  EXPECT_THROW(load_predictions("/nonexistent/p.csv"), IoError);
}

TEST(Detections, ParseAndErrors) {
  const auto d = parse_detections("image_id,class,x1,y1,x2,y2,confidence\nimg1,Car,0,0,10,10,0.75\n");
  ASSERT_EQ(d.size(), 1U);
  EXPECT_EQ(d[0].cls, ClassLabel("car"));
  EXPECT_EQ(d[0].box, (Box{0, 0, 10, 10}));
  EXPECT_EQ(d[0].confidence, 0.75);
  EXPECT_THROW(parse_detections("image_id,class,x1,y1,x2,y2,confidence\nimg1,car,0,0,10,10\n"), ParseError);
  EXPECT_THROW(parse_detections("image_id,class,x1,y1,x2,y2,confidence\nimg1,car,5,0,1,10,0.5\n"), ParseError);
  EXPECT_THROW(parse_detections("image_id,class,x1,y1,x2,y2,confidence\nimg1,car,0,0,1,1,1.5\n"), ParseError);
}

TEST(GroundTruthFromManifest, CollectsBoxes) {
  auto a = gen::real("img1", "rain", Split::test);
  a.boxes = std::vector<GroundTruthBox>{{ClassLabel("car"), {0, 0, 1, 1}}, {ClassLabel("person"), {1, 1, 2, 3}}};
  auto b = gen::real("img2", "fog", Split::train);
  b.boxes = std::vector<GroundTruthBox>{{ClassLabel("car"), {0, 0, 5, 5}}};
  const auto m = make_manifest("d", {a, b});
  EXPECT_EQ(ground_truth_from_manifest(m).size(), 3U);
  const auto test = ground_truth_from_manifest(m, Split::test);
  ASSERT_EQ(test.size(), 2U);
  EXPECT_EQ(test[0].image_id, "img1");
}
