#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftbench/manifest.hpp"
#include "shiftbench/simmap.hpp"

namespace shiftbench {

inline constexpr std::size_t kDefaultBeta = 210;

struct OracleConfig {
  std::size_t eta = kDefaultBeta;  // synthetic candidates scanned per call
  std::size_t beta = kDefaultBeta; // candidates kept per call
  std::size_t dims = kDefaultDims;
  std::uint64_t seed = 0;
};

void validate(const OracleConfig& cfg);

struct ScoredSample {
  Sample sample;
  double score = 0.0;
};

struct AugmentationSet {
  ClassLabel source_class;
  // Sorted by score descending, then sample id ascending.
  std::vector<ScoredSample> members;
};

// Total order used by the oracle's sort.
bool ranks_before(const ScoredSample& a, const ScoredSample& b) noexcept;

// Scores synthetic samples against class anchors. Vectors are computed once
// per sample and per class, so repeated oracle calls over one synthetic set
// only pay for the cosine.
class OracleScorer {
 public:
  OracleScorer(const DatasetManifest& synthetic, const EmbeddingStore& store, std::size_t dims);

  std::size_t size() const noexcept { return vectors_.size(); }
  std::size_t scorable_count() const noexcept { return scorable_; }
  bool scorable(std::size_t index) const noexcept { return vectors_[index].has_value(); }
  const Sample& sample(std::size_t index) const { return synthetic_->samples[index]; }

  double score(std::size_t index, const ClassLabel& anchor);

 private:
  const DatasetManifest* synthetic_;
  const EmbeddingStore* store_;
  std::size_t dims_;
  std::size_t scorable_ = 0;
  std::vector<std::optional<EmbeddingVector>> vectors_;
  std::map<ClassLabel, EmbeddingVector> anchors_;
};

// Draws min(eta, |synthetic|) samples without replacement (Pcg32 seeded with
// cfg.seed), scores each scorable one against the anchor class, sorts with
// ranks_before() and keeps the first beta.
AugmentationSet oracle(const ClassLabel& anchor_class, const DatasetManifest& synthetic,
                       const EmbeddingStore& store, const OracleConfig& cfg);
AugmentationSet oracle(const ClassLabel& anchor_class, OracleScorer& scorer,
                       const OracleConfig& cfg);

struct ClassAugmentation {
  std::size_t anchor_draws = 0;   // oracle calls made for this class
  std::size_t admitted = 0;       // unique synthetic samples merged under this class
  std::vector<double> scores;     // scores of the admitted samples, admission order
};

struct AugmentationReport {
  std::size_t iterations = 0;
  std::map<ClassLabel, ClassAugmentation> per_class;
  std::vector<ClassLabel> zero_augmentation;
  std::vector<std::string> warnings;
};

struct TRainResult {
  DatasetManifest manifest;
  AugmentationReport report;
};

// Similarity-mapped augmentation. Each iteration draws a real training anchor
// uniformly, then runs the oracle for the anchor's class with a per-iteration
// seed. Admitted samples are relabelled to the anchor class, tagged synthetic
// and train, and appended after the real samples in admission order. A sample
// admitted again under the same class is skipped; one already admitted under
// another class stays with the first class and a warning is recorded.
//
// Randomness: rng = Pcg32(cfg.seed); per iteration, anchor = bounded(|train|)
// then oracle seed = rng.next_u64().
TRainResult t_rain(const DatasetManifest& real, const DatasetManifest& synthetic,
                   const EmbeddingStore& store, const OracleConfig& cfg,
                   std::optional<std::size_t> iterations = std::nullopt);

// JSON report: iterations, per-class counts, score quantiles, zero-augmentation
// classes and warnings.
std::string augmentation_report_json(const AugmentationReport& report);

}  // namespace shiftbench
