#include "shiftbench/trainmap.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "shiftbench/errors.hpp"
#include "shiftbench/rng.hpp"

namespace shiftbench {

void validate(const OracleConfig& cfg) {
  if (cfg.eta == 0) throw ValidationError("eta must be positive");
  if (cfg.beta == 0) throw ValidationError("beta must be positive");
  if (cfg.beta > cfg.eta) {
    throw ValidationError("beta (" + std::to_string(cfg.beta) + ") must not exceed eta (" +
                          std::to_string(cfg.eta) + ")");
  }
  if (cfg.dims == 0) throw ValidationError("dims must be positive");
}

bool ranks_before(const ScoredSample& a, const ScoredSample& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.sample.id < b.sample.id;
}

OracleScorer::OracleScorer(const DatasetManifest& synthetic, const EmbeddingStore& store,
                           std::size_t dims)
    : synthetic_(&synthetic), store_(&store), dims_(dims) {
  vectors_.reserve(synthetic.samples.size());
  for (const auto& s : synthetic.samples) {
    std::optional<EmbeddingVector> vec;
    if (is_scorable(s, store)) {
      try {
        vec = class_vector(s, store, dims);
        if (vec->norm() == 0.0) vec.reset();
      } catch (const UndefinedSimilarityError&) {
        vec.reset();
      }
    }
    if (vec) ++scorable_;
    vectors_.push_back(std::move(vec));
  }
}

double OracleScorer::score(std::size_t index, const ClassLabel& anchor) {
  const auto& vec = vectors_.at(index);
  if (!vec) throw UnscorableSampleError("sample \"" + sample(index).id + "\" is not scorable");
  auto it = anchors_.find(anchor);
  if (it == anchors_.end()) {
    it = anchors_.emplace(anchor, anchor_vector(anchor, *store_, dims_)).first;
  }
  return cosine_similarity(*vec, it->second);
}

AugmentationSet oracle(const ClassLabel& anchor_class, OracleScorer& scorer,
                       const OracleConfig& cfg) {
  validate(cfg);
  if (scorer.scorable_count() == 0) {
    throw EmptyOracleError("synthetic set has no scorable samples");
  }
  Pcg32 rng(cfg.seed);
  const std::size_t scan = std::min(cfg.eta, scorer.size());
  const auto picks = sample_without_replacement(scorer.size(), scan, rng);

  AugmentationSet out{.source_class = anchor_class, .members = {}};
  out.members.reserve(picks.size());
  for (auto idx : picks) {
    if (!scorer.scorable(idx)) continue;
    out.members.push_back({scorer.sample(idx), scorer.score(idx, anchor_class)});
  }
  std::sort(out.members.begin(), out.members.end(), ranks_before);
  if (out.members.size() > cfg.beta) {
    out.members.erase(out.members.begin() + static_cast<std::ptrdiff_t>(cfg.beta), out.members.end());
  }
  return out;
}

AugmentationSet oracle(const ClassLabel& anchor_class, const DatasetManifest& synthetic,
                       const EmbeddingStore& store, const OracleConfig& cfg) {
  validate(cfg);
  OracleScorer scorer(synthetic, store, cfg.dims);
  return oracle(anchor_class, scorer, cfg);
}

TRainResult t_rain(const DatasetManifest& real, const DatasetManifest& synthetic,
                   const EmbeddingStore& store, const OracleConfig& cfg,
                   std::optional<std::size_t> iterations) {
  validate(cfg);
  std::vector<std::size_t> train;
  std::unordered_set<std::string> real_ids;
  for (std::size_t i = 0; i < real.samples.size(); ++i) {
    real_ids.insert(real.samples[i].id);
    if (real.samples[i].split == Split::train) train.push_back(i);
  }
  if (train.empty()) throw ValidationError("real manifest has no training samples");
  for (const auto& s : synthetic.samples) {
    if (real_ids.contains(s.id)) {
      throw ValidationError("synthetic sample id \"" + s.id + "\" collides with a real sample");
    }
  }
  if (iterations && *iterations == 0) throw ValidationError("iterations must be positive");

  TRainResult result{.manifest = real, .report = {}};
  auto& report = result.report;
  report.iterations = iterations.value_or(train.size());
  for (const auto& cls : real.classes) report.per_class.emplace(cls, ClassAugmentation{});

  OracleScorer scorer(synthetic, store, cfg.dims);
  if (scorer.scorable_count() == 0) {
    report.warnings.push_back("synthetic set has no scorable samples; nothing was added");
    report.zero_augmentation.assign(real.classes.begin(), real.classes.end());
    return result;
  }

  std::unordered_map<std::string, ClassLabel> admitted_class;
  std::set<std::pair<std::string, std::string>> conflicts;
  Pcg32 rng(cfg.seed);
  for (std::size_t it = 0; it < report.iterations; ++it) {
    const auto& anchor = real.samples[train[rng.bounded(train.size())]];
    OracleConfig call = cfg;
    call.seed = rng.next_u64();
    const auto phi = oracle(anchor.cls, scorer, call);

    auto& stats = report.per_class.at(anchor.cls);
    ++stats.anchor_draws;
    for (const auto& member : phi.members) {
      auto [pos, inserted] = admitted_class.try_emplace(member.sample.id, anchor.cls);
      if (!inserted) {
        if (pos->second != anchor.cls && conflicts.emplace(member.sample.id, anchor.cls.name()).second) {
          report.warnings.push_back("synthetic sample \"" + member.sample.id +
                                    "\" already admitted under \"" + pos->second.name() +
                                    "\"; not relabelled to \"" + anchor.cls.name() + "\"");
        }
        continue;
      }
      Sample s = member.sample;
      s.cls = anchor.cls;
      s.source = Source::synthetic;
      s.split = Split::train;
      result.manifest.samples.push_back(std::move(s));
      ++stats.admitted;
      stats.scores.push_back(member.score);
    }
  }

  for (const auto& [cls, stats] : report.per_class) {
    if (stats.admitted == 0) report.zero_augmentation.push_back(cls);
  }
  validate(result.manifest);
  return result;
}

namespace {

// Linear interpolation between order statistics at position q * (n - 1).
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

std::string augmentation_report_json(const AugmentationReport& report) {
  nlohmann::ordered_json j;
  j["iterations"] = report.iterations;
  auto classes = nlohmann::ordered_json::object();
  for (const auto& [cls, stats] : report.per_class) {
    nlohmann::ordered_json c;
    c["anchor_draws"] = stats.anchor_draws;
    c["admitted"] = stats.admitted;
    if (stats.scores.empty()) {
      c["score_quantiles"] = nullptr;
    } else {
      auto sorted = stats.scores;
      std::sort(sorted.begin(), sorted.end());
      nlohmann::ordered_json q;
      q["min"] = sorted.front();
      q["q25"] = quantile(sorted, 0.25);
      q["median"] = quantile(sorted, 0.5);
      q["q75"] = quantile(sorted, 0.75);
      q["max"] = sorted.back();
      c["score_quantiles"] = std::move(q);
    }
    classes[cls.name()] = std::move(c);
  }
  j["classes"] = std::move(classes);
  auto zero = nlohmann::ordered_json::array();
  for (const auto& cls : report.zero_augmentation) zero.push_back(cls.name());
  j["zero_augmentation"] = std::move(zero);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace shiftbench
