#include "shiftbench/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "shiftbench/errors.hpp"
#include "shiftbench/hash.hpp"
#include "shiftbench/rng.hpp"
#include "shiftbench/simmap.hpp"

namespace shiftbench {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

bool natural_less(std::string_view a, std::string_view b) noexcept {
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (is_digit(a[i]) && is_digit(b[j])) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && is_digit(a[ie])) ++ie;
      while (je < b.size() && is_digit(b[je])) ++je;
      auto da = a.substr(i, ie - i);
      auto db = b.substr(j, je - j);
      while (da.size() > 1 && da.front() == '0') da.remove_prefix(1);
      while (db.size() > 1 && db.front() == '0') db.remove_prefix(1);
      if (da.size() != db.size()) return da.size() < db.size();
      if (da != db) return da < db;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((i < a.size()) != (j < b.size())) return i >= a.size();
  return a < b;
}

bool operator<(const GridKey& a, const GridKey& b) noexcept {
  if (a.split_tag != b.split_tag) return natural_less(a.split_tag, b.split_tag);
  if (a.shift_id != b.shift_id) return a.shift_id < b.shift_id;
  if (a.model_id != b.model_id) return natural_less(a.model_id, b.model_id);
  return false;
}

fs::path ExperimentConfig::resolve(const fs::path& p) const {
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

namespace {

std::string expand_template(std::string pattern, std::string_view key, std::string_view value) {
  const std::string needle = "{" + std::string(key) + "}";
  for (auto pos = pattern.find(needle); pos != std::string::npos;
       pos = pattern.find(needle, pos + value.size())) {
    pattern.replace(pos, needle.size(), value);
  }
  return pattern;
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("experiment config must be a JSON object");
  static const std::set<std::string> known = {
      "real_manifest", "synthetic_manifest", "embeddings", "oracle",     "iterations",
      "scenarios",     "splits",             "models",     "predictions", "prediction_template",
      "shift_split",   "with_replacement",   "output_dir", "seed",        "compare"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("unknown config field \"" + key + "\"");
  }

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  if (!j.contains("real_manifest")) throw ValidationError("config needs \"real_manifest\"");
  cfg.real_manifest = j.at("real_manifest").get<std::string>();
  if (j.contains("synthetic_manifest")) {
    cfg.synthetic_manifest = fs::path(j.at("synthetic_manifest").get<std::string>());
  }
  if (j.contains("embeddings")) cfg.embeddings = fs::path(j.at("embeddings").get<std::string>());
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    cfg.oracle.eta = o.value("eta", cfg.oracle.eta);
    cfg.oracle.beta = o.value("beta", cfg.oracle.beta);
    cfg.oracle.dims = o.value("dims", cfg.oracle.dims);
  }
  if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<std::size_t>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.oracle.seed = cfg.seed;

  if (j.contains("scenarios")) {
    for (const auto& s : j.at("scenarios")) {
      cfg.scenarios.push_back(s.is_string() ? make_scenario(parse_shift_name(s.get<std::string>()))
                                            : parse_scenario(s.dump()));
    }
  } else {
    const auto std5 = standard_scenarios();
    cfg.scenarios.assign(std5.begin(), std5.end());
  }
  std::set<int> ids;
  for (const auto& s : cfg.scenarios) {
    if (!ids.insert(s.id).second) {
      throw ValidationError("scenario id " + std::to_string(s.id) + " listed twice");
    }
  }

  cfg.split_tags = j.value("splits", std::vector<std::string>{});
  cfg.models = j.value("models", std::vector<std::string>{});
  if (cfg.split_tags.empty()) throw ValidationError("config needs a non-empty \"splits\" list");
  if (cfg.models.empty()) throw ValidationError("config needs a non-empty \"models\" list");

  if (j.contains("predictions") == j.contains("prediction_template")) {
    throw ValidationError("config needs exactly one of \"predictions\" or \"prediction_template\"");
  }
  if (j.contains("prediction_template")) {
    const auto pattern = j.at("prediction_template").get<std::string>();
    for (const auto& tag : cfg.split_tags) {
      for (const auto& model : cfg.models) {
        for (const auto& s : cfg.scenarios) {
          auto p = expand_template(pattern, "split", tag);
          p = expand_template(p, "model", model);
          p = expand_template(p, "shift", std::to_string(s.id));
          cfg.predictions[tag][model][s.id] = p;
        }
      }
    }
  } else {
    for (const auto& [tag, models] : j.at("predictions").items()) {
      for (const auto& [model, shifts] : models.items()) {
        for (const auto& [shift, path] : shifts.items()) {
          cfg.predictions[tag][model][std::stoi(shift)] = path.get<std::string>();
        }
      }
    }
  }

  if (j.contains("shift_split")) cfg.shift_split = parse_split(j.at("shift_split").get<std::string>());
  cfg.with_replacement = j.value("with_replacement", true);
  cfg.output_dir = j.value("output_dir", std::string("suite_out"));
  if (j.contains("compare")) {
    const auto& c = j.at("compare");
    cfg.compare = std::make_pair(c.at("baseline").get<std::string>(),
                                 c.at("treated").get<std::string>());
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
  try {
    return config_from_json(json::parse(json_text), base_dir);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad experiment config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_text_file(path), path.parent_path());
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["real_manifest"] = cfg.real_manifest.generic_string();
  if (cfg.synthetic_manifest) j["synthetic_manifest"] = cfg.synthetic_manifest->generic_string();
  if (cfg.embeddings) j["embeddings"] = cfg.embeddings->generic_string();
  j["oracle"] = {{"eta", cfg.oracle.eta}, {"beta", cfg.oracle.beta}, {"dims", cfg.oracle.dims}};
  if (cfg.iterations) j["iterations"] = *cfg.iterations;
  auto scenarios = ordered_json::array();
  for (const auto& s : cfg.scenarios) scenarios.push_back(ordered_json::parse(serialize_scenario(s)));
  j["scenarios"] = std::move(scenarios);
  j["splits"] = cfg.split_tags;
  j["models"] = cfg.models;
  ordered_json preds = ordered_json::object();
  for (const auto& [tag, models] : cfg.predictions) {
    for (const auto& [model, shifts] : models) {
      for (const auto& [shift, path] : shifts) {
        preds[tag][model][std::to_string(shift)] = path.generic_string();
      }
    }
  }
  j["predictions"] = std::move(preds);
  j["shift_split"] = to_string(cfg.shift_split);
  j["with_replacement"] = cfg.with_replacement;
  j["seed"] = cfg.seed;
  if (cfg.compare) j["compare"] = {{"baseline", cfg.compare->first}, {"treated", cfg.compare->second}};
  return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(experiment_config_json(cfg))));
  return buf;
}

void ResultsGrid::insert(GridKey key, GridRow row) {
  if (rows_.contains(key)) {
    throw ValidationError("duplicate grid row (" + key.split_tag + ", " +
                          std::to_string(key.shift_id) + ", " + key.model_id + ")");
  }
  rows_.emplace(std::move(key), std::move(row));
}

const GridRow& ResultsGrid::at(const GridKey& key) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) {
    throw ValidationError("no grid row (" + key.split_tag + ", " + std::to_string(key.shift_id) +
                          ", " + key.model_id + ")");
  }
  return it->second;
}

std::vector<std::string> ResultsGrid::split_tags() const {
  std::vector<std::string> out;
  for (const auto& [key, row] : rows_) {
    if (out.empty() || out.back() != key.split_tag) out.push_back(key.split_tag);
  }
  return out;
}

std::vector<int> ResultsGrid::shift_ids() const {
  std::set<int> ids;
  for (const auto& [key, row] : rows_) ids.insert(key.shift_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> ResultsGrid::model_ids() const {
  std::vector<std::string> out;
  for (const auto& [key, row] : rows_) {
    if (std::find(out.begin(), out.end(), key.model_id) == out.end()) out.push_back(key.model_id);
  }
  std::sort(out.begin(), out.end(),
            [](const std::string& a, const std::string& b) { return natural_less(a, b); });
  return out;
}

SuiteResult run_shift_suite(const ExperimentConfig& cfg) {
  const DatasetManifest real = load_manifest(cfg.resolve(cfg.real_manifest));
  const LabelDistribution base = label_distribution(real, cfg.shift_split);
  const std::vector<ClassLabel> classes(real.classes.begin(), real.classes.end());

  SuiteResult result;
  result.compare = cfg.compare;
  result.grid.metadata = {cfg.seed, config_hash(cfg)};

  std::map<fs::path, std::map<std::string, ClassLabel>> prediction_cache;
  auto predictions_for = [&](const fs::path& p) -> const std::map<std::string, ClassLabel>& {
    auto it = prediction_cache.find(p);
    if (it == prediction_cache.end()) it = prediction_cache.emplace(p, load_predictions(p)).first;
    return it->second;
  };

  for (const auto& scenario : cfg.scenarios) {
    const auto target = make_shift(scenario, base, derive_seed(cfg.seed, 2ULL * scenario.id));
    const ResamplePlan plan{target, cfg.with_replacement,
                            derive_seed(cfg.seed, 2ULL * scenario.id + 1)};
    auto shifted = resample(real, plan, cfg.shift_split);

    std::vector<const Sample*> evaluated;
    for (const auto& s : shifted.samples) {
      if (s.split == Split::test) evaluated.push_back(&s);
    }

    for (const auto& tag : cfg.split_tags) {
      for (const auto& model : cfg.models) {
        const auto* path = [&]() -> const fs::path* {
          auto t = cfg.predictions.find(tag);
          if (t == cfg.predictions.end()) return nullptr;
          auto m = t->second.find(model);
          if (m == t->second.end()) return nullptr;
          auto s = m->second.find(scenario.id);
          return s == m->second.end() ? nullptr : &s->second;
        }();
        if (!path) {
          throw ValidationError("no prediction file for split " + tag + ", model " + model +
                                ", shift " + std::to_string(scenario.id));
        }
        const auto resolved = cfg.resolve(*path);
        const auto& preds = predictions_for(resolved);

        std::vector<ClassLabel> truths;
        std::vector<ClassLabel> guesses;
        std::vector<std::string> missing;
        for (const auto* s : evaluated) {
          auto it = preds.find(std::string(base_sample_id(s->id)));
          if (it == preds.end()) {
            missing.emplace_back(base_sample_id(s->id));
            continue;
          }
          truths.push_back(s->cls);
          guesses.push_back(it->second);
        }
        if (!missing.empty()) {
          std::sort(missing.begin(), missing.end());
          missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
          throw CoverageError(std::move(missing), resolved.string());
        }
        const auto report = classification_report(confusion_matrix(truths, guesses, classes));
        result.grid.insert({tag, scenario.id, model}, {report.accuracy, report});
      }
    }
    result.targets.emplace(scenario.id, target);
    result.shifted.emplace(scenario.id, std::move(shifted));
  }

  if (cfg.synthetic_manifest) {
    const auto synthetic = load_manifest(cfg.resolve(*cfg.synthetic_manifest));
    const auto store = cfg.embeddings ? load_embeddings(cfg.resolve(*cfg.embeddings), cfg.oracle.dims)
                                      : EmbeddingStore(cfg.oracle.dims);
    result.augmentation = t_rain(real, synthetic, store, cfg.oracle, cfg.iterations);
  }
  return result;
}

void write_suite_outputs(const SuiteResult& result, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());

  write_text_file_atomic(dir / "grid.json", grid_to_json(result.grid));
  write_text_file_atomic(dir / "grid.csv", grid_to_csv(result.grid));
  write_text_file_atomic(dir / "grid.md", grid_to_markdown(result.grid));
  write_text_file_atomic(dir / "plot.csv", plot_data(result.grid, result.compare));

  ordered_json targets = ordered_json::object();
  for (const auto& [id, dist] : result.targets) {
    ordered_json counts = ordered_json::object();
    for (const auto& [cls, n] : dist.counts) counts[cls.name()] = n;
    targets[std::to_string(id)] = {{"name", to_string(shift_name_for_id(id))},
                                   {"counts", std::move(counts)}};
  }
  write_text_file_atomic(dir / "targets.json", targets.dump(2) + "\n");

  for (const auto& [id, manifest] : result.shifted) {
    save_manifest(manifest, dir / ("shift_" + std::to_string(id) + ".jsonl"));
  }
  if (result.compare) {
    const auto deltas = improvement_summary(slice(result.grid, result.compare->first),
                                            slice(result.grid, result.compare->second));
    write_text_file_atomic(dir / "compare.json",
                           improvement_json(deltas, result.compare->first, result.compare->second));
  }
  if (result.augmentation) {
    save_manifest(result.augmentation->manifest, dir / "augmented.jsonl");
    write_text_file_atomic(dir / "augmentation_report.json",
                           augmentation_report_json(result.augmentation->report));
  }
}

}  // namespace shiftbench
