// shiftbench: label-shift simulation, similarity-mapped augmentation and
// robustness metrics from the command line.
//
// Exit codes: 0 success, 2 validation error, 3 I/O error, 4 coverage error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shiftbench/errors.hpp"
#include "shiftbench/harness.hpp"
#include "shiftbench/manifest.hpp"
#include "shiftbench/rng.hpp"
#include "shiftbench/metrics.hpp"
#include "shiftbench/shift.hpp"
#include "shiftbench/simmap.hpp"
#include "shiftbench/trainmap.hpp"

namespace sb = shiftbench;
using nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitCoverage = 4;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SHIFTBENCH_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw sb::ValidationError(std::string("SHIFTBENCH_SEED is not an unsigned integer: ") + env);
  }
  return fallback;
}

ordered_json distribution_json(const sb::LabelDistribution& d) {
  ordered_json j = ordered_json::object();
  for (const auto& [cls, n] : d.counts) j[cls.name()] = n;
  return j;
}

ordered_json report_json(const sb::ClassificationReport& rep, const sb::ConfusionMatrix& cm) {
  ordered_json j;
  j["total"] = rep.total;
  j["accuracy"] = rep.accuracy;
  j["macro_precision"] = rep.macro_precision;
  j["macro_recall"] = rep.macro_recall;
  j["macro_f1"] = rep.macro_f1;
  ordered_json per = ordered_json::object();
  for (const auto& [cls, s] : rep.per_class) {
    per[cls.name()] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  }
  j["per_class"] = std::move(per);
  ordered_json labels = ordered_json::array();
  for (const auto& c : cm.classes) labels.push_back(c.name());
  j["confusion"] = {{"classes", std::move(labels)}, {"cells", cm.cells}};
  return j;
}

void emit(const ordered_json& j, const std::string& out_path) {
  const auto text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    sb::write_text_file_atomic(out_path, text);
  }
}

// --- manifest stats -------------------------------------------------------

struct StatsArgs {
  std::string manifest;
};

void run_manifest_stats(const StatsArgs& a) {
  const auto m = sb::load_manifest(a.manifest);
  ordered_json j;
  j["name"] = m.name;
  j["samples"] = m.samples.size();
  ordered_json classes = ordered_json::array();
  for (const auto& c : m.classes) classes.push_back(c.name());
  j["classes"] = std::move(classes);
  j["train"] = distribution_json(sb::label_distribution(m, sb::Split::train));
  j["test"] = distribution_json(sb::label_distribution(m, sb::Split::test));
  std::size_t synthetic = 0;
  std::size_t boxes = 0;
  for (const auto& s : m.samples) {
    if (s.source == sb::Source::synthetic) ++synthetic;
    if (s.boxes) boxes += s.boxes->size();
  }
  j["synthetic"] = synthetic;
  j["boxes"] = boxes;
  emit(j, "");
}

// --- shift simulate -------------------------------------------------------

struct SimulateArgs {
  std::string manifest;
  std::string scenario_file;
  std::string name;
  std::optional<double> boost;
  std::vector<double> a_range;
  std::vector<std::int64_t> b_range;
  std::string split = "test";
  bool with_replacement = false;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string target_out;
};

void run_shift_simulate(const SimulateArgs& a) {
  const auto m = sb::load_manifest(a.manifest);
  sb::ShiftScenario scenario;
  if (!a.scenario_file.empty()) {
    scenario = sb::load_scenario(a.scenario_file);
  } else if (!a.name.empty()) {
    scenario = sb::make_scenario(sb::parse_shift_name(a.name));
  } else {
    throw sb::ValidationError("give --scenario FILE or --name NAME");
  }
  if (a.boost) scenario.boost_factor = *a.boost;
  if (a.a_range.size() == 2) scenario.a_range = {a.a_range[0], a.a_range[1]};
  if (a.b_range.size() == 2) scenario.b_range = {a.b_range[0], a.b_range[1]};
  sb::validate(scenario);

  const auto seed = resolve_seed(a.seed, 0);
  const auto split = sb::parse_split(a.split);
  const auto base = sb::label_distribution(m, split);
  const auto target = sb::make_shift(scenario, base, sb::derive_seed(seed, 2ULL * scenario.id));
  const sb::ResamplePlan plan{target, a.with_replacement, sb::derive_seed(seed, 2ULL * scenario.id + 1)};

  ordered_json j;
  j["scenario"] = ordered_json::parse(sb::serialize_scenario(scenario));
  j["seed"] = seed;
  j["split"] = a.split;
  j["base"] = distribution_json(base);
  j["target"] = distribution_json(target);
  j["divergence"] = sb::shift_divergence(base, target);
  if (!a.out.empty()) {
    const auto shifted = sb::resample(m, plan, split);
    sb::save_manifest(shifted, a.out);
    j["written"] = a.out;
  }
  emit(j, a.target_out);
}

// --- trainmap augment -----------------------------------------------------

struct AugmentArgs {
  std::string real;
  std::string synthetic;
  std::string embeddings;
  std::optional<std::size_t> eta;
  std::size_t beta = sb::kDefaultBeta;
  std::size_t dims = sb::kDefaultDims;
  std::optional<std::size_t> iterations;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string report;
};

void run_trainmap_augment(const AugmentArgs& a) {
  const auto real = sb::load_manifest(a.real);
  const auto synthetic = sb::load_manifest(a.synthetic);
  const auto store = a.embeddings.empty() ? sb::EmbeddingStore(a.dims)
                                          : sb::load_embeddings(a.embeddings, a.dims);
  sb::OracleConfig cfg;
  cfg.beta = a.beta;
  cfg.eta = a.eta.value_or(std::max(synthetic.samples.size(), a.beta));
  cfg.dims = store.size() > 0 ? store.dims() : a.dims;
  cfg.seed = resolve_seed(a.seed, 0);

  const auto result = sb::t_rain(real, synthetic, store, cfg, a.iterations);
  sb::save_manifest(result.manifest, a.out);
  const auto report = sb::augmentation_report_json(result.report);
  if (a.report.empty()) {
    std::cout << report;
  } else {
    sb::write_text_file_atomic(a.report, report);
  }
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << "\n";
}

// --- eval classify / detect -----------------------------------------------

struct ClassifyArgs {
  std::string manifest;
  std::string predictions;
  std::string split = "test";
  std::string out;
};

void run_eval_classify(const ClassifyArgs& a) {
  const auto m = sb::load_manifest(a.manifest);
  const auto preds = sb::load_predictions(a.predictions);
  const auto split = sb::parse_split(a.split);
  std::vector<sb::ClassLabel> truths;
  std::vector<sb::ClassLabel> guesses;
  std::vector<std::string> missing;
  for (const auto& s : m.samples) {
    if (s.split != split) continue;
    auto it = preds.find(std::string(sb::base_sample_id(s.id)));
    if (it == preds.end()) {
      missing.push_back(s.id);
      continue;
    }
    truths.push_back(s.cls);
    guesses.push_back(it->second);
  }
  if (!missing.empty()) throw sb::CoverageError(std::move(missing), a.predictions);
  const std::vector<sb::ClassLabel> classes(m.classes.begin(), m.classes.end());
  const auto cm = sb::confusion_matrix(truths, guesses, classes);
  emit(report_json(sb::classification_report(cm), cm), a.out);
}

struct DetectArgs {
  std::string manifest;
  std::string detections;
  std::string split;
  double iou = sb::kDefaultIouThreshold;
  std::string mode = "all-point";
  std::string out;
};

void run_eval_detect(const DetectArgs& a) {
  const auto m = sb::load_manifest(a.manifest);
  const auto dets = sb::load_detections(a.detections);
  std::optional<sb::Split> split;
  if (!a.split.empty()) split = sb::parse_split(a.split);
  const auto gts = sb::ground_truth_from_manifest(m, split);
  sb::ApMode mode;
  if (a.mode == "all-point") {
    mode = sb::ApMode::all_point;
  } else if (a.mode == "11-point") {
    mode = sb::ApMode::eleven_point;
  } else {
    throw sb::ValidationError("--mode must be all-point or 11-point");
  }

  std::set<sb::ClassLabel> classes;
  for (const auto& g : gts) classes.insert(g.cls);
  for (const auto& d : dets) classes.insert(d.cls);

  std::vector<sb::APResult> results;
  ordered_json per = ordered_json::object();
  for (const auto& cls : classes) {
    auto r = sb::average_precision(dets, gts, cls, a.iou, mode);
    ordered_json c;
    c["ap"] = r.defined ? ordered_json(r.ap) : ordered_json(nullptr);
    c["tp"] = r.tp;
    c["fp"] = r.fp;
    c["num_gt"] = r.num_gt;
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    per[cls.name()] = std::move(c);
    results.push_back(std::move(r));
  }
  ordered_json j;
  j["iou_threshold"] = a.iou;
  j["mode"] = a.mode;
  j["per_class"] = std::move(per);
  try {
    j["map"] = sb::mean_ap(results);
  } catch (const sb::ValidationError&) {
    j["map"] = nullptr;
  }
  const auto top4 = sb::top4_classes();
  try {
    j["t4_ap"] = sb::mean_ap(results, std::span<const sb::ClassLabel>(top4));
  } catch (const sb::ValidationError&) {
    j["t4_ap"] = nullptr;
  }
  emit(j, a.out);
}

// --- suite ------------------------------------------------------------------

struct SuiteRunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void run_suite_run(const SuiteRunArgs& a) {
  auto cfg = sb::load_experiment_config(a.config);
  cfg.seed = resolve_seed(a.seed, cfg.seed);
  cfg.oracle.seed = cfg.seed;
  const auto out_dir = a.out.empty() ? cfg.resolve(cfg.output_dir) : std::filesystem::path(a.out);

  const auto result = sb::run_shift_suite(cfg);
  sb::write_suite_outputs(result, out_dir);

  ordered_json meta;
  meta["seed"] = cfg.seed;
  meta["config_hash"] = result.grid.metadata.config_hash;
  meta["config"] = ordered_json::parse(sb::experiment_config_json(cfg));
  meta["rows"] = result.grid.size();
  meta["created_at"] = utc_timestamp();
  sb::write_text_file_atomic(out_dir / "metadata.json", meta.dump(2) + "\n");
  std::cout << "wrote " << result.grid.size() << " grid rows to " << out_dir.string() << "\n";
}

struct CompareArgs {
  std::string grid;
  std::string baseline = "20";
  std::string treated = "t-RAIN";
  bool json = false;
  std::string out;
};

void run_suite_compare(const CompareArgs& a) {
  const auto grid = sb::load_grid(a.grid);
  const auto deltas = sb::improvement_summary(sb::slice(grid, a.baseline), sb::slice(grid, a.treated));
  const auto text = sb::improvement_json(deltas, a.baseline, a.treated);
  if (!a.out.empty()) sb::write_text_file_atomic(a.out, text);
  if (a.json) {
    std::cout << text;
    return;
  }
  std::cout << "mean accuracy delta (" << a.treated << " - " << a.baseline << "), percentage points\n";
  for (const auto& d : deltas) {
    std::cout << "shift " << d.shift_id << " (" << sb::to_string(sb::shift_name_for_id(d.shift_id))
              << "): " << sb::format_number(d.rounded_pp, 1) << "\n";
  }
}

struct EmitArgs {
  std::string grid;
  std::string format = "markdown";
  std::string out;
  std::string plot;
  std::string baseline;
  std::string treated;
};

void run_report_emit(const EmitArgs& a) {
  const auto grid = sb::load_grid(a.grid);
  const auto format = sb::parse_report_format(a.format);
  if (a.out.empty()) {
    switch (format) {
      case sb::ReportFormat::csv: std::cout << sb::grid_to_csv(grid); break;
      case sb::ReportFormat::json: std::cout << sb::grid_to_json(grid); break;
      case sb::ReportFormat::markdown: std::cout << sb::grid_to_markdown(grid); break;
    }
  } else {
    sb::emit_report(grid, format, a.out);
  }
  if (!a.plot.empty()) {
    std::optional<std::pair<std::string, std::string>> tags;
    if (!a.baseline.empty() && !a.treated.empty()) tags = std::make_pair(a.baseline, a.treated);
    sb::write_text_file_atomic(a.plot, sb::plot_data(grid, tags));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-shift robustness benchmarking and similarity-mapped augmentation"};
  app.require_subcommand(1);
  std::function<void()> action;

  auto* manifest = app.add_subcommand("manifest", "Dataset manifest utilities")->require_subcommand(1);
  StatsArgs stats;
  auto* stats_cmd = manifest->add_subcommand("stats", "Per-split class counts of a manifest");
  stats_cmd->add_option("--manifest,manifest", stats.manifest, "JSONL manifest")->required();
  stats_cmd->callback([&] { action = [&] { run_manifest_stats(stats); }; });

  auto* shift = app.add_subcommand("shift", "Label shift simulation")->require_subcommand(1);
  SimulateArgs sim;
  auto* sim_cmd = shift->add_subcommand("simulate", "Build a shifted target distribution and resample");
  sim_cmd->add_option("--manifest", sim.manifest, "JSONL manifest")->required();
  sim_cmd->add_option("--scenario", sim.scenario_file, "Scenario JSON file");
  sim_cmd->add_option("--name", sim.name, "Scenario name: none|rain|fog|snow|dust");
  sim_cmd->add_option("--boost", sim.boost, "Boost factor for the named class");
  sim_cmd->add_option("--a-range", sim.a_range, "Affine multiplier interval")->expected(2)->delimiter(',');
  sim_cmd->add_option("--b-range", sim.b_range, "Affine offset interval")->expected(2)->delimiter(',');
  sim_cmd->add_option("--split", sim.split, "Split to reshape (train|test)");
  sim_cmd->add_flag("--with-replacement", sim.with_replacement, "Allow oversampling");
  sim_cmd->add_option("--seed", sim.seed, "Seed (falls back to SHIFTBENCH_SEED, then 0)");
  sim_cmd->add_option("--out", sim.out, "Write the resampled manifest here");
  sim_cmd->add_option("--target-out", sim.target_out, "Write the JSON summary here");
  sim_cmd->callback([&] { action = [&] { run_shift_simulate(sim); }; });

  auto* trainmap = app.add_subcommand("trainmap", "Similarity-mapped synthetic augmentation")
                       ->require_subcommand(1);
  AugmentArgs aug;
  auto* aug_cmd = trainmap->add_subcommand("augment", "Merge the best-matching synthetic samples");
  aug_cmd->add_option("--real", aug.real, "Real JSONL manifest")->required();
  aug_cmd->add_option("--synthetic", aug.synthetic, "Synthetic JSONL manifest")->required();
  aug_cmd->add_option("--embeddings", aug.embeddings, "Embedding CSV");
  aug_cmd->add_option("--eta", aug.eta, "Synthetic samples scanned per oracle call");
  aug_cmd->add_option("--beta", aug.beta, "Samples kept per oracle call")->capture_default_str();
  aug_cmd->add_option("--dims", aug.dims, "Keyword embedding dimension");
  aug_cmd->add_option("--iterations", aug.iterations, "Anchor draws (default: training-set size)");
  aug_cmd->add_option("--seed", aug.seed, "Seed (falls back to SHIFTBENCH_SEED, then 0)");
  aug_cmd->add_option("--out", aug.out, "Augmented manifest output")->required();
  aug_cmd->add_option("--report", aug.report, "Augmentation report JSON output");
  aug_cmd->callback([&] { action = [&] { run_trainmap_augment(aug); }; });

  auto* eval = app.add_subcommand("eval", "Metrics")->require_subcommand(1);
  ClassifyArgs cls;
  auto* cls_cmd = eval->add_subcommand("classify", "Accuracy, precision, recall and F1");
  cls_cmd->add_option("--manifest", cls.manifest, "JSONL manifest with true labels")->required();
  cls_cmd->add_option("--predictions", cls.predictions, "CSV sample_id,predicted_class")->required();
  cls_cmd->add_option("--split", cls.split, "Split to score (train|test)");
  cls_cmd->add_option("--out", cls.out, "Write the JSON report here");
  cls_cmd->callback([&] { action = [&] { run_eval_classify(cls); }; });

  DetectArgs det;
  auto* det_cmd = eval->add_subcommand("detect", "Per-class AP, mAP and T-4 AP");
  det_cmd->add_option("--manifest", det.manifest, "JSONL manifest with boxes")->required();
  det_cmd->add_option("--detections", det.detections, "CSV image_id,class,x1,y1,x2,y2,confidence")
      ->required();
  det_cmd->add_option("--split", det.split, "Restrict ground truth to a split");
  det_cmd->add_option("--iou", det.iou, "IoU threshold");
  det_cmd->add_option("--mode", det.mode, "all-point|11-point");
  det_cmd->add_option("--out", det.out, "Write the JSON report here");
  det_cmd->callback([&] { action = [&] { run_eval_detect(det); }; });

  auto* suite = app.add_subcommand("suite", "Shift-suite experiments")->require_subcommand(1);
  SuiteRunArgs run;
  auto* run_cmd = suite->add_subcommand("run", "Score every (split, shift, model) cell");
  run_cmd->add_option("--config", run.config, "Experiment config JSON")->required();
  run_cmd->add_option("--seed", run.seed, "Seed override (falls back to SHIFTBENCH_SEED)");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->callback([&] { action = [&] { run_suite_run(run); }; });

  CompareArgs cmp;
  auto* cmp_cmd = suite->add_subcommand("compare", "Mean per-shift accuracy delta between splits");
  cmp_cmd->add_option("--grid", cmp.grid, "Grid JSON or CSV")->required();
  cmp_cmd->add_option("--baseline", cmp.baseline, "Baseline split tag");
  cmp_cmd->add_option("--treated", cmp.treated, "Treated split tag");
  cmp_cmd->add_flag("--json", cmp.json, "Print JSON");
  cmp_cmd->add_option("--out", cmp.out, "Write the JSON summary here");
  cmp_cmd->callback([&] { action = [&] { run_suite_compare(cmp); }; });

  auto* report = app.add_subcommand("report", "Reports")->require_subcommand(1);
  EmitArgs em;
  auto* em_cmd = report->add_subcommand("emit", "Render a results grid");
  em_cmd->add_option("--grid", em.grid, "Grid JSON or CSV")->required();
  em_cmd->add_option("--format", em.format, "csv|json|markdown");
  em_cmd->add_option("--out", em.out, "Output path (stdout when omitted)");
  em_cmd->add_option("--plot", em.plot, "Also write plot series CSV here");
  em_cmd->add_option("--baseline", em.baseline, "Baseline split tag for delta series");
  em_cmd->add_option("--treated", em.treated, "Treated split tag for delta series");
  em_cmd->callback([&] { action = [&] { run_report_emit(em); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (action) action();
    return 0;
  } catch (const sb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case sb::ErrorKind::validation: return kExitValidation;
      case sb::ErrorKind::io: return kExitIo;
      case sb::ErrorKind::coverage: return kExitCoverage;
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
