// Python bindings. Manifests and scenarios are opaque handles; everything else
// crosses the boundary as plain lists, dicts and JSON strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "shiftbench/errors.hpp"
#include "shiftbench/harness.hpp"
#include "shiftbench/manifest.hpp"
#include "shiftbench/metrics.hpp"
#include "shiftbench/shift.hpp"
#include "shiftbench/simmap.hpp"
#include "shiftbench/trainmap.hpp"

namespace py = pybind11;
namespace sb = shiftbench;

namespace {

using Counts = std::map<std::string, std::uint64_t>;

Counts to_counts(const sb::LabelDistribution& d) {
  Counts out;
  for (const auto& [cls, n] : d.counts) out.emplace(cls.name(), n);
  return out;
}

sb::LabelDistribution from_counts(const Counts& counts) {
  sb::LabelDistribution d;
  for (const auto& [name, n] : counts) d.counts.emplace(sb::ClassLabel(name), n);
  return d;
}

std::vector<sb::ClassLabel> labels(const std::vector<std::string>& names) {
  std::vector<sb::ClassLabel> out;
  out.reserve(names.size());
  for (const auto& n : names) out.emplace_back(n);
  return out;
}

py::dict sample_dict(const sb::Sample& s) {
  py::dict d;
  d["id"] = s.id;
  d["class"] = s.cls.name();
  d["split"] = std::string(sb::to_string(s.split));
  d["source"] = std::string(sb::to_string(s.source));
  if (s.prompt_keywords) d["prompt_keywords"] = *s.prompt_keywords;
  if (s.embedding_ref) d["embedding_ref"] = *s.embedding_ref;
  return d;
}

sb::EmbeddingStore store_for(const std::optional<std::filesystem::path>& embeddings, std::size_t dims) {
  return embeddings ? sb::load_embeddings(*embeddings, dims) : sb::EmbeddingStore(dims);
}

py::dict report_dict(const sb::ClassificationReport& r) {
  py::dict per_class;
  for (const auto& [cls, s] : r.per_class) {
    py::dict c;
    c["precision"] = s.precision;
    c["recall"] = s.recall;
    c["f1"] = s.f1;
    per_class[py::str(cls.name())] = c;
  }
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["macro_precision"] = r.macro_precision;
  d["macro_recall"] = r.macro_recall;
  d["macro_f1"] = r.macro_f1;
  d["total"] = r.total;
  d["per_class"] = per_class;
  return d;
}

// (image_id, class, x1, y1, x2, y2[, confidence])
using BoxTuple = std::tuple<std::string, std::string, double, double, double, double>;
using DetTuple = std::tuple<std::string, std::string, double, double, double, double, double>;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Label-shift benchmarking and similarity-based training augmentation.";

  auto base = py::register_exception<sb::Error>(m, "ShiftbenchError");
  auto validation = py::register_exception<sb::ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<sb::IoError>(m, "IoError", base.ptr());
  py::register_exception<sb::CoverageError>(m, "CoverageError", base.ptr());
  (void)validation;

  py::class_<sb::DatasetManifest>(m, "Manifest")
      .def_readonly("name", &sb::DatasetManifest::name)
      .def_property_readonly("classes",
                             [](const sb::DatasetManifest& d) {
                               std::vector<std::string> out;
                               for (const auto& c : d.classes) out.push_back(c.name());
                               return out;
                             })
      .def_property_readonly("samples",
                             [](const sb::DatasetManifest& d) {
                               py::list out;
                               for (const auto& s : d.samples) out.append(sample_dict(s));
                               return out;
                             })
      .def("__len__", [](const sb::DatasetManifest& d) { return d.samples.size(); })
      .def("to_jsonl", &sb::serialize_manifest)
      .def("__eq__", [](const sb::DatasetManifest& a, const sb::DatasetManifest& b) { return a == b; });

  m.def("load_manifest", &sb::load_manifest, py::arg("path"));
  m.def("parse_manifest", &sb::parse_manifest, py::arg("text"), py::arg("name") = "");
  m.def("save_manifest", &sb::save_manifest, py::arg("manifest"), py::arg("path"));
  m.def(
      "label_distribution",
      [](const sb::DatasetManifest& d, const std::string& split) {
        return to_counts(sb::label_distribution(d, sb::parse_split(split)));
      },
      py::arg("manifest"), py::arg("split") = "test");

  py::class_<sb::ShiftScenario>(m, "ShiftScenario")
      .def_readonly("id", &sb::ShiftScenario::id)
      .def_property_readonly("name", [](const sb::ShiftScenario& s) { return std::string(sb::to_string(s.name)); })
      .def_readonly("boost_factor", &sb::ShiftScenario::boost_factor)
      .def_property_readonly("a_range", [](const sb::ShiftScenario& s) { return std::pair(s.a_range.lo, s.a_range.hi); })
      .def_property_readonly("b_range", [](const sb::ShiftScenario& s) { return std::pair(s.b_range.lo, s.b_range.hi); })
      .def("to_json", &sb::serialize_scenario)
      .def("__repr__", [](const sb::ShiftScenario& s) { return "ShiftScenario(" + sb::serialize_scenario(s) + ")"; });

  m.def(
      "make_scenario",
      [](const std::string& name, double boost, std::pair<double, double> a, std::pair<std::int64_t, std::int64_t> b) {
        return sb::make_scenario(sb::parse_shift_name(name), boost, {a.first, a.second}, {b.first, b.second});
      },
      py::arg("name"), py::arg("boost_factor") = 2.0, py::arg("a_range") = std::pair(0.6, 1.0),
      py::arg("b_range") = std::pair<std::int64_t, std::int64_t>(0, 0));
  m.def("standard_scenarios", [] {
    const auto s = sb::standard_scenarios();
    return std::vector<sb::ShiftScenario>(s.begin(), s.end());
  });
  m.def(
      "make_shift",
      [](const sb::ShiftScenario& s, const Counts& base, std::uint64_t seed) {
        return to_counts(sb::make_shift(s, from_counts(base), seed));
      },
      py::arg("scenario"), py::arg("base"), py::arg("seed"));
  m.def(
      "resample",
      [](const sb::DatasetManifest& d, const Counts& target, std::uint64_t seed, bool with_replacement,
         const std::string& split) {
        return sb::resample(d, {from_counts(target), with_replacement, seed}, sb::parse_split(split));
      },
      py::arg("manifest"), py::arg("target"), py::arg("seed"), py::arg("with_replacement") = false,
      py::arg("split") = "test");

  m.def(
      "keyword_embed",
      [](const std::vector<std::string>& tokens, std::size_t dims) {
        const auto v = sb::keyword_embed(tokens, dims);
        return std::vector<double>(v.values().begin(), v.values().end());
      },
      py::arg("tokens"), py::arg("dims") = sb::kDefaultDims);
  m.def(
      "cosine_similarity",
      [](std::vector<double> x, std::vector<double> y) {
        return sb::cosine_similarity(sb::EmbeddingVector(std::move(x)), sb::EmbeddingVector(std::move(y)));
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "oracle",
      [](const std::string& anchor, const sb::DatasetManifest& synthetic, std::size_t eta, std::size_t beta,
         std::size_t dims, std::uint64_t seed, const std::optional<std::filesystem::path>& embeddings) {
        const auto store = store_for(embeddings, dims);
        const auto set = sb::oracle(sb::ClassLabel(anchor), synthetic, store, {eta, beta, dims, seed});
        std::vector<std::pair<std::string, double>> out;
        for (const auto& member : set.members) out.emplace_back(member.sample.id, member.score);
        return out;
      },
      py::arg("anchor"), py::arg("synthetic"), py::arg("eta"), py::arg("beta") = sb::kDefaultBeta,
      py::arg("dims") = sb::kDefaultDims, py::arg("seed") = 0, py::arg("embeddings") = py::none());
  m.def(
      "t_rain",
      [](const sb::DatasetManifest& real, const sb::DatasetManifest& synthetic, std::size_t eta, std::size_t beta,
         std::size_t dims, std::uint64_t seed, std::optional<std::size_t> iterations,
         const std::optional<std::filesystem::path>& embeddings) {
        const auto store = store_for(embeddings, dims);
        auto result = sb::t_rain(real, synthetic, store, {eta, beta, dims, seed}, iterations);
        return std::pair(std::move(result.manifest), sb::augmentation_report_json(result.report));
      },
      py::arg("real"), py::arg("synthetic"), py::arg("eta"), py::arg("beta") = sb::kDefaultBeta,
      py::arg("dims") = sb::kDefaultDims, py::arg("seed") = 0, py::arg("iterations") = py::none(),
      py::arg("embeddings") = py::none());

  m.def(
      "classification_report",
      [](const std::vector<std::string>& truths, const std::vector<std::string>& preds,
         const std::vector<std::string>& classes) {
        const auto t = labels(truths), p = labels(preds), c = labels(classes);
        return report_dict(sb::classification_report(sb::confusion_matrix(t, p, c)));
      },
      py::arg("truths"), py::arg("preds"), py::arg("classes"));
  m.def(
      "average_precision",
      [](const std::vector<DetTuple>& dets, const std::vector<BoxTuple>& gts, const std::string& cls,
         double iou_threshold, const std::string& mode) {
        std::vector<sb::DetectionRecord> d;
        for (const auto& [img, c, x1, y1, x2, y2, conf] : dets) {
          d.push_back({img, sb::ClassLabel(c), {x1, y1, x2, y2}, conf, {}});
        }
        std::vector<sb::GroundTruth> g;
        for (const auto& [img, c, x1, y1, x2, y2] : gts) g.push_back({img, sb::ClassLabel(c), {x1, y1, x2, y2}});
        if (mode != "all-point" && mode != "11-point") throw sb::ValidationError("unknown AP mode: " + mode);
        const auto r = sb::average_precision(d, g, sb::ClassLabel(cls), iou_threshold,
                                             mode == "11-point" ? sb::ApMode::eleven_point : sb::ApMode::all_point);
        return r.defined ? std::optional<double>(r.ap) : std::nullopt;
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("cls"),
      py::arg("iou_threshold") = sb::kDefaultIouThreshold, py::arg("mode") = "all-point");

  m.def(
      "run_suite",
      [](const std::filesystem::path& config, const std::optional<std::filesystem::path>& out_dir) {
        const auto cfg = sb::load_experiment_config(config);
        const auto result = sb::run_shift_suite(cfg);
        if (out_dir) sb::write_suite_outputs(result, *out_dir);
        return sb::grid_to_json(result.grid);
      },
      py::arg("config"), py::arg("out_dir") = py::none());
  m.def(
      "compare_grid",
      [](const std::filesystem::path& grid_path, const std::string& baseline, const std::string& treated) {
        const auto grid = sb::load_grid(grid_path);
        return sb::improvement_json(sb::improvement_summary(sb::slice(grid, baseline), sb::slice(grid, treated)),
                                    baseline, treated);
      },
      py::arg("grid"), py::arg("baseline") = "20", py::arg("treated") = "t-RAIN");
}
