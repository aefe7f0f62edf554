#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "shiftbench/errors.hpp"
#include "shiftbench/harness.hpp"
#include "text_util.hpp"

namespace shiftbench {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

GridSlice slice(const ResultsGrid& grid, std::string_view split_tag) {
  GridSlice out;
  for (const auto& [key, row] : grid.rows()) {
    if (key.split_tag == split_tag) out.emplace(std::make_pair(key.shift_id, key.model_id), row.accuracy);
  }
  if (out.empty()) throw ValidationError("grid has no rows for split \"" + std::string(split_tag) + "\"");
  return out;
}

double round_to_tenth(double value) noexcept {
  const double r = std::round(value * 10.0) / 10.0;
  return r == 0.0 ? 0.0 : r;
}

std::vector<ShiftDelta> improvement_summary(const GridSlice& baseline, const GridSlice& treated) {
  if (baseline.size() != treated.size() ||
      !std::equal(baseline.begin(), baseline.end(), treated.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw ValidationError("baseline and treated slices cover different (shift, model) keys");
  }
  std::map<int, std::pair<double, std::size_t>> acc;
  auto t = treated.begin();
  for (const auto& [key, base] : baseline) {
    auto& [sum, n] = acc[key.first];
    sum += t->second - base;
    ++n;
    ++t;
  }
  std::vector<ShiftDelta> out;
  for (const auto& [shift, sn] : acc) {
    const double mean_pp = 100.0 * sn.first / static_cast<double>(sn.second);
    out.push_back({shift, mean_pp, round_to_tenth(mean_pp)});
  }
  return out;
}

std::string improvement_json(const std::vector<ShiftDelta>& deltas, std::string_view baseline,
                             std::string_view treated) {
  ordered_json j;
  j["baseline"] = baseline;
  j["treated"] = treated;
  auto arr = ordered_json::array();
  for (const auto& d : deltas) {
    ordered_json row;
    row["shift"] = d.shift_id;
    row["name"] = to_string(shift_name_for_id(d.shift_id));
    row["delta_pp"] = format_number(d.rounded_pp, 1);
    row["delta_pp_raw"] = d.mean_delta_pp;
    arr.push_back(std::move(row));
  }
  j["deltas"] = std::move(arr);
  return j.dump(2) + "\n";
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  if (text == "markdown" || text == "md") return ReportFormat::markdown;
  throw ValidationError("unknown report format \"" + std::string(text) + "\" (csv|json|markdown)");
}

std::string format_number(double value, int max_decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", max_decimals, value);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

namespace {

void require_rows(const ResultsGrid& grid) {
  if (grid.empty()) throw ValidationError("results grid is empty");
}

}  // namespace

std::string grid_to_csv(const ResultsGrid& grid) {
  require_rows(grid);
  std::string out = "split,shift,model,accuracy,macro_precision,macro_recall,macro_f1\n";
  for (const auto& [key, row] : grid.rows()) {
    out += key.split_tag + "," + std::to_string(key.shift_id) + "," + key.model_id + "," +
           detail::shortest(row.accuracy);
    if (row.report) {
      out += "," + detail::shortest(row.report->macro_precision) + "," +
             detail::shortest(row.report->macro_recall) + "," +
             detail::shortest(row.report->macro_f1);
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

std::string grid_to_json(const ResultsGrid& grid) {
  require_rows(grid);
  ordered_json j;
  j["seed"] = grid.metadata.seed;
  j["config_hash"] = grid.metadata.config_hash;
  auto rows = ordered_json::array();
  for (const auto& [key, row] : grid.rows()) {
    ordered_json r;
    r["split"] = key.split_tag;
    r["shift"] = key.shift_id;
    r["model"] = key.model_id;
    r["accuracy"] = row.accuracy;
    if (row.report) {
      const auto& rep = *row.report;
      r["total"] = rep.total;
      r["macro_precision"] = rep.macro_precision;
      r["macro_recall"] = rep.macro_recall;
      r["macro_f1"] = rep.macro_f1;
      ordered_json per = ordered_json::object();
      for (const auto& [cls, s] : rep.per_class) {
        per[cls.name()] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
      }
      r["per_class"] = std::move(per);
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string grid_to_markdown(const ResultsGrid& grid) {
  require_rows(grid);
  const auto models = grid.model_ids();
  std::string out = "| Split | Shift |";
  for (const auto& m : models) out += " " + m + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < models.size(); ++i) out += "---|";
  out += '\n';
  for (const auto& tag : grid.split_tags()) {
    for (int shift : grid.shift_ids()) {
      std::string line = "| " + tag + " | " + std::to_string(shift) + " |";
      bool any = false;
      for (const auto& m : models) {
        auto it = grid.rows().find({tag, shift, m});
        if (it == grid.rows().end()) {
          line += " - |";
        } else {
          line += " " + format_number(100.0 * it->second.accuracy, 2) + " |";
          any = true;
        }
      }
      if (any) out += line + "\n";
    }
  }
  return out;
}

ResultsGrid parse_grid_json(std::string_view json_text) {
  ResultsGrid grid;
  try {
    const auto j = json::parse(json_text);
    grid.metadata.seed = j.value("seed", std::uint64_t{0});
    grid.metadata.config_hash = j.value("config_hash", std::string{});
    for (const auto& r : j.at("rows")) {
      GridRow row{.accuracy = r.at("accuracy").get<double>(), .report = std::nullopt};
      if (r.contains("per_class")) {
        ClassificationReport rep;
        rep.accuracy = row.accuracy;
        rep.total = r.at("total").get<std::uint64_t>();
        rep.macro_precision = r.at("macro_precision").get<double>();
        rep.macro_recall = r.at("macro_recall").get<double>();
        rep.macro_f1 = r.at("macro_f1").get<double>();
        for (const auto& [name, s] : r.at("per_class").items()) {
          rep.per_class.emplace(ClassLabel(name),
                                ClassScores{s.at("precision").get<double>(),
                                            s.at("recall").get<double>(), s.at("f1").get<double>()});
        }
        row.report = std::move(rep);
      }
      grid.insert({r.at("split").get<std::string>(), r.at("shift").get<int>(),
                   r.at("model").get<std::string>()},
                  std::move(row));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad grid JSON: ") + e.what());
  }
  return grid;
}

ResultsGrid parse_grid_csv(std::string_view csv) {
  const auto lines = detail::split_lines(csv);
  if (lines.empty() ||
      detail::trim(lines.front().text) !=
          "split,shift,model,accuracy,macro_precision,macro_recall,macro_f1") {
    throw ParseError(lines.empty() ? 1 : lines.front().number, "unexpected grid CSV header");
  }
  ResultsGrid grid;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = detail::split_csv_row(lines[i].text);
    if (cells.size() != 7) throw ParseError(lines[i].number, "expected 7 columns");
    const auto shift = detail::parse_int(cells[1]);
    const auto accuracy = detail::parse_double(cells[3]);
    if (!shift || !accuracy) throw ParseError(lines[i].number, "bad shift or accuracy");
    GridRow row{.accuracy = *accuracy, .report = std::nullopt};
    if (!cells[4].empty()) {
      auto p = detail::parse_double(cells[4]);
      auto r = detail::parse_double(cells[5]);
      auto f = detail::parse_double(cells[6]);
      if (!p || !r || !f) throw ParseError(lines[i].number, "bad macro columns");
      ClassificationReport rep;
      rep.accuracy = *accuracy;
      rep.macro_precision = *p;
      rep.macro_recall = *r;
      rep.macro_f1 = *f;
      row.report = std::move(rep);
    }
    grid.insert({std::string(cells[0]), static_cast<int>(*shift), std::string(cells[2])},
                std::move(row));
  }
  return grid;
}

ResultsGrid load_grid(const fs::path& path) {
  const auto text = read_text_file(path);
  return path.extension() == ".csv" ? parse_grid_csv(text) : parse_grid_json(text);
}

void emit_report(const ResultsGrid& grid, ReportFormat format, const fs::path& path) {
  switch (format) {
    case ReportFormat::csv: write_text_file_atomic(path, grid_to_csv(grid)); break;
    case ReportFormat::json: write_text_file_atomic(path, grid_to_json(grid)); break;
    case ReportFormat::markdown: write_text_file_atomic(path, grid_to_markdown(grid)); break;
  }
}

std::string plot_data(const ResultsGrid& grid,
                      std::optional<std::pair<std::string, std::string>> baseline_treated) {
  require_rows(grid);
  std::string out = "series,x,y\n";
  for (const auto& tag : grid.split_tags()) {
    for (const auto& model : grid.model_ids()) {
      for (int shift : grid.shift_ids()) {
        auto it = grid.rows().find({tag, shift, model});
        if (it == grid.rows().end()) continue;
        out += "acc:" + tag + ":" + model + "," + std::to_string(shift) + "," +
               format_number(100.0 * it->second.accuracy) + "\n";
      }
    }
  }
  if (baseline_treated) {
    const auto& [base_tag, treat_tag] = *baseline_treated;
    const auto base = slice(grid, base_tag);
    const auto treat = slice(grid, treat_tag);
    const std::string name = "delta:" + treat_tag + "-" + base_tag;
    for (const auto& d : improvement_summary(base, treat)) {
      out += name + "," + std::to_string(d.shift_id) + "," + format_number(d.rounded_pp, 1) + "\n";
    }
    for (const auto& model : grid.model_ids()) {
      for (const auto& [key, b] : base) {
        if (key.second != model) continue;
        out += "delta:" + model + "," + std::to_string(key.first) + "," +
               format_number(100.0 * (treat.at(key) - b)) + "\n";
      }
    }
  }
  return out;
}

std::vector<DetectionTableRow> load_detection_table(const fs::path& path) {
  std::vector<DetectionTableRow> rows;
  try {
    const auto j = json::parse(read_text_file(path));
    for (const auto& r : j.at("rows")) {
      DetectionTableRow row;
      row.section = r.value("section", std::string{});
      row.model = r.at("model").get<std::string>();
      row.dataset = r.at("dataset").get<std::string>();
      for (const auto& [cls, v] : r.at("ap").items()) row.class_ap.emplace(ClassLabel(cls), v.get<double>());
      for (const auto& [name, v] : r.at("printed").items()) row.printed.emplace(name, v.get<double>());
      rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": bad detection table: " + e.what());
  }
  return rows;
}

std::vector<AggregateCheck> check_detection_table(const std::vector<DetectionTableRow>& rows,
                                                  double tolerance) {
  const auto top4 = top4_classes();
  std::vector<AggregateCheck> checks;
  for (const auto& row : rows) {
    std::vector<APResult> results;
    for (const auto& [cls, ap] : row.class_ap) {
      APResult r{.cls = cls};
      r.ap = ap / 100.0;
      results.push_back(std::move(r));
    }
    for (const auto& [name, printed] : row.printed) {
      double recomputed = 0.0;
      if (name == "t4_ap") {
        recomputed = 100.0 * mean_ap(results, std::span<const ClassLabel>(top4));
      } else if (name == "map") {
        recomputed = 100.0 * mean_ap(results);
      } else {
        throw ValidationError("unknown aggregate \"" + name + "\"");
      }
      checks.push_back({row.section + " / " + row.model + " / " + row.dataset, name, recomputed,
                        printed, std::abs(recomputed - printed) <= tolerance});
    }
  }
  return checks;
}

}  // namespace shiftbench
