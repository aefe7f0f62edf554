#include "shiftbench/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "shiftbench/errors.hpp"

namespace shiftbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string canonical_name(std::string_view raw) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto first = std::find_if_not(raw.begin(), raw.end(), is_space);
  auto last = std::find_if_not(raw.rbegin(), std::make_reverse_iterator(first), is_space).base();
  std::string out(first, last);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

ClassLabel::ClassLabel(std::string_view name) : name_(canonical_name(name)) {
  if (name_.empty()) throw ValidationError("class label is empty");
}

std::string_view to_string(Split split) noexcept {
  return split == Split::train ? "train" : "test";
}

std::string_view to_string(Source source) noexcept {
  return source == Source::real ? "real" : "synthetic";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw ValidationError("unknown split \"" + std::string(text) + "\" (expected train|test)");
}

Source parse_source(std::string_view text) {
  if (text == "real") return Source::real;
  if (text == "synthetic") return Source::synthetic;
  throw ValidationError("unknown source \"" + std::string(text) + "\" (expected real|synthetic)");
}

std::uint64_t LabelDistribution::total() const noexcept {
  std::uint64_t sum = 0;
  for (const auto& [cls, n] : counts) sum += n;
  return sum;
}

std::uint64_t LabelDistribution::at(const ClassLabel& cls) const {
  auto it = counts.find(cls);
  if (it == counts.end()) throw ValidationError("class \"" + cls.name() + "\" not in distribution");
  return it->second;
}

namespace {

void check_sample(const Sample& s) {
  if (s.id.empty()) throw ValidationError("sample id is empty");
  if (s.source == Source::synthetic && !s.prompt_keywords && !s.embedding_ref) {
    throw ValidationError("synthetic sample \"" + s.id +
                          "\" needs prompt_keywords or embedding_ref");
  }
  if (s.boxes) {
    for (const auto& b : *s.boxes) {
      if (!b.box.well_formed()) {
        throw ValidationError("sample \"" + s.id + "\" has a box with x2<=x1 or y2<=y1");
      }
    }
  }
}

std::string require_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(std::string("missing \"") + key + "\"");
  if (!it->is_string()) throw ValidationError(std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

double require_number(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ValidationError(std::string("box field \"") + key + "\" must be a number");
  }
  return it->get<double>();
}

Sample sample_from_json(const json& obj) {
  static const std::unordered_set<std::string> known = {
      "id", "class", "split", "source", "prompt_keywords", "embedding_ref", "boxes"};
  if (!obj.is_object()) throw ValidationError("line is not a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) throw ValidationError("unknown field \"" + key + "\"");
  }
  Sample s{.id = require_string(obj, "id"),
           .cls = ClassLabel(require_string(obj, "class")),
           .split = parse_split(require_string(obj, "split")),
           .source = parse_source(require_string(obj, "source"))};
  if (auto it = obj.find("prompt_keywords"); it != obj.end()) {
    if (!it->is_array()) throw ValidationError("\"prompt_keywords\" must be an array");
    std::vector<std::string> words;
    for (const auto& w : *it) {
      if (!w.is_string()) throw ValidationError("\"prompt_keywords\" entries must be strings");
      words.push_back(w.get<std::string>());
    }
    s.prompt_keywords = std::move(words);
  }
  if (obj.contains("embedding_ref")) s.embedding_ref = require_string(obj, "embedding_ref");
  if (auto it = obj.find("boxes"); it != obj.end()) {
    if (!it->is_array()) throw ValidationError("\"boxes\" must be an array");
    std::vector<GroundTruthBox> boxes;
    for (const auto& b : *it) {
      if (!b.is_object()) throw ValidationError("box entries must be objects");
      boxes.push_back({ClassLabel(require_string(b, "class")),
                       Box{require_number(b, "x1"), require_number(b, "y1"),
                           require_number(b, "x2"), require_number(b, "y2")}});
    }
    s.boxes = std::move(boxes);
  }
  check_sample(s);
  return s;
}

ordered_json sample_to_json(const Sample& s) {
  ordered_json obj;
  obj["id"] = s.id;
  obj["class"] = s.cls.name();
  obj["split"] = to_string(s.split);
  obj["source"] = to_string(s.source);
  if (s.prompt_keywords) obj["prompt_keywords"] = *s.prompt_keywords;
  if (s.embedding_ref) obj["embedding_ref"] = *s.embedding_ref;
  if (s.boxes) {
    auto arr = ordered_json::array();
    for (const auto& b : *s.boxes) {
      ordered_json box;
      box["class"] = b.cls.name();
      box["x1"] = b.box.x1;
      box["y1"] = b.box.y1;
      box["x2"] = b.box.x2;
      box["y2"] = b.box.y2;
      arr.push_back(std::move(box));
    }
    obj["boxes"] = std::move(arr);
  }
  return obj;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

void validate(const DatasetManifest& manifest) {
  std::unordered_set<std::string> ids;
  for (const auto& s : manifest.samples) {
    check_sample(s);
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id \"" + s.id + "\"");
    if (!manifest.classes.contains(s.cls)) {
      throw ValidationError("sample \"" + s.id + "\" has class \"" + s.cls.name() +
                            "\" outside the manifest class set");
    }
  }
}

DatasetManifest make_manifest(std::string name, std::vector<Sample> samples) {
  DatasetManifest m{.name = std::move(name), .classes = {}, .samples = std::move(samples)};
  for (const auto& s : m.samples) m.classes.insert(s.cls);
  validate(m);
  return m;
}

DatasetManifest parse_manifest(std::string_view text, std::string name) {
  std::vector<Sample> samples;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    Sample s = [&] {
      try {
        return sample_from_json(obj);
      } catch (const ParseError&) {
        throw;
      } catch (const ValidationError& e) {
        throw ParseError(line_no, e.what());
      }
    }();
    if (!ids.insert(s.id).second) {
      throw ValidationError("duplicate sample id \"" + s.id + "\" at line " +
                            std::to_string(line_no));
    }
    samples.push_back(std::move(s));
  }
  return make_manifest(std::move(name), std::move(samples));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path), path.stem().string());
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& s : manifest.samples) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  validate(manifest);
  write_text_file_atomic(path, serialize_manifest(manifest));
}

LabelDistribution label_distribution(const DatasetManifest& manifest, Split split) {
  LabelDistribution dist;
  for (const auto& cls : manifest.classes) dist.counts.emplace(cls, 0);
  for (const auto& s : manifest.samples) {
    if (s.split == split) ++dist.counts[s.cls];
  }
  return dist;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

}  // namespace shiftbench
